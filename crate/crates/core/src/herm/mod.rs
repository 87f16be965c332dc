//! Dense complex-Hermitian linear algebra on the bipartite space `H_A ⊗ H_B`.
//!
//! Bipartite indices are flattened as `(a, b) -> a * d_loc + b`, with `a`
//! labelling Alice's factor and `b` Bob's.

mod fef;
mod mebasis;
mod random;

pub use fef::{max_me_overlap, MeOverlap};
pub use mebasis::{rotate_mebasis, weyl_bell_basis, BasisDefect, MEBasis};
pub use random::{
    chacha, haar_local_pair, haar_mes, haar_unit_vector, haar_unitary, haar_unitary_seeded,
    random_hermitian, random_mebasis, random_product_pure, random_product_pure_seeded,
    random_pure, random_state, LocalPair, RNG_NAME,
};

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{Complex, DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tol::{TOL_HERM, TOL_NORM};

pub type C64 = Complex<f64>;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

pub(crate) const ZERO: C64 = Complex { re: 0.0, im: 0.0 };
pub(crate) const ONE: C64 = Complex { re: 1.0, im: 0.0 };

/// Local and total dimension of a symmetric bipartite system.
///
/// `d_loc = dim H_A = dim H_B` and `D = d_loc²`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "DimsRepr", into = "DimsRepr")]
pub struct Dims {
    d_loc: usize,
}

#[derive(Serialize, Deserialize)]
struct DimsRepr {
    d_loc: usize,
    #[serde(rename = "D")]
    total: usize,
}

impl TryFrom<DimsRepr> for Dims {
    type Error = Error;

    fn try_from(r: DimsRepr) -> Result<Self> {
        let dims = Dims::new(r.d_loc)?;
        if dims.total() != r.total {
            return Err(Error::DimensionMismatch {
                expected: dims.total(),
                got: r.total,
            });
        }
        Ok(dims)
    }
}

impl From<Dims> for DimsRepr {
    fn from(d: Dims) -> Self {
        DimsRepr {
            d_loc: d.d_loc,
            total: d.total(),
        }
    }
}

impl Dims {
    pub fn new(d_loc: usize) -> Result<Self> {
        if d_loc < 2 {
            return Err(Error::InvalidDims(d_loc));
        }
        Ok(Dims { d_loc })
    }

    #[inline]
    pub fn d_loc(&self) -> usize {
        self.d_loc
    }

    /// Total dimension `D = d_loc²`.
    #[inline]
    pub fn total(&self) -> usize {
        self.d_loc * self.d_loc
    }

    /// Infer the bipartite split from a total dimension.
    pub fn from_total(total: usize) -> Result<Self> {
        let d = (total as f64).sqrt().round() as usize;
        if d * d != total {
            return Err(Error::InvalidDims(total));
        }
        Dims::new(d)
    }

    pub(crate) fn check(&self, dim: usize) -> Result<()> {
        if dim != self.total() {
            return Err(Error::DimensionMismatch {
                expected: self.total(),
                got: dim,
            });
        }
        Ok(())
    }
}

impl fmt::Display for Dims {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{} (D = {})", self.d_loc, self.d_loc, self.total())
    }
}

/// A complex Hermitian matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct HermMat(CMat);

fn max_asymmetry(m: &CMat) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

impl HermMat {
    /// Wrap a matrix after checking it is square and Hermitian within `TOL_HERM`
    /// (relative to its largest entry when that exceeds one).
    pub fn new(m: CMat) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::NotSquare(m.nrows(), m.ncols()));
        }
        let scale = m.iter().fold(1.0f64, |acc, z| acc.max(z.norm()));
        let asym = max_asymmetry(&m);
        if asym > TOL_HERM * scale {
            return Err(Error::NotHermitian(asym));
        }
        Ok(Self::hermitian_part(m))
    }

    /// `(m + m†) / 2`. Used after products whose exact result is Hermitian.
    pub fn hermitian_part(m: CMat) -> Self {
        assert_eq!(m.nrows(), m.ncols(), "hermitian_part needs a square matrix");
        let adj = m.adjoint();
        HermMat((m + adj) * Complex::new(0.5, 0.0))
    }

    pub fn zeros(dim: usize) -> Self {
        HermMat(CMat::zeros(dim, dim))
    }

    pub fn identity(dim: usize) -> Self {
        HermMat(CMat::identity(dim, dim))
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut m = CMat::zeros(n, n);
        for (i, &v) in diag.iter().enumerate() {
            m[(i, i)] = Complex::new(v, 0.0);
        }
        HermMat(m)
    }

    /// `|v⟩⟨v|`.
    pub fn projector(v: &PureVec) -> Self {
        let a = v.amplitudes();
        HermMat::hermitian_part(a * a.adjoint())
    }

    /// `Σ_k w_k |v_k⟩⟨v_k|` for real weights.
    pub fn weighted_projectors<'a>(
        dim: usize,
        terms: impl IntoIterator<Item = (f64, &'a PureVec)>,
    ) -> Self {
        let mut m = CMat::zeros(dim, dim);
        for (w, v) in terms {
            let a = v.amplitudes();
            for j in 0..dim {
                let cj = a[j].conj() * w;
                for i in 0..dim {
                    m[(i, j)] += a[i] * cj;
                }
            }
        }
        HermMat::hermitian_part(m)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    #[inline]
    pub fn matrix(&self) -> &CMat {
        &self.0
    }

    pub fn into_matrix(self) -> CMat {
        self.0
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|i| self.0[(i, i)].re).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &HermMat) -> f64 {
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// `⟨v|x|v⟩`.
    pub fn quad_form(&self, v: &PureVec) -> f64 {
        let a = v.amplitudes();
        let n = self.dim();
        let mut acc = 0.0;
        for j in 0..n {
            let mut col = ZERO;
            for i in 0..n {
                col += a[i].conj() * self.0[(i, j)];
            }
            acc += (col * a[j]).re;
        }
        acc
    }

    pub fn scale(&self, s: f64) -> HermMat {
        HermMat(&self.0 * Complex::new(s, 0.0))
    }

    /// `U x U†`, Hermitian by construction.
    pub fn conjugate_by(&self, u: &CMat) -> HermMat {
        HermMat::hermitian_part(u * &self.0 * u.adjoint())
    }

    /// `U† x U`.
    pub fn conjugate_by_adjoint(&self, u: &CMat) -> HermMat {
        HermMat::hermitian_part(u.adjoint() * &self.0 * u)
    }
}

impl Add for &HermMat {
    type Output = HermMat;
    fn add(self, rhs: &HermMat) -> HermMat {
        HermMat(&self.0 + &rhs.0)
    }
}

impl Sub for &HermMat {
    type Output = HermMat;
    fn sub(self, rhs: &HermMat) -> HermMat {
        HermMat(&self.0 - &rhs.0)
    }
}

impl Neg for &HermMat {
    type Output = HermMat;
    fn neg(self) -> HermMat {
        HermMat(-&self.0)
    }
}

impl Mul<f64> for &HermMat {
    type Output = HermMat;
    fn mul(self, s: f64) -> HermMat {
        self.scale(s)
    }
}

/// A unit vector in `C^D`.
#[derive(Debug, Clone, PartialEq)]
pub struct PureVec(CVec);

impl PureVec {
    /// Wrap an already-normalized vector.
    pub fn new(v: CVec) -> Result<Self> {
        let n = v.norm();
        if (n - 1.0).abs() > TOL_NORM {
            return Err(Error::NotNormalized(n));
        }
        Ok(PureVec(v))
    }

    /// Normalize `v`; fails on the zero vector.
    pub fn normalized(v: CVec) -> Result<Self> {
        let n = v.norm();
        if n.partial_cmp(&f64::MIN_POSITIVE) != Some(std::cmp::Ordering::Greater) || !n.is_finite() {
            return Err(Error::NotNormalized(n));
        }
        Ok(PureVec(v.unscale(n)))
    }

    pub fn basis(dim: usize, k: usize) -> Self {
        let mut v = CVec::zeros(dim);
        v[k] = ONE;
        PureVec(v)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    #[inline]
    pub fn amplitudes(&self) -> &CVec {
        &self.0
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &PureVec) -> C64 {
        self.0.dotc(&other.0)
    }

    /// `|self⟩ ⊗ |other⟩`.
    pub fn kron(&self, other: &PureVec) -> PureVec {
        PureVec(self.0.kronecker(&other.0))
    }

    /// Fix the global phase so the first non-negligible amplitude is real positive.
    pub fn with_canonical_phase(mut self) -> Self {
        if let Some(z) = self.0.iter().find(|z| z.norm() > 1e-8).copied() {
            let phase = z.conj() / z.norm();
            self.0.iter_mut().for_each(|a| *a *= phase);
        }
        self
    }

    /// Coefficient matrix `M_ab = ⟨a b|v⟩` of a bipartite vector.
    pub fn coefficient_matrix(&self, dims: Dims) -> Result<CMat> {
        dims.check(self.dim())?;
        let d = dims.d_loc();
        Ok(CMat::from_fn(d, d, |a, b| self.0[a * d + b]))
    }

    /// Vector with amplitudes `⟨a b|v⟩ = M_ab`.
    pub fn from_coefficient_matrix(m: &CMat) -> Result<Self> {
        let (da, db) = m.shape();
        let v = CVec::from_fn(da * db, |k, _| m[(k / db, k % db)]);
        PureVec::normalized(v)
    }

    /// Largest deviation of either reduced state from `I/d_loc`.
    pub fn entanglement_deviation(&self, dims: Dims) -> Result<f64> {
        let m = self.coefficient_matrix(dims)?;
        let d = dims.d_loc();
        let target = CMat::identity(d, d) * Complex::new(1.0 / d as f64, 0.0);
        let ra = &m * m.adjoint();
        let rb = m.transpose() * m.conjugate();
        let da = (ra - &target).iter().map(|z| z.norm()).fold(0.0, f64::max);
        let db = (rb - &target).iter().map(|z| z.norm()).fold(0.0, f64::max);
        Ok(da.max(db))
    }
}

/// Kronecker product `a ⊗ b`.
pub fn tensor(a: &HermMat, b: &HermMat) -> HermMat {
    HermMat(a.0.kronecker(&b.0))
}

/// `Tr(x y)`, real for Hermitian arguments.
pub fn trace_inner(x: &HermMat, y: &HermMat) -> Result<f64> {
    if x.dim() != y.dim() {
        return Err(Error::DimensionMismatch {
            expected: x.dim(),
            got: y.dim(),
        });
    }
    Ok(trace_inner_unchecked(x, y))
}

pub(crate) fn trace_inner_unchecked(x: &HermMat, y: &HermMat) -> f64 {
    // Tr(xy) = Σ_ij x_ij y_ji = Σ_ij x_ij conj(y_ij) for Hermitian y
    x.0.iter()
        .zip(y.0.iter())
        .map(|(a, b)| a.re * b.re + a.im * b.im)
        .sum()
}

/// Partial transpose on Bob's factor.
pub fn partial_transpose(x: &HermMat, dims: Dims) -> Result<HermMat> {
    dims.check(x.dim())?;
    let d = dims.d_loc();
    let n = dims.total();
    let mut out = CMat::zeros(n, n);
    for a in 0..d {
        for b in 0..d {
            for a2 in 0..d {
                for b2 in 0..d {
                    out[(a * d + b, a2 * d + b2)] = x.0[(a * d + b2, a2 * d + b)];
                }
            }
        }
    }
    Ok(HermMat(out))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Factor {
    A,
    B,
}

/// Trace out one factor, returning a `d_loc × d_loc` matrix.
pub fn partial_trace(x: &HermMat, dims: Dims, factor: Factor) -> Result<HermMat> {
    dims.check(x.dim())?;
    let d = dims.d_loc();
    let mut out = CMat::zeros(d, d);
    for i in 0..d {
        for j in 0..d {
            let mut acc = ZERO;
            for k in 0..d {
                acc += match factor {
                    Factor::B => x.0[(i * d + k, j * d + k)],
                    Factor::A => x.0[(k * d + i, k * d + j)],
                };
            }
            out[(i, j)] = acc;
        }
    }
    Ok(HermMat(out))
}

/// Spectral decomposition with eigenvalues in descending order.
#[derive(Debug, Clone)]
pub struct Eigen {
    pub values: Vec<f64>,
    pub vectors: Vec<PureVec>,
}

impl Eigen {
    pub fn min(&self) -> (f64, &PureVec) {
        let last = self.values.len() - 1;
        (self.values[last], &self.vectors[last])
    }

    pub fn max(&self) -> (f64, &PureVec) {
        (self.values[0], &self.vectors[0])
    }

    pub fn reconstruct(&self) -> HermMat {
        HermMat::weighted_projectors(
            self.vectors[0].dim(),
            self.values.iter().copied().zip(self.vectors.iter()),
        )
    }
}

const EIG_MAX_SWEEPS: usize = 100_000;

/// Hermitian eigendecomposition. Non-convergence is an error.
pub fn eig_h(x: &HermMat) -> Result<Eigen> {
    let n = x.dim();
    let se = SymmetricEigen::try_new(x.0.clone(), f64::EPSILON, EIG_MAX_SWEEPS)
        .ok_or(Error::EigenFailure(n))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| se.eigenvalues[j].total_cmp(&se.eigenvalues[i]));
    let values = order.iter().map(|&i| se.eigenvalues[i]).collect();
    let vectors = order
        .iter()
        .map(|&i| {
            let col: CVec = se.eigenvectors.column(i).into_owned();
            PureVec::normalized(col).map(PureVec::with_canonical_phase)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Eigen { values, vectors })
}

/// Eigenvalues only, descending.
pub fn eigenvalues(x: &HermMat) -> Result<Vec<f64>> {
    eig_h(x).map(|e| e.values)
}

/// `Σ |λ_i|`.
pub fn trace_norm_of(x: &HermMat) -> Result<f64> {
    Ok(eigenvalues(x)?.iter().map(|v| v.abs()).sum())
}

/// `|Φ+⟩ = d^{-1/2} Σ_i |i i⟩`.
pub fn phi_plus(dims: Dims) -> PureVec {
    let d = dims.d_loc();
    let amp = Complex::new(1.0 / (d as f64).sqrt(), 0.0);
    let mut v = CVec::zeros(dims.total());
    for i in 0..d {
        v[i * d + i] = amp;
    }
    PureVec(v)
}

/// Polar factor `W V†` of `M = W Σ V†`, the unitary maximizing `Re Tr(M† U)`.
pub(crate) fn polar_unitary(m: &CMat) -> Result<CMat> {
    let n = m.nrows();
    let svd = m.clone().try_svd(true, true, f64::EPSILON, 0).ok_or(Error::SvdFailure(n))?;
    let u = svd.u.ok_or(Error::SvdFailure(n))?;
    let v_t = svd.v_t.ok_or(Error::SvdFailure(n))?;
    Ok(u * v_t)
}

/// Largest entrywise deviation of `U U†` from the identity.
pub fn unitarity_defect(u: &CMat) -> f64 {
    let n = u.nrows();
    let p = u * u.adjoint();
    let id = CMat::identity(n, n);
    (p - id).iter().map(|z| z.norm()).fold(0.0, f64::max)
}
