use nalgebra::Complex;

use super::random::LocalPair;
use super::{phi_plus, CMat, CVec, Dims, HermMat, PureVec};
use crate::error::{Error, Result};

/// An ordered orthonormal basis of `d_loc²` maximally entangled vectors,
/// i.e. one element `{E_k = |ψ_k⟩⟨ψ_k|}` of MEOP(A;B).
///
/// The unit vectors `|ψ_k⟩` are stored with the canonical phase (first
/// non-negligible amplitude real positive); projectors are formed on demand.
#[derive(Debug, Clone, PartialEq)]
pub struct MEBasis {
    dims: Dims,
    vectors: Vec<PureVec>,
}

/// Worst-case deviations from the defining properties of an [`MEBasis`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BasisDefect {
    /// `max |Tr E_k E_l − δ_kl|`.
    pub orthonormality: f64,
    /// `max |(Σ_k E_k − I)_ij|`.
    pub completeness: f64,
    /// `max` deviation of a reduced state from `I/d_loc`.
    pub entanglement: f64,
    /// `max |‖ψ_k‖ − 1|`, equivalently the idempotency defect of `E_k`.
    pub projector: f64,
}

impl BasisDefect {
    pub fn worst(&self) -> f64 {
        self.orthonormality
            .max(self.completeness)
            .max(self.entanglement)
            .max(self.projector)
    }
}

impl MEBasis {
    /// Validate and wrap `d_loc²` vectors, checking every invariant to `1e-10`.
    pub fn from_vectors(dims: Dims, vectors: Vec<PureVec>) -> Result<Self> {
        let basis = Self::from_vectors_unchecked(dims, vectors)?;
        basis.validate(1e-10)?;
        Ok(basis)
    }

    pub(crate) fn from_vectors_unchecked(dims: Dims, vectors: Vec<PureVec>) -> Result<Self> {
        if vectors.len() != dims.total() {
            return Err(Error::InvalidBasis(format!(
                "expected {} vectors, got {}",
                dims.total(),
                vectors.len()
            )));
        }
        for v in &vectors {
            dims.check(v.dim())?;
        }
        let vectors = vectors.into_iter().map(PureVec::with_canonical_phase).collect();
        Ok(MEBasis { dims, vectors })
    }

    #[inline]
    pub fn dims(&self) -> Dims {
        self.dims
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// `|ψ_k⟩`, zero-based.
    pub fn vector(&self, k: usize) -> &PureVec {
        &self.vectors[k]
    }

    pub fn vectors(&self) -> &[PureVec] {
        &self.vectors
    }

    /// `E_k = |ψ_k⟩⟨ψ_k|`, zero-based.
    pub fn projector(&self, k: usize) -> HermMat {
        HermMat::projector(&self.vectors[k])
    }

    pub fn projectors(&self) -> Vec<HermMat> {
        self.vectors.iter().map(HermMat::projector).collect()
    }

    /// `Tr(x E_k)` for every member.
    pub fn overlaps(&self, x: &HermMat) -> Vec<f64> {
        self.vectors.iter().map(|v| x.quad_form(v)).collect()
    }

    pub fn defect(&self) -> BasisDefect {
        let n = self.vectors.len();
        let dim = self.dims.total();
        let mut orth = 0.0f64;
        for k in 0..n {
            for l in k..n {
                let g = self.vectors[k].inner(&self.vectors[l]).norm_sqr();
                let target = if k == l { 1.0 } else { 0.0 };
                orth = orth.max((g - target).abs());
            }
        }
        let sum = HermMat::weighted_projectors(dim, self.vectors.iter().map(|v| (1.0, v)));
        let completeness = sum.max_abs_diff(&HermMat::identity(dim));
        let entanglement = self
            .vectors
            .iter()
            .map(|v| v.entanglement_deviation(self.dims).unwrap_or(f64::INFINITY))
            .fold(0.0, f64::max);
        let projector = self
            .vectors
            .iter()
            .map(|v| (v.amplitudes().norm() - 1.0).abs())
            .fold(0.0, f64::max);
        BasisDefect {
            orthonormality: orth,
            completeness,
            entanglement,
            projector,
        }
    }

    pub fn validate(&self, tol: f64) -> Result<()> {
        let d = self.defect();
        if d.worst() > tol {
            return Err(Error::InvalidBasis(format!("{d:?} exceeds tolerance {tol:e}")));
        }
        Ok(())
    }

    /// Conjugate every member by `U_A ⊗ U_B`: `|ψ_k⟩ ↦ (U_A ⊗ U_B)|ψ_k⟩`.
    pub fn rotate(&self, pair: &LocalPair) -> MEBasis {
        self.map_vectors(&pair.kron())
    }

    /// Apply a global unitary to every member vector. The result is generally
    /// not maximally entangled; callers re-validate when that matters.
    pub(crate) fn map_vectors(&self, u: &CMat) -> MEBasis {
        let vectors = self
            .vectors
            .iter()
            .map(|v| {
                PureVec::normalized(u * v.amplitudes())
                    .expect("unitary image of a unit vector is nonzero")
                    .with_canonical_phase()
            })
            .collect();
        MEBasis {
            dims: self.dims,
            vectors,
        }
    }

    /// Reorder: member `k` of the result is member `order[k]` of `self`.
    pub fn permuted(&self, order: &[usize]) -> MEBasis {
        assert_eq!(order.len(), self.vectors.len());
        MEBasis {
            dims: self.dims,
            vectors: order.iter().map(|&i| self.vectors[i].clone()).collect(),
        }
    }

    /// Move members `first` and `second` to positions 1 and 2, keeping the
    /// relative order of the rest.
    pub fn with_leading(&self, first: usize, second: usize) -> MEBasis {
        assert_ne!(first, second);
        let mut order = vec![first, second];
        order.extend((0..self.vectors.len()).filter(|&k| k != first && k != second));
        self.permuted(&order)
    }
}

/// LU action on a family: every projector conjugated by `U_A ⊗ U_B`.
pub fn rotate_mebasis(basis: &MEBasis, pair: &LocalPair) -> MEBasis {
    basis.rotate(pair)
}

/// Generalized Bell basis `|Φ_{m,n}⟩ = (X^m Z^n ⊗ I)|Φ+⟩`, ordered by
/// `k = m·d_loc + n`; member 0 is `|Φ+⟩`.
pub fn weyl_bell_basis(dims: Dims) -> MEBasis {
    let d = dims.d_loc();
    let norm = 1.0 / (d as f64).sqrt();
    let omega = |p: usize| {
        let t = 2.0 * std::f64::consts::PI * (p % d) as f64 / d as f64;
        Complex::new(t.cos(), t.sin())
    };
    let mut vectors = Vec::with_capacity(d * d);
    for m in 0..d {
        for n in 0..d {
            let mut v = CVec::zeros(d * d);
            for b in 0..d {
                let a = (b + m) % d;
                v[a * d + b] = omega(n * b) * norm;
            }
            vectors.push(PureVec::new(v).expect("Weyl vectors are normalized"));
        }
    }
    debug_assert_eq!(vectors[0], phi_plus(dims));
    MEBasis::from_vectors_unchecked(dims, vectors).expect("Weyl basis has d² members")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::herm::{chacha, haar_local_pair, partial_trace, trace_inner, Factor};

    #[test]
    fn bell_basis_gram_is_identity() {
        let dims = Dims::new(2).unwrap();
        let b = weyl_bell_basis(dims);
        let p = b.projectors();
        for k in 0..4 {
            for l in 0..4 {
                let g = trace_inner(&p[k], &p[l]).unwrap();
                let want = if k == l { 1.0 } else { 0.0 };
                assert!((g - want).abs() < 1e-14, "Gram[{k}][{l}] = {g}");
            }
        }
        let sum = p.iter().fold(HermMat::zeros(4), |acc, e| &acc + e);
        assert!(sum.max_abs_diff(&HermMat::identity(4)) < 1e-14);
        let half = HermMat::identity(2).scale(0.5);
        for e in &p {
            for f in [Factor::A, Factor::B] {
                assert!(partial_trace(e, dims, f).unwrap().max_abs_diff(&half) < 1e-14);
            }
        }
    }

    #[test]
    fn bell_basis_members_are_the_four_bell_states() {
        let dims = Dims::new(2).unwrap();
        let b = weyl_bell_basis(dims);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let expect = [
            [s, 0.0, 0.0, s],
            [s, 0.0, 0.0, -s],
            [0.0, s, s, 0.0],
            [0.0, s, -s, 0.0],
        ];
        for (k, e) in expect.iter().enumerate() {
            for (i, &want) in e.iter().enumerate() {
                let z = b.vector(k).amplitudes()[i];
                assert!((z.re - want).abs() < 1e-15 && z.im.abs() < 1e-15, "k={k} i={i} z={z}");
            }
        }
    }

    #[test]
    fn weyl_basis_valid_up_to_dloc_9() {
        for d in 2..=9 {
            let b = weyl_bell_basis(Dims::new(d).unwrap());
            assert!(b.defect().worst() < 1e-12, "d_loc = {d}: {:?}", b.defect());
        }
    }

    #[test]
    fn rotation_preserves_invariants_and_inner_products() {
        let dims = Dims::new(3).unwrap();
        let b = weyl_bell_basis(dims);
        let same = b.rotate(&LocalPair::identity(dims));
        assert!(same
            .vectors()
            .iter()
            .zip(b.vectors())
            .all(|(x, y)| (x.inner(y).norm() - 1.0).abs() < 1e-14));
        let mut rng = chacha(2);
        let pair = haar_local_pair(dims, &mut rng);
        let r = b.rotate(&pair);
        assert!(r.defect().worst() < 1e-12);
        let (p, q) = (b.projectors(), r.projectors());
        for k in 0..9 {
            for l in 0..9 {
                let a = trace_inner(&p[k], &p[l]).unwrap();
                let c = trace_inner(&q[k], &q[l]).unwrap();
                assert!((a - c).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn from_vectors_rejects_product_basis() {
        let dims = Dims::new(2).unwrap();
        let vs = (0..4).map(|k| PureVec::basis(4, k)).collect();
        assert!(matches!(
            MEBasis::from_vectors(dims, vs),
            Err(Error::InvalidBasis(_))
        ));
        assert!(MEBasis::from_vectors(dims, vec![PureVec::basis(4, 0)]).is_err());
    }

    #[test]
    fn with_leading_reorders() {
        let b = weyl_bell_basis(Dims::new(2).unwrap());
        let r = b.with_leading(3, 1);
        assert_eq!(r.vector(0), b.vector(3));
        assert_eq!(r.vector(1), b.vector(1));
        assert_eq!(r.vector(2), b.vector(0));
        assert_eq!(r.vector(3), b.vector(2));
    }
}
