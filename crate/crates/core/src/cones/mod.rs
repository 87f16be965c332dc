//! Cone specifications and membership oracles.
//!
//! Every oracle returns a [`MembershipVerdict`]. An `Outside` verdict always
//! carries a witness whose re-evaluation against the input reproduces the
//! reported (negative) violation; `Inside` verdicts say whether they are
//! certified or only the outcome of a bounded search.

mod hierarchy;
mod npm;
mod oracles;
mod primal;

pub use hierarchy::{hierarchy_witness, HierarchyWitness};
pub use npm::{
    kr0_dual_membership, npm_dual_membership, npm_element, npm_search, npm_value, NpmSearch,
};
pub use oracles::{
    is_block_positive, is_block_positive_default, is_psd, is_ppt_separable, min_product_value,
    ProductMin, BLOCK_POSITIVE_ITERS, BLOCK_POSITIVE_RESTARTS,
};
pub use primal::{conic_decompose, k0_membership, kr_membership, Decomposition};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::herm::{partial_transpose, trace_inner_unchecked, Dims, HermMat, MEBasis, PureVec};
use crate::tol::TOL;

/// `r_0 = (√(2D) − 2)/4`, the largest parameter for which NPM_r elements are
/// pairwise non-negative under the trace inner product.
pub fn r0(dims: Dims) -> f64 {
    ((2.0 * dims.total() as f64).sqrt() - 2.0) / 4.0
}

/// `(√D − 1)/2`: NPM_r lies in SEP* for `r` up to this radius.
pub fn con1_radius(dims: Dims) -> f64 {
    ((dims.total() as f64).sqrt() - 1.0) / 2.0
}

/// Lower bound `−2(r + ½)² + D/4` on `Tr(xy)` for two NPM_r elements.
pub fn con2_floor(r: f64, dims: Dims) -> f64 {
    -2.0 * (r + 0.5).powi(2) + dims.total() as f64 / 4.0
}

/// Slack allowed when comparing a user-supplied `r` against `r_0`.
const R_SLACK: f64 = 1e-12;

pub(crate) fn check_r(r: f64, dims: Dims) -> Result<()> {
    let hi = r0(dims);
    if r.is_finite() && r >= 0.0 && r <= hi + R_SLACK {
        Ok(())
    } else {
        Err(Error::ParameterOutOfRange {
            name: "r",
            value: r,
            lo: 0.0,
            hi,
        })
    }
}

/// A subset `P ⊂ MEOP(A;B)`.
#[derive(Debug, Clone, PartialEq)]
pub enum FamilySpec {
    /// An explicit list of ordered bases, enumerated exactly.
    Finite(Vec<MEBasis>),
    /// All of MEOP(A;B), explored by sampling `sample_budget` bases.
    FullMeop { sample_budget: usize, seed: u64 },
}

/// Default number of bases sampled for [`FamilySpec::FullMeop`].
pub const DEFAULT_SAMPLE_BUDGET: usize = 1024;

impl FamilySpec {
    pub fn finite(bases: Vec<MEBasis>) -> Result<Self> {
        let first = bases
            .first()
            .ok_or_else(|| Error::InvalidBasis("finite family must be nonempty".into()))?;
        let dims = first.dims();
        if let Some(b) = bases.iter().find(|b| b.dims() != dims) {
            return Err(Error::DimensionMismatch {
                expected: dims.total(),
                got: b.dims().total(),
            });
        }
        Ok(FamilySpec::Finite(bases))
    }

    pub fn full_meop(sample_budget: usize, seed: u64) -> Result<Self> {
        if sample_budget == 0 {
            return Err(Error::MalformedParam {
                name: "sample_budget".into(),
                reason: "must be at least 1".into(),
            });
        }
        Ok(FamilySpec::FullMeop {
            sample_budget,
            seed,
        })
    }

    pub fn is_exhaustive(&self) -> bool {
        matches!(self, FamilySpec::Finite(_))
    }

    pub(crate) fn check_dims(&self, dims: Dims) -> Result<()> {
        if let FamilySpec::Finite(bases) = self {
            for b in bases {
                if b.dims() != dims {
                    return Err(Error::DimensionMismatch {
                        expected: dims.total(),
                        got: b.dims().total(),
                    });
                }
            }
        }
        Ok(())
    }
}

/// Symbolic description of a cone.
#[derive(Debug, Clone, PartialEq)]
pub enum ConeKind {
    /// Positive semidefinite matrices.
    Ses,
    /// Block-positive matrices.
    SepDual,
    /// Partial transposes of positive semidefinite matrices.
    GammaSes,
    /// Conic hull of NPM_r(P).
    NpmCone(f64, FamilySpec),
    /// `SES + cone(NPM_r(P))`.
    Kr0(f64, FamilySpec),
    /// Dual of `Kr0`.
    Kr0Dual(f64, FamilySpec),
    /// `(Kr0* + NPM_r(P))* = Kr0 ∩ NPM_r(P)*`.
    Kr(f64, FamilySpec),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConeSpec {
    kind: ConeKind,
    dims: Dims,
}

/// Search budgets for the heuristic parts of [`ConeSpec::membership`].
#[derive(Debug, Clone, Copy)]
pub struct OracleOptions {
    pub restarts: usize,
    pub iters: usize,
    pub seed: u64,
}

impl Default for OracleOptions {
    fn default() -> Self {
        OracleOptions {
            restarts: BLOCK_POSITIVE_RESTARTS,
            iters: BLOCK_POSITIVE_ITERS,
            seed: 0,
        }
    }
}

impl ConeSpec {
    pub fn new(kind: ConeKind, dims: Dims) -> Result<Self> {
        match &kind {
            ConeKind::NpmCone(r, f)
            | ConeKind::Kr0(r, f)
            | ConeKind::Kr0Dual(r, f)
            | ConeKind::Kr(r, f) => {
                check_r(*r, dims)?;
                f.check_dims(dims)?;
            }
            _ => {}
        }
        Ok(ConeSpec { kind, dims })
    }

    pub fn kind(&self) -> &ConeKind {
        &self.kind
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn membership(&self, x: &HermMat, opts: OracleOptions) -> Result<MembershipVerdict> {
        self.dims.check(x.dim())?;
        match &self.kind {
            ConeKind::Ses => is_psd(x),
            ConeKind::SepDual => {
                is_block_positive(x, self.dims, opts.restarts, opts.iters, opts.seed)
            }
            ConeKind::GammaSes => {
                // x ∈ Γ(SES) iff Γ(x) ⪰ 0; a witness v for Γ(x) maps to Γ(|v⟩⟨v|) for x
                let v = is_psd(&partial_transpose(x, self.dims)?)?;
                Ok(v.map_witness(|w| match &w.kind {
                    WitnessKind::Vector(p) => {
                        let m = partial_transpose(&HermMat::projector(p), self.dims)
                            .expect("dims checked");
                        Witness::matrix(x, m)
                    }
                    WitnessKind::Matrix(m) => Witness::matrix(x, m.clone()),
                }))
            }
            ConeKind::NpmCone(r, f) => primal::npm_cone_membership(x, *r, f, self.dims),
            ConeKind::Kr0(r, f) => k0_membership(x, *r, f, self.dims),
            ConeKind::Kr0Dual(r, f) => kr0_dual_membership(x, *r, f),
            ConeKind::Kr(r, f) => kr_membership(x, *r, f, self.dims, opts),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Status {
    Inside,
    Outside,
    Undecided,
}

/// Evidence backing a verdict.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Certificate {
    /// Minimum eigenvalue of the input.
    Spectral { min_eigenvalue: f64 },
    /// Peres–Horodecki test, exact for `D ≤ 6`.
    PptExact { min_pt_eigenvalue: f64 },
    /// Every NPM generator of a finite family checked at both `λ` endpoints.
    ExhaustiveFamily { bases: usize, min_value: f64 },
    /// Bounded sampling of MEOP(A;B); not a proof.
    Sampled { bases: usize, min_value: f64 },
    /// Alternating minimization over product vectors; not a proof.
    AlternatingMinimization {
        restarts: usize,
        iters: usize,
        min_value: f64,
    },
    /// `x = σ + Σ c_i N_i + R` with `σ ⪰ 0`, `c_i ≥ 0` and residual `‖R‖_F`.
    Decomposition {
        coefficients: Vec<f64>,
        psd_min_eigenvalue: f64,
        residual: f64,
    },
    All(Vec<Certificate>),
}

impl Certificate {
    /// Whether the certificate is a proof (up to floating point).
    pub fn is_exact(&self) -> bool {
        match self {
            Certificate::Spectral { .. }
            | Certificate::PptExact { .. }
            | Certificate::ExhaustiveFamily { .. }
            | Certificate::Decomposition { .. } => true,
            Certificate::Sampled { .. } | Certificate::AlternatingMinimization { .. } => false,
            Certificate::All(v) => v.iter().all(Certificate::is_exact),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum WitnessKind {
    /// Evaluated as `Tr(x W)`.
    Matrix(HermMat),
    /// Evaluated as `⟨v|x|v⟩`.
    Vector(PureVec),
}

/// A separating element together with its value on the tested input.
#[derive(Debug, Clone, PartialEq)]
pub struct Witness {
    pub kind: WitnessKind,
    pub violation: f64,
}

impl Witness {
    pub fn vector(x: &HermMat, v: PureVec) -> Self {
        let violation = x.quad_form(&v);
        Witness {
            kind: WitnessKind::Vector(v),
            violation,
        }
    }

    pub fn matrix(x: &HermMat, w: HermMat) -> Self {
        let violation = trace_inner_unchecked(x, &w);
        Witness {
            kind: WitnessKind::Matrix(w),
            violation,
        }
    }

    /// Value of the witness functional on `x`.
    pub fn evaluate(&self, x: &HermMat) -> f64 {
        match &self.kind {
            WitnessKind::Matrix(w) => trace_inner_unchecked(x, w),
            WitnessKind::Vector(v) => x.quad_form(v),
        }
    }
}

/// Return contract of every membership oracle.
#[derive(Debug, Clone, PartialEq)]
pub struct MembershipVerdict {
    pub status: Status,
    pub certificate: Option<Certificate>,
    pub witness: Option<Witness>,
    pub bound: Option<f64>,
}

impl MembershipVerdict {
    pub fn inside(certificate: Certificate, bound: f64) -> Self {
        MembershipVerdict {
            status: Status::Inside,
            certificate: Some(certificate),
            witness: None,
            bound: Some(bound),
        }
    }

    /// An `Outside` verdict. Panics if the witness does not violate by more
    /// than `TOL`; callers only build these after checking.
    pub fn outside(witness: Witness) -> Self {
        assert!(
            witness.violation < -TOL,
            "outside verdict with non-violating witness ({})",
            witness.violation
        );
        MembershipVerdict {
            status: Status::Outside,
            certificate: None,
            bound: Some(witness.violation),
            witness: Some(witness),
        }
    }

    pub fn undecided(certificate: Option<Certificate>, bound: Option<f64>) -> Self {
        MembershipVerdict {
            status: Status::Undecided,
            certificate,
            witness: None,
            bound,
        }
    }

    pub fn is_inside(&self) -> bool {
        self.status == Status::Inside
    }

    pub fn is_outside(&self) -> bool {
        self.status == Status::Outside
    }

    /// Inside with an exact certificate.
    pub fn is_certified_inside(&self) -> bool {
        self.is_inside() && self.certificate.as_ref().is_some_and(Certificate::is_exact)
    }

    pub(crate) fn map_witness(mut self, f: impl FnOnce(&Witness) -> Witness) -> Self {
        if let Some(w) = self.witness.take() {
            let nw = f(&w);
            self.bound = Some(nw.violation);
            self.witness = Some(nw);
        }
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::herm::weyl_bell_basis;

    #[test]
    fn constants_for_two_and_three_qubits() {
        let d2 = Dims::new(2).unwrap();
        assert!((r0(d2) - 0.207_106_781_186_547_5).abs() < 1e-15);
        assert!((con1_radius(d2) - 0.5).abs() < 1e-15);
        assert!(con2_floor(r0(d2), d2).abs() < 1e-15);
        let d3 = Dims::new(3).unwrap();
        assert!((r0(d3) - (18f64.sqrt() - 2.0) / 4.0).abs() < 1e-15);
        assert!((r0(d3) - 0.560_660_2).abs() < 1e-7);
        assert!(con2_floor(r0(d3), d3).abs() < 1e-14);
    }

    #[test]
    fn r0_never_exceeds_con1_radius() {
        for d in 2..=9 {
            let dims = Dims::new(d).unwrap();
            assert!(r0(dims) <= con1_radius(dims));
        }
    }

    #[test]
    fn cone_spec_validates_r() {
        let dims = Dims::new(2).unwrap();
        let fam = FamilySpec::finite(vec![weyl_bell_basis(dims)]).unwrap();
        assert!(ConeSpec::new(ConeKind::Kr0(0.1, fam.clone()), dims).is_ok());
        assert!(ConeSpec::new(ConeKind::Kr0(r0(dims), fam.clone()), dims).is_ok());
        assert!(ConeSpec::new(ConeKind::Kr0(0.3, fam.clone()), dims).is_err());
        assert!(ConeSpec::new(ConeKind::Kr0Dual(-0.1, fam), dims).is_err());
        assert!(FamilySpec::finite(vec![]).is_err());
        assert!(FamilySpec::full_meop(0, 1).is_err());
        let other = FamilySpec::finite(vec![weyl_bell_basis(Dims::new(3).unwrap())]).unwrap();
        assert!(ConeSpec::new(ConeKind::Kr(0.1, other), dims).is_err());
    }

    #[test]
    fn gamma_ses_membership() {
        let dims = Dims::new(2).unwrap();
        let spec = ConeSpec::new(ConeKind::GammaSes, dims).unwrap();
        let e = weyl_bell_basis(dims).projector(0);
        // Φ+ itself is not a partial transpose of a PSD matrix
        let v = spec.membership(&e, OracleOptions::default()).unwrap();
        assert!(v.is_outside());
        let w = v.witness.unwrap();
        assert!((w.evaluate(&e) - w.violation).abs() < 1e-12);
        assert!((w.violation + 0.5).abs() < 1e-12);
        let g = partial_transpose(&e, dims).unwrap();
        assert!(spec.membership(&g, OracleOptions::default()).unwrap().is_certified_inside());
    }
}
