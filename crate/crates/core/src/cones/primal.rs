//! Primal-side membership by alternating projection.
//!
//! Feasibility of `x = σ + Σ_i c_i G_i` (`σ ⪰ 0` or `σ = 0`, `c_i ≥ 0`) is
//! searched by alternating between the affine solution set and the product
//! cone. When the search stalls with a gap `(Λ, t)`, the matrix `−Λ` is
//! (up to rounding) a dual element separating `x`; it is repaired into an
//! exact dual element and returned as the witness.

use nalgebra::{Complex, DMatrix, DVector};

use super::{
    check_r, is_block_positive, npm_dual_membership, npm_element, Certificate, FamilySpec,
    MembershipVerdict, OracleOptions, Status, Witness,
};
use crate::error::{Error, Result};
use crate::herm::{eig_h, trace_inner_unchecked, Dims, HermMat};
use crate::tol::TOL;

const MAX_ITERS: usize = 5000;

/// A primal decomposition `x ≈ σ + Σ c_i G_i`.
#[derive(Debug, Clone)]
pub struct Decomposition {
    pub sigma: HermMat,
    pub coefficients: Vec<f64>,
    /// `‖x − σ − Σ c_i G_i‖_F`.
    pub residual: f64,
    pub iterations: usize,
    /// Separating dual element when the search stalled away from feasibility.
    pub dual: Option<HermMat>,
}

fn combine(sigma: &HermMat, c: &[f64], gens: &[HermMat]) -> HermMat {
    let mut m = sigma.matrix().clone();
    for (ci, g) in c.iter().zip(gens) {
        m += g.matrix() * Complex::new(*ci, 0.0);
    }
    HermMat::hermitian_part(m)
}

fn psd_part(x: &HermMat) -> Result<(HermMat, f64)> {
    let eig = eig_h(x)?;
    let lmin = eig.min().0;
    let p = HermMat::weighted_projectors(
        x.dim(),
        eig.values
            .iter()
            .zip(&eig.vectors)
            .filter(|(v, _)| **v > 0.0)
            .map(|(v, p)| (*v, p)),
    );
    Ok((p, lmin))
}

/// Search for `x = σ + Σ c_i G_i` with `c ≥ 0` and `σ ⪰ 0` (or `σ = 0`
/// when `with_psd` is false). Returns the last cone point reached.
pub fn conic_decompose(x: &HermMat, gens: &[HermMat], with_psd: bool) -> Result<Decomposition> {
    let n = x.dim();
    for g in gens {
        if g.dim() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: g.dim(),
            });
        }
    }
    let m = gens.len();
    let gram = DMatrix::from_fn(m, m, |i, j| trace_inner_unchecked(&gens[i], &gens[j]));
    let system = (DMatrix::identity(m, m) + gram)
        .cholesky()
        .ok_or_else(|| Error::MembershipAssertion("generator Gram system not positive".into()))?;
    let scale = x.frobenius_norm().max(1.0);

    let mut sigma = if with_psd { psd_part(x)?.0 } else { HermMat::zeros(n) };
    let mut c = vec![0.0; m];
    let mut gap = (HermMat::zeros(n), vec![0.0; m]);
    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    let mut last_gap = f64::INFINITY;
    for it in 0..MAX_ITERS {
        iterations = it + 1;
        let r = x - &combine(&sigma, &c, gens);
        residual = r.frobenius_norm();
        if residual <= TOL * scale {
            break;
        }
        // projection onto {σ + Σ c_i G_i = x}
        let b = DVector::from_fn(m, |j, _| trace_inner_unchecked(&gens[j], &r));
        let t = system.solve(&b);
        let mut lam = r.matrix().clone();
        for (ti, g) in t.iter().zip(gens) {
            lam -= g.matrix() * Complex::new(*ti, 0.0);
        }
        let lam = HermMat::hermitian_part(lam);
        let gap_norm = (lam.frobenius_norm().powi(2) + t.norm_squared()).sqrt();
        gap = (lam.clone(), t.iter().copied().collect());
        // projection back onto the cone
        let a_sigma = if with_psd { &sigma + &lam } else { HermMat::zeros(n) };
        sigma = if with_psd { psd_part(&a_sigma)?.0 } else { a_sigma };
        for (ci, ti) in c.iter_mut().zip(t.iter()) {
            *ci = (*ci + ti).max(0.0);
        }
        if it > 50 && (last_gap - gap_norm).abs() <= 1e-13 * scale {
            break;
        }
        last_gap = gap_norm;
    }
    let dual = if residual > TOL * scale {
        separating_dual(x, gens, &gap.0, with_psd)?
    } else {
        None
    };
    Ok(Decomposition {
        sigma,
        coefficients: c,
        residual,
        iterations,
        dual,
    })
}

/// Turn the stalled gap into a dual element `y` with `y ⪰ 0` (when
/// `with_psd`), `Tr(y G_i) ≥ 0`, and `Tr(x y) < 0`, if one survives repair.
fn separating_dual(
    x: &HermMat,
    gens: &[HermMat],
    lam: &HermMat,
    with_psd: bool,
) -> Result<Option<HermMat>> {
    let raw = -lam;
    let mut y = if with_psd { psd_part(&raw)?.0 } else { raw };
    let norm = y.frobenius_norm();
    if norm == 0.0 {
        return Ok(None);
    }
    y = y.scale(1.0 / norm);
    let worst = gens
        .iter()
        .map(|g| trace_inner_unchecked(&y, g) / g.trace().max(f64::MIN_POSITIVE))
        .fold(f64::INFINITY, f64::min);
    if worst < 0.0 {
        // adding δI raises every Tr(y G_i) by δ Tr G_i
        y = &y + &HermMat::identity(x.dim()).scale(-worst * (1.0 + 1e-9));
    }
    let ok = gens.iter().all(|g| trace_inner_unchecked(&y, g) >= 0.0)
        && (!with_psd || eig_h(&y)?.min().0 >= 0.0);
    if ok && trace_inner_unchecked(x, &y) < -TOL {
        Ok(Some(y))
    } else {
        Ok(None)
    }
}

fn generators(r: f64, family: &FamilySpec) -> Result<Option<Vec<HermMat>>> {
    match family {
        FamilySpec::Finite(bases) => {
            let mut gens = Vec::with_capacity(2 * bases.len());
            for b in bases {
                gens.push(npm_element(0.0, b)?);
                if r > 0.0 {
                    gens.push(npm_element(r, b)?);
                }
            }
            Ok(Some(gens))
        }
        FamilySpec::FullMeop { .. } => Ok(None),
    }
}

fn primal_membership(
    x: &HermMat,
    r: f64,
    family: &FamilySpec,
    dims: Dims,
    with_psd: bool,
) -> Result<MembershipVerdict> {
    dims.check(x.dim())?;
    check_r(r, dims)?;
    family.check_dims(dims)?;
    // NPM elements at λ = 0 and λ = r generate every λ in between
    let Some(gens) = generators(r, family)? else {
        return Ok(MembershipVerdict::undecided(None, None));
    };
    let dec = conic_decompose(x, &gens, with_psd)?;
    if let Some(y) = dec.dual {
        return Ok(MembershipVerdict::outside(Witness::matrix(x, y)));
    }
    let psd_min = if with_psd { eig_h(&dec.sigma)?.min().0 } else { 0.0 };
    let cert = Certificate::Decomposition {
        coefficients: dec.coefficients,
        psd_min_eigenvalue: psd_min,
        residual: dec.residual,
    };
    if dec.residual <= TOL * x.frobenius_norm().max(1.0) {
        Ok(MembershipVerdict::inside(cert, -dec.residual))
    } else {
        Ok(MembershipVerdict::undecided(Some(cert), Some(-dec.residual)))
    }
}

/// Membership in the conic hull of `SES + NPM_r(P)`; finite families only.
/// The conic hull has the same dual cone as the set sum.
pub fn k0_membership(
    x: &HermMat,
    r: f64,
    family: &FamilySpec,
    dims: Dims,
) -> Result<MembershipVerdict> {
    primal_membership(x, r, family, dims, true)
}

pub(crate) fn npm_cone_membership(
    x: &HermMat,
    r: f64,
    family: &FamilySpec,
    dims: Dims,
) -> Result<MembershipVerdict> {
    primal_membership(x, r, family, dims, false)
}

/// `K_r(P) = K_r^(0)(P) ∩ NPM_r(P)*` membership.
///
/// Any product projector lies in `K_r(P)*`, so a block-positivity violation
/// is also an exact `Outside` certificate.
pub fn kr_membership(
    x: &HermMat,
    r: f64,
    family: &FamilySpec,
    dims: Dims,
    opts: OracleOptions,
) -> Result<MembershipVerdict> {
    let dual = npm_dual_membership(x, r, family)?;
    if dual.status == Status::Outside {
        return Ok(dual);
    }
    let primal = k0_membership(x, r, family, dims)?;
    match primal.status {
        Status::Outside => return Ok(primal),
        Status::Inside => {
            let certs = [primal.certificate, dual.certificate].into_iter().flatten().collect();
            let bound = primal.bound.unwrap_or(0.0).min(dual.bound.unwrap_or(0.0));
            return Ok(MembershipVerdict::inside(Certificate::All(certs), bound));
        }
        Status::Undecided => {}
    }
    let bp = is_block_positive(x, dims, opts.restarts, opts.iters, opts.seed)?;
    if bp.status == Status::Outside {
        return Ok(bp);
    }
    let certs = [primal.certificate, dual.certificate].into_iter().flatten().collect();
    Ok(MembershipVerdict::undecided(Some(Certificate::All(certs)), primal.bound))
}
