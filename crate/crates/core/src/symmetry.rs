//! Global and local unitary actions `g(x) = U† x U`, and the checks built on
//! them.

use std::collections::BTreeMap;
use std::time::Instant;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::cones::{
    is_block_positive_default, is_psd, kr0_dual_membership, npm_dual_membership, npm_element, r0,
    FamilySpec, MembershipVerdict, Status,
};
use crate::discrimination::{delta_defect, Measurement};
use crate::error::{Error, Result};
use crate::herm::{
    chacha, haar_local_pair, partial_transpose, random_mebasis, random_state,
    trace_inner_unchecked, unitarity_defect, weyl_bell_basis, CMat, CVec, Dims, HermMat,
    LocalPair, MEBasis, PureVec,
};
use crate::report::{Checks, ClaimReport};

const UNITARY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub enum GroupElement {
    Global(CMat),
    Local(LocalPair),
}

impl GroupElement {
    pub fn global(u: CMat) -> Result<Self> {
        let defect = unitarity_defect(&u);
        if u.nrows() != u.ncols() || defect > UNITARY_TOL {
            return Err(Error::NotUnitary(defect));
        }
        Ok(GroupElement::Global(u))
    }

    pub fn local(pair: LocalPair) -> Result<Self> {
        let defect = unitarity_defect(&pair.ua).max(unitarity_defect(&pair.ub));
        if defect > UNITARY_TOL || pair.ua.nrows() != pair.ub.nrows() {
            return Err(Error::NotUnitary(defect));
        }
        Ok(GroupElement::Local(pair))
    }

    pub fn identity(dims: Dims) -> Self {
        GroupElement::Local(LocalPair::identity(dims))
    }

    /// The full `D × D` unitary `U`.
    pub fn unitary(&self) -> CMat {
        match self {
            GroupElement::Global(u) => u.clone(),
            GroupElement::Local(p) => p.kron(),
        }
    }
}

/// `g(x) = U† x U`.
pub fn apply(g: &GroupElement, x: &HermMat) -> Result<HermMat> {
    let u = g.unitary();
    if u.nrows() != x.dim() {
        return Err(Error::DimensionMismatch {
            expected: u.nrows(),
            got: x.dim(),
        });
    }
    Ok(x.conjugate_by_adjoint(&u))
}

/// `{g(E_k)}`: every member vector mapped to `U†|ψ_k⟩`. A global element
/// generally destroys maximal entanglement, which is reported as an error.
pub fn apply_basis(g: &GroupElement, basis: &MEBasis) -> Result<MEBasis> {
    match g {
        GroupElement::Local(p) => Ok(basis.rotate(&p.adjoint())),
        GroupElement::Global(u) => {
            let ud = u.adjoint();
            let vs = basis
                .vectors()
                .iter()
                .map(|v| PureVec::normalized(&ud * v.amplitudes()))
                .collect::<Result<Vec<_>>>()?;
            MEBasis::from_vectors(basis.dims(), vs)
        }
    }
}

/// `(U_A, conj U_B)`: with `g = (U_A, U_B)` and this partner `g'`,
/// `Γ(g(x)) = g'(Γ(x))`.
pub fn gamma_partner(pair: &LocalPair) -> LocalPair {
    LocalPair {
        ua: pair.ua.clone(),
        ub: pair.ub.map(|z| z.conj()),
    }
}

/// Unitary whose first column is `v`, completed by Gram–Schmidt over the
/// computational basis.
pub fn completion_unitary(v: &PureVec) -> CMat {
    let n = v.dim();
    let mut cols: Vec<CVec> = vec![v.amplitudes().clone()];
    for k in 0..n {
        if cols.len() == n {
            break;
        }
        let mut w = PureVec::basis(n, k).amplitudes().clone();
        for c in &cols {
            let proj = c.dotc(&w);
            w -= c * proj;
        }
        // second pass for stability
        for c in &cols {
            let proj = c.dotc(&w);
            w -= c * proj;
        }
        let norm = w.norm();
        if norm > 1e-8 {
            cols.push(w / nalgebra::Complex::new(norm, 0.0));
        }
    }
    CMat::from_columns(&cols)
}

/// A global unitary `g` and product vector `y` with `⟨y|g(x)|y⟩ < 0`.
#[derive(Debug, Clone)]
pub struct GuBreaking {
    pub x: HermMat,
    pub g: GroupElement,
    pub y: PureVec,
    pub violation: f64,
}

/// `x = N(r;basis)` is block-positive but has the eigenvalue `−r` on a
/// maximally entangled vector `ψ`. The unitary `U` with `U|00⟩ = |ψ⟩` gives
/// `⟨00|U†xU|00⟩ = −r`, so `g(x)` is not block-positive.
pub fn gu_breaking_witness(r: f64, basis: &MEBasis) -> Result<GuBreaking> {
    let dims = basis.dims();
    crate::cones::check_r(r, dims)?;
    if r <= 0.0 {
        return Err(Error::ParameterOutOfRange {
            name: "r",
            value: r,
            lo: f64::MIN_POSITIVE,
            hi: r0(dims),
        });
    }
    let x = npm_element(r, basis)?;
    let psi = match is_psd(&x)?.witness {
        Some(w) => match w.kind {
            crate::cones::WitnessKind::Vector(v) => v,
            crate::cones::WitnessKind::Matrix(_) => unreachable!("is_psd returns vectors"),
        },
        None => {
            return Err(Error::MembershipAssertion(format!(
                "N({r}) has no negative eigenvalue"
            )))
        }
    };
    let g = GroupElement::global(completion_unitary(&psi))?;
    let y = PureVec::basis(dims.total(), 0);
    let gx = apply(&g, &x)?;
    let violation = gx.quad_form(&y);
    Ok(GuBreaking { x, g, y, violation })
}

fn stream(seed: u64, k: usize) -> ChaCha8Rng {
    let mut rng = chacha(seed);
    rng.set_stream(k as u64);
    rng
}

fn params(entries: &[(&str, f64)]) -> BTreeMap<String, f64> {
    entries.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

/// Self-duality and LU-symmetry of `Γ(SES)`: trace-inner preservation,
/// `Γ² = id`, the covariance `Γ(g(ρ)) = g'(Γ(ρ))` with `g'` from
/// [`gamma_partner`], and an explicit pair with `Tr Γ(E_1)Γ(N(r_0)) = −r_0`.
pub fn check_gamma_self_dual(dims: Dims, trials: usize, seed: u64) -> Result<ClaimReport> {
    let start = Instant::now();
    let n = dims.total();
    let parts = (0..trials.max(1))
        .into_par_iter()
        .map(|k| {
            let mut rng = stream(seed, k);
            let x = random_state(n, &mut rng);
            let y = random_state(n, &mut rng);
            let rho = random_state(n, &mut rng);
            let pair = haar_local_pair(dims, &mut rng);
            let mut c = Checks::new(1e-12);
            c.add_trials(1);
            let gx = partial_transpose(&x, dims)?;
            let gy = partial_transpose(&y, dims)?;
            let txy = trace_inner_unchecked(&x, &y);
            c.close("Tr G(x)G(y) = Tr xy", trace_inner_unchecked(&gx, &gy), txy, 1e-12);
            c.ge("Tr xy >= 0", txy, 0.0);
            c.close(
                "G(G(x)) = x",
                partial_transpose(&gx, dims)?.max_abs_diff(&x),
                0.0,
                1e-15,
            );
            let g = GroupElement::Local(pair.clone());
            let lhs = partial_transpose(&apply(&g, &rho)?, dims)?;
            let gp = GroupElement::Local(gamma_partner(&pair));
            let rhs = apply(&gp, &partial_transpose(&rho, dims)?)?;
            c.close("G(g(rho)) = g'(G(rho))", lhs.max_abs_diff(&rhs), 0.0, 1e-12);
            let naive = apply(&g, &partial_transpose(&rho, dims)?)?;
            Ok((c, lhs.max_abs_diff(&naive)))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut checks = Checks::new(1e-12);
    let mut naive_worst = 0.0f64;
    for (c, nd) in parts {
        checks.merge(c);
        naive_worst = naive_worst.max(nd);
    }
    checks.note(format!(
        "covariance with U_B in place of conj(U_B): worst entrywise defect {naive_worst:.3e}"
    ));

    let r = r0(dims);
    let basis = weyl_bell_basis(dims);
    let z = npm_element(r, &basis)?;
    let e1 = basis.projector(0);
    let value = trace_inner_unchecked(
        &partial_transpose(&e1, dims)?,
        &partial_transpose(&z, dims)?,
    );
    checks.close("Tr G(E_1)G(N(r_0)) = -r_0", value, -r, 1e-9);
    checks.holds("N(r_0) not PSD", is_psd(&z)?.status == Status::Outside);
    checks.holds(
        "N(r_0) block-positive",
        is_block_positive_default(&z, dims, seed)?.is_inside(),
    );
    checks.note(format!("witness value Tr G(E_1)G(N(r_0)) = {value:.12}"));
    let p = params(&[("trials", trials as f64), ("r0", r)]);
    Ok(checks.into_report("prop-gamma", dims, p, seed, start.elapsed().as_secs_f64()))
}

/// Whether two verdicts agree, ignoring cases decided within `margin` of the
/// threshold (where rounding may legitimately flip the status).
fn verdicts_agree(a: &MembershipVerdict, b: &MembershipVerdict, margin: f64) -> Option<bool> {
    let near = |v: &MembershipVerdict| v.bound.is_some_and(|x| x.abs() < margin);
    if near(a) || near(b) {
        None
    } else {
        Some(a.status == b.status)
    }
}

/// LU covariance of NPM elements and of the dual membership tests.
///
/// Covariance: `g(N(λ;{E_k})) = N(λ;{g(E_k)})` entrywise. Invariance:
/// `x ∈ NPM_r(P)*` iff `g(x) ∈ NPM_r(g(P))*`, checked on `rotations` test
/// matrices that mix a random state with the family's first projector so
/// both verdicts occur.
pub fn check_lu_symmetry_npm(
    r: f64,
    dims: Dims,
    trials: usize,
    rotations: usize,
    seed: u64,
) -> Result<ClaimReport> {
    let start = Instant::now();
    crate::cones::check_r(r, dims)?;
    let n = dims.total();
    let parts = (0..trials.max(1))
        .into_par_iter()
        .map(|k| {
            let mut rng = stream(seed, k);
            let basis = random_mebasis(dims, &mut rng);
            let lambda = r * rng.random::<f64>();
            let g = GroupElement::Local(haar_local_pair(dims, &mut rng));
            let lhs = apply(&g, &npm_element(lambda, &basis)?)?;
            let rhs = npm_element(lambda, &apply_basis(&g, &basis)?)?;
            let mut c = Checks::new(1e-12);
            c.add_trials(1);
            c.close("g(N) = N(g(E))", lhs.max_abs_diff(&rhs), 0.0, 1e-12);
            Ok(c)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut checks = Checks::new(1e-12);
    for p in parts {
        checks.merge(p);
    }

    let mut rng = stream(seed, trials.max(1));
    let basis = random_mebasis(dims, &mut rng);
    let fam = FamilySpec::Finite(vec![basis.clone()]);
    let e1 = basis.projector(0);
    let rot = (0..rotations)
        .into_par_iter()
        .map(|k| {
            let mut rng = stream(seed ^ 0x9e37_79b9_7f4a_7c15, k);
            let t: f64 = rng.random();
            let x = &random_state(n, &mut rng).scale(1.0 - t) + &e1.scale(t);
            let g = GroupElement::Local(haar_local_pair(dims, &mut rng));
            let gx = apply(&g, &x)?;
            let gfam = FamilySpec::Finite(vec![apply_basis(&g, &basis)?]);
            let a = npm_dual_membership(&x, r, &fam)?;
            let b = npm_dual_membership(&gx, r, &gfam)?;
            let c0 = kr0_dual_membership(&x, r, &fam)?;
            let c1 = kr0_dual_membership(&gx, r, &gfam)?;
            let bound_diff = (a.bound.unwrap_or(0.0) - b.bound.unwrap_or(0.0)).abs();
            Ok((
                verdicts_agree(&a, &b, 1e-8),
                verdicts_agree(&c0, &c1, 1e-8),
                a.status,
                bound_diff,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut compared = 0;
    let mut outside = 0;
    for (npm, kr0, status, diff) in rot {
        for agree in [npm, kr0].into_iter().flatten() {
            compared += 1;
            checks.holds("LU-invariant verdict", agree);
        }
        checks.close("LU-invariant bound", diff, 0.0, 1e-10);
        if status == Status::Outside {
            outside += 1;
        }
    }
    checks.note(format!(
        "{compared} verdict pairs compared over {rotations} rotations, {outside} outside"
    ));
    let p = params(&[
        ("r", r),
        ("trials", trials as f64),
        ("rotations", rotations as f64),
    ]);
    Ok(checks.into_report("prop-lu", dims, p, seed, start.elapsed().as_secs_f64()))
}

/// The `D` computational product states and the matching projective
/// measurement; both lie in SEP, hence in every cone between SEP and SEP*.
pub fn capacity_witness(dims: Dims) -> (Vec<HermMat>, Measurement) {
    let n = dims.total();
    let states: Vec<HermMat> = (0..n)
        .map(|k| HermMat::projector(&PureVec::basis(n, k)))
        .collect();
    let measurement = Measurement {
        effects: states.clone(),
    };
    (states, measurement)
}

/// Capacity check: exact δ statistics, completeness, and PPT membership of
/// every state.
pub fn check_capacity(dims: Dims, seed: u64) -> Result<ClaimReport> {
    let start = Instant::now();
    let (states, m) = capacity_witness(dims);
    let mut c = Checks::new(1e-12);
    c.add_trials(states.len() as u64);
    c.close("delta statistics", delta_defect(&m.statistics(&states)), 0.0, 1e-12);
    c.close("effects sum to identity", m.completeness_defect(), 0.0, 1e-12);
    for s in &states {
        let v = crate::cones::is_ppt_separable(s, dims)?;
        c.holds("state passes PPT", v.status != Status::Outside);
        c.holds("state is a product", is_product(s, dims)?);
    }
    c.note(format!("{} perfectly distinguishable product states", states.len()));
    let p = params(&[("states", states.len() as f64)]);
    Ok(c.into_report("prop-cap", dims, p, seed, start.elapsed().as_secs_f64()))
}

fn is_product(s: &HermMat, dims: Dims) -> Result<bool> {
    use crate::herm::{partial_trace, tensor, Factor};
    let a = partial_trace(s, dims, Factor::B)?;
    let b = partial_trace(s, dims, Factor::A)?;
    Ok(tensor(&a, &b).max_abs_diff(s) < 1e-12)
}
