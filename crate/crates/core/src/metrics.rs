//! Fidelities, the fully entangled fraction, and distance bounds.

use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::cones::{check_r, kr0_dual_membership, FamilySpec};
use crate::error::{Error, Result};
use crate::herm::{
    chacha, eig_h, haar_mes, max_me_overlap, trace_inner_unchecked, trace_norm_of, Dims, HermMat,
    PureVec,
};
use crate::tol::TOL;

pub const F_MAX_RESTARTS: usize = 8;
pub const F_MAX_ITERS: usize = 200;

/// `‖x‖₁ = Σ |λ_i|`.
pub fn trace_norm(x: &HermMat) -> Result<f64> {
    trace_norm_of(x)
}

pub(crate) fn check_state(rho: &HermMat) -> Result<()> {
    let tr = rho.trace();
    if (tr - 1.0).abs() > TOL {
        return Err(Error::NotAState(format!("trace {tr}")));
    }
    let lmin = eig_h(rho)?.min().0;
    if lmin < -TOL {
        return Err(Error::NotAState(format!("min eigenvalue {lmin}")));
    }
    Ok(())
}

/// The unit vector of a rank-one projector, or `NotRankOne`.
pub(crate) fn pure_vector(sigma: &HermMat) -> Result<PureVec> {
    let eig = eig_h(sigma)?;
    let (top, v) = eig.max();
    let rest = eig.values[1..].iter().fold(0.0f64, |a, x| a.max(x.abs()));
    let defect = (top - 1.0).abs().max(rest);
    if defect > TOL {
        return Err(Error::NotRankOne(defect));
    }
    Ok(v.clone())
}

/// `F(ρ, σ) = Tr ρσ` for a pure state `σ`.
pub fn fidelity_pure(rho: &HermMat, sigma_pure: &HermMat) -> Result<f64> {
    if rho.dim() != sigma_pure.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            got: sigma_pure.dim(),
        });
    }
    pure_vector(sigma_pure)?;
    check_state(rho)?;
    Ok(trace_inner_unchecked(rho, sigma_pure))
}

#[derive(Debug, Clone)]
pub struct FMax {
    /// Attained by `mes`, hence a lower bound on the true maximum.
    pub value: f64,
    pub mes: PureVec,
}

impl FMax {
    pub fn argmax(&self) -> HermMat {
        HermMat::projector(&self.mes)
    }
}

/// Fully entangled fraction `max_σ Tr ρσ` over maximally entangled `σ`.
pub fn f_max(rho: &HermMat, restarts: usize, iters: usize, seed: u64) -> Result<FMax> {
    let dims = Dims::from_total(rho.dim())?;
    check_state(rho)?;
    let best = max_me_overlap(rho, dims, restarts, iters, &mut chacha(seed))?;
    Ok(FMax {
        value: best.value,
        mes: best.mes,
    })
}

/// `ε_r = 2√(2r/(2r+1))`.
pub fn epsilon_of_r(r: f64) -> Result<f64> {
    if !(r >= 0.0 && r.is_finite()) {
        return Err(Error::ParameterOutOfRange {
            name: "r",
            value: r,
            lo: 0.0,
            hi: f64::INFINITY,
        });
    }
    Ok(2.0 * (2.0 * r / (2.0 * r + 1.0)).sqrt())
}

/// Inverse of [`epsilon_of_r`]: `r = ε²/(2(4−ε²))`.
pub fn r_of_epsilon(eps: f64) -> Result<f64> {
    if !(0.0..2.0).contains(&eps) {
        return Err(Error::ParameterOutOfRange {
            name: "epsilon",
            value: eps,
            lo: 0.0,
            hi: 2.0,
        });
    }
    let e2 = eps * eps;
    Ok(e2 / (2.0 * (4.0 - e2)))
}

/// A state of the `K_r^(0)*` inner approximation close to a target MES.
#[derive(Debug, Clone)]
pub struct UndistWitness {
    pub rho0: HermMat,
    /// `‖ρ0 − σ‖₁`.
    pub dist: f64,
    /// `F(ρ0, σ) = 1/(2r+1)`.
    pub p: f64,
    /// Best fully entangled fraction found for `ρ0`.
    pub f_max: f64,
}

/// `ρ0 = pσ + (1−p)(I−σ)/(D−1)` with `p = 1/(2r+1)`. Asserts numerically
/// that `F_max(ρ0) ≤ p` and that `ρ0` passes `kr0_dual_membership`.
pub fn undist_witness(sigma_mes: &HermMat, r: f64, family: &FamilySpec) -> Result<UndistWitness> {
    let dims = Dims::from_total(sigma_mes.dim())?;
    check_r(r, dims)?;
    if r <= 0.0 {
        return Err(Error::ParameterOutOfRange {
            name: "r",
            value: r,
            lo: f64::MIN_POSITIVE,
            hi: crate::cones::r0(dims),
        });
    }
    let v = pure_vector(sigma_mes)?;
    let dev = v.entanglement_deviation(dims)?;
    if dev > TOL {
        return Err(Error::NotMaximallyEntangled(dev));
    }
    let n = dims.total() as f64;
    let p = 1.0 / (2.0 * r + 1.0);
    let id = HermMat::identity(dims.total());
    let rest = &id - sigma_mes;
    let rho0 = &sigma_mes.scale(p) + &rest.scale((1.0 - p) / (n - 1.0));

    let fm = f_max(&rho0, F_MAX_RESTARTS, F_MAX_ITERS, 0)?;
    if fm.value > p + TOL {
        return Err(Error::MembershipAssertion(format!(
            "F_max(rho0) = {} exceeds 1/(2r+1) = {p}",
            fm.value
        )));
    }
    let verdict = kr0_dual_membership(&rho0, r, family)?;
    if !verdict.is_inside() {
        return Err(Error::MembershipAssertion(format!(
            "rho0 not in the dual cone: {:?}",
            verdict.bound
        )));
    }
    let dist = trace_norm(&(&rho0 - sigma_mes))?;
    Ok(UndistWitness {
        rho0,
        dist,
        p,
        f_max: fm.value,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct WitnessState {
    #[serde(skip)]
    pub sigma: HermMat,
    #[serde(skip)]
    pub rho0: HermMat,
    pub dist: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DistanceBoundReport {
    pub r: f64,
    pub epsilon_r: f64,
    pub sampled_sigma_count: usize,
    pub max_over_sigma_of_min_dist: f64,
    pub witness_states: Vec<WitnessState>,
    pub pass: bool,
}

fn sigma_rng(seed: u64, k: usize) -> ChaCha8Rng {
    let mut rng = chacha(seed);
    rng.set_stream(k as u64);
    rng
}

/// Run [`undist_witness`] on `n_sigma` Haar-random MES (target `k` drawn
/// from stream `k` of `seed`) and compare the largest distance with `ε_r`.
pub fn d_bound_report(
    r: f64,
    family: &FamilySpec,
    dims: Dims,
    n_sigma: usize,
    seed: u64,
) -> Result<DistanceBoundReport> {
    let epsilon_r = epsilon_of_r(r)?;
    let witness_states = (0..n_sigma)
        .into_par_iter()
        .map(|k| {
            let sigma = HermMat::projector(&haar_mes(dims, &mut sigma_rng(seed, k)));
            let w = undist_witness(&sigma, r, family)?;
            Ok(WitnessState {
                sigma,
                rho0: w.rho0,
                dist: w.dist,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let max = witness_states.iter().map(|w| w.dist).fold(0.0, f64::max);
    Ok(DistanceBoundReport {
        r,
        epsilon_r,
        sampled_sigma_count: n_sigma,
        max_over_sigma_of_min_dist: max,
        pass: max <= epsilon_r + TOL,
        witness_states,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cones::r0;
    use crate::herm::{phi_plus, random_state, weyl_bell_basis};

    fn d2() -> Dims {
        Dims::new(2).unwrap()
    }

    fn isotropic(sigma: &HermMat, p: f64) -> HermMat {
        let n = sigma.dim() as f64;
        let rest = &HermMat::identity(sigma.dim()) - sigma;
        &sigma.scale(p) + &rest.scale((1.0 - p) / (n - 1.0))
    }

    #[test]
    fn trace_norm_examples() {
        assert!((trace_norm(&HermMat::identity(4)).unwrap() - 4.0).abs() < 1e-13);
        let rho = random_state(4, &mut chacha(1));
        assert!(trace_norm(&(&rho - &rho)).unwrap().abs() < 1e-14);
        let sigma = HermMat::projector(&phi_plus(d2()));
        for p in [0.1, 0.5, 0.9] {
            let d = trace_norm(&(&isotropic(&sigma, p) - &sigma)).unwrap();
            assert!((d - 2.0 * (1.0 - p)).abs() < 1e-12);
        }
    }

    #[test]
    fn fidelity_examples() {
        let sigma = HermMat::projector(&phi_plus(d2()));
        assert!((fidelity_pure(&sigma, &sigma).unwrap() - 1.0).abs() < 1e-14);
        let mixed = HermMat::identity(4).scale(0.25);
        assert!((fidelity_pure(&mixed, &sigma).unwrap() - 0.25).abs() < 1e-14);
        assert!((fidelity_pure(&isotropic(&sigma, 0.7), &sigma).unwrap() - 0.7).abs() < 1e-12);
        assert!(matches!(
            fidelity_pure(&sigma, &mixed),
            Err(Error::NotRankOne(_))
        ));
    }

    #[test]
    fn f_max_examples() {
        let mixed = HermMat::identity(4).scale(0.25);
        assert!((f_max(&mixed, 4, 50, 0).unwrap().value - 0.25).abs() < 1e-14);
        let b = weyl_bell_basis(d2());
        assert!((f_max(&b.projector(2), 4, 50, 0).unwrap().value - 1.0).abs() < 1e-12);
        let sigma = b.projector(1);
        for p in [0.25, 0.4, 0.8] {
            let v = f_max(&isotropic(&sigma, p), 8, 200, 3).unwrap().value;
            assert!((v - p).abs() < 1e-10, "p = {p}: {v}");
        }
        assert!(f_max(&HermMat::identity(4), 1, 1, 0).is_err());
    }

    #[test]
    fn epsilon_r_conversions() {
        assert_eq!(epsilon_of_r(0.0).unwrap(), 0.0);
        let e = epsilon_of_r(r0(d2())).unwrap();
        assert!((e - 1.082_392_2).abs() < 1e-7);
        assert!((r_of_epsilon(0.1).unwrap() - 0.001_253_133).abs() < 1e-9);
        assert!(r_of_epsilon(2.0).is_err());
        assert!(r_of_epsilon(-0.1).is_err());
        assert!(epsilon_of_r(-1.0).is_err());
        for r in [0.0, 1e-6, 0.1, 0.56, 3.0] {
            let back = r_of_epsilon(epsilon_of_r(r).unwrap()).unwrap();
            assert!((back - r).abs() < 1e-12);
        }
    }

    #[test]
    fn undist_witness_distances() {
        let sigma = HermMat::projector(&phi_plus(d2()));
        let fam = FamilySpec::finite(vec![weyl_bell_basis(d2())]).unwrap();
        let w = undist_witness(&sigma, 0.125, &fam).unwrap();
        assert!((w.dist - 0.4).abs() < 1e-12);
        assert!(w.dist <= epsilon_of_r(0.125).unwrap());
        let r = r0(d2());
        let w = undist_witness(&sigma, r, &fam).unwrap();
        assert!((w.dist - 0.585_786_4).abs() < 1e-7);
        let w = undist_witness(&sigma, 1e-9, &fam).unwrap();
        assert!(w.dist < 1e-8);
        assert!(undist_witness(&sigma, 0.0, &fam).is_err());
        let prod = HermMat::projector(&PureVec::basis(4, 0));
        assert!(matches!(
            undist_witness(&prod, 0.1, &fam),
            Err(Error::NotMaximallyEntangled(_))
        ));
    }

    #[test]
    fn d_bound_report_is_sigma_independent() {
        let d3 = Dims::new(3).unwrap();
        let fam = FamilySpec::full_meop(16, 2).unwrap();
        let rep = d_bound_report(0.25, &fam, d3, 4, 9).unwrap();
        assert!(rep.pass);
        assert!((rep.max_over_sigma_of_min_dist - 2.0 / 3.0).abs() < 1e-10);
        assert!((rep.epsilon_r - 1.154_700_5).abs() < 1e-7);
        assert!(d_bound_report(0.0, &fam, d3, 4, 9).is_err());
    }
}
