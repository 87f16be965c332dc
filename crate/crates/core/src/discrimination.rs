//! Perfect discrimination of two non-orthogonal states with a measurement
//! built from NPM elements of a swapped pair of bases.

use std::collections::BTreeMap;
use std::time::Instant;

use nalgebra::Complex;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::cones::{
    check_r, kr0_dual_membership, npm_dual_membership, npm_element, r0, FamilySpec,
    MembershipVerdict,
};
use crate::error::{Error, Result};
use crate::herm::{
    chacha, haar_local_pair, trace_inner_unchecked, weyl_bell_basis, Dims, HermMat, MEBasis,
    PureVec,
};
use crate::metrics::epsilon_of_r;
use crate::report::{Checks, ClaimReport};

/// A finite set of effects.
#[derive(Debug, Clone)]
pub struct Measurement {
    pub effects: Vec<HermMat>,
}

impl Measurement {
    /// `max |(Σ M_i − I)_jk|`.
    pub fn completeness_defect(&self) -> f64 {
        let dim = self.effects[0].dim();
        let sum = self
            .effects
            .iter()
            .fold(HermMat::zeros(dim), |acc, e| &acc + e);
        sum.max_abs_diff(&HermMat::identity(dim))
    }

    /// `p[i][j] = Tr(ρ_i M_j)`.
    pub fn statistics(&self, states: &[HermMat]) -> Vec<Vec<f64>> {
        states
            .iter()
            .map(|s| self.effects.iter().map(|m| trace_inner_unchecked(s, m)).collect())
            .collect()
    }
}

/// `max_{i,j} |p[i][j] − δ_ij|`.
pub fn delta_defect(stats: &[Vec<f64>]) -> f64 {
    let mut worst = 0.0f64;
    for (i, row) in stats.iter().enumerate() {
        for (j, &p) in row.iter().enumerate() {
            let want = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((p - want).abs());
        }
    }
    worst
}

/// Exchange the first two members.
pub fn swap_family(basis: &MEBasis) -> MEBasis {
    let mut order: Vec<usize> = (0..basis.len()).collect();
    order.swap(0, 1);
    basis.permuted(&order)
}

/// The two-member family `{P, P'}` with `P'` the swap of `P`.
pub fn p0_family(basis: &MEBasis) -> FamilySpec {
    FamilySpec::Finite(vec![basis.clone(), swap_family(basis)])
}

/// `M_1 = N(λ;P)`, `M_2 = N(λ;P')`; `M_1 + M_2 = I`.
pub fn discrimination_measurement(lambda: f64, basis: &MEBasis) -> Result<Measurement> {
    let dims = basis.dims();
    if !(lambda >= 0.0 && lambda <= r0(dims) + 1e-12) {
        return Err(Error::ParameterOutOfRange {
            name: "lambda",
            value: lambda,
            lo: 0.0,
            hi: r0(dims),
        });
    }
    Ok(Measurement {
        effects: vec![
            npm_element(lambda, basis)?,
            npm_element(lambda, &swap_family(basis))?,
        ],
    })
}

/// `|φ_1⟩ = a|ψ_1⟩ + b|ψ_2⟩`, `|φ_2⟩ = b|ψ_1⟩ + a|ψ_2⟩` with
/// `a = √(r/(2r+1))`, `b = √((r+1)/(2r+1))`.
#[derive(Debug, Clone)]
pub struct StatePair {
    pub phi1: PureVec,
    pub phi2: PureVec,
    pub rho1: HermMat,
    pub rho2: HermMat,
}

pub fn discrimination_states(r: f64, basis: &MEBasis) -> Result<StatePair> {
    let dims = basis.dims();
    check_r(r, dims)?;
    if r <= 0.0 {
        return Err(Error::ParameterOutOfRange {
            name: "r",
            value: r,
            lo: f64::MIN_POSITIVE,
            hi: r0(dims),
        });
    }
    let a = Complex::new((r / (2.0 * r + 1.0)).sqrt(), 0.0);
    let b = Complex::new(((r + 1.0) / (2.0 * r + 1.0)).sqrt(), 0.0);
    let (p1, p2) = (basis.vector(0).amplitudes(), basis.vector(1).amplitudes());
    let phi1 = PureVec::normalized(p1 * a + p2 * b)?;
    let phi2 = PureVec::normalized(p1 * b + p2 * a)?;
    Ok(StatePair {
        rho1: HermMat::projector(&phi1),
        rho2: HermMat::projector(&phi2),
        phi1,
        phi2,
    })
}

/// `Tr ρ_1ρ_2 = |⟨φ_1|φ_2⟩|² = 4r(r+1)/(2r+1)²`.
pub fn overlap_closed_form(r: f64) -> f64 {
    4.0 * r * (r + 1.0) / (2.0 * r + 1.0).powi(2)
}

/// `2r(r+1)/(2r+1)²`, half the overlap; a valid lower bound on it.
pub fn overlap_half_form(r: f64) -> f64 {
    2.0 * r * (r + 1.0) / (2.0 * r + 1.0).powi(2)
}

/// [`overlap_half_form`] in terms of `ε`: `ε²(8−ε²)/32`.
pub fn overlap_half_form_eps(eps: f64) -> f64 {
    let e2 = eps * eps;
    e2 * (8.0 - e2) / 32.0
}

/// `ε²(ε²+8)/32`. Below the true overlap `ε²(8−ε²)/16` iff `ε² ≤ 8/3`.
pub fn overlap_plus_form_eps(eps: f64) -> f64 {
    let e2 = eps * eps;
    e2 * (e2 + 8.0) / 32.0
}

/// Everything needed to exhibit perfect discrimination at parameter `r`.
#[derive(Debug, Clone)]
pub struct DiscriminationInstance {
    pub r: f64,
    pub basis: MEBasis,
    pub measurement: Measurement,
    pub states: StatePair,
    pub overlap: f64,
    pub epsilon: f64,
}

impl DiscriminationInstance {
    pub fn new(r: f64, basis: MEBasis) -> Result<Self> {
        let states = discrimination_states(r, &basis)?;
        let measurement = discrimination_measurement(r, &basis)?;
        let overlap = trace_inner_unchecked(&states.rho1, &states.rho2);
        Ok(DiscriminationInstance {
            r,
            epsilon: epsilon_of_r(r)?,
            basis,
            measurement,
            states,
            overlap,
        })
    }

    /// Instance on a Haar-LU rotation of the Weyl basis.
    pub fn rotated(r: f64, dims: Dims, rng: &mut ChaCha8Rng) -> Result<Self> {
        let pair = haar_local_pair(dims, rng);
        Self::new(r, weyl_bell_basis(dims).rotate(&pair))
    }

    pub fn statistics(&self) -> Vec<Vec<f64>> {
        self.measurement
            .statistics(&[self.states.rho1.clone(), self.states.rho2.clone()])
    }

    pub fn family(&self) -> FamilySpec {
        p0_family(&self.basis)
    }

    /// `kr0_dual_membership` of both states.
    pub fn state_verdicts(&self) -> Result<[MembershipVerdict; 2]> {
        let fam = self.family();
        Ok([
            kr0_dual_membership(&self.states.rho1, self.r, &fam)?,
            kr0_dual_membership(&self.states.rho2, self.r, &fam)?,
        ])
    }

    /// `npm_dual_membership` of both effects.
    pub fn effect_verdicts(&self) -> Result<[MembershipVerdict; 2]> {
        let fam = self.family();
        Ok([
            npm_dual_membership(&self.measurement.effects[0], self.r, &fam)?,
            npm_dual_membership(&self.measurement.effects[1], self.r, &fam)?,
        ])
    }

    /// `max |⟨ψ_i|ψ_j⟩ − δ_ij|` and `max |⟨ψ_i|P_j|ψ_i⟩ − δ_ij|` over `i, j ∈ {1,2}`.
    pub fn eigenvector_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..2 {
            for j in 0..2 {
                let want = if i == j { 1.0 } else { 0.0 };
                let vi = self.basis.vector(i);
                let inner = vi.inner(self.basis.vector(j));
                worst = worst.max((inner - Complex::new(want, 0.0)).norm());
                let q = self.basis.projector(j).quad_form(vi);
                worst = worst.max((q - want).abs());
            }
        }
        worst
    }
}

fn instance_rng(seed: u64, k: usize) -> ChaCha8Rng {
    let mut rng = chacha(seed);
    rng.set_stream(k as u64);
    rng
}

/// Build `trials` rotated instances (instance `k` from stream `k` of `seed`)
/// and check the δ statistics, the eigenvector relations, all memberships,
/// non-orthogonality and the closed-form overlap. The half form
/// `2r(r+1)/(2r+1)²` and the bound `ε²(ε²+8)/32` are reported as notes only.
pub fn verify_theorem_dist(r: f64, dims: Dims, trials: usize, seed: u64) -> Result<ClaimReport> {
    let start = Instant::now();
    check_r(r, dims)?;
    if r <= 0.0 {
        return Err(Error::ParameterOutOfRange {
            name: "r",
            value: r,
            lo: f64::MIN_POSITIVE,
            hi: r0(dims),
        });
    }
    let parts = (0..trials.max(1))
        .into_par_iter()
        .map(|k| {
            let inst = DiscriminationInstance::rotated(r, dims, &mut instance_rng(seed, k))?;
            let mut c = Checks::new(1e-10);
            c.add_trials(1);
            c.close("delta statistics", delta_defect(&inst.statistics()), 0.0, 1e-10);
            c.close("eigenvector relations", inst.eigenvector_defect(), 0.0, 1e-12);
            c.close("effects sum to identity", inst.measurement.completeness_defect(), 0.0, 1e-12);
            for (i, v) in inst.state_verdicts()?.iter().enumerate() {
                c.holds(&format!("rho{} in K_r^(0)*", i + 1), v.is_certified_inside());
            }
            for (i, v) in inst.effect_verdicts()?.iter().enumerate() {
                c.holds(&format!("M{} in NPM_r*", i + 1), v.is_certified_inside());
            }
            c.holds("overlap > 0", inst.overlap > 0.0);
            c.close("overlap closed form", inst.overlap, overlap_closed_form(r), 1e-10);
            Ok(c)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut checks = Checks::new(1e-10);
    for p in parts {
        checks.merge(p);
    }

    let eps = epsilon_of_r(r)?;
    let exact = overlap_closed_form(r);
    let half = overlap_half_form(r);
    let plus = overlap_plus_form_eps(eps);
    checks.note(format!("overlap Tr rho1 rho2 = {exact:.10} = 4r(r+1)/(2r+1)^2"));
    checks.note(format!(
        "2r(r+1)/(2r+1)^2 = eps^2(8-eps^2)/32 = {half:.10}: equals half the overlap, holds as a lower bound only"
    ));
    checks.note(format!(
        "eps^2(eps^2+8)/32 = {plus:.10}: {} as a lower bound on the overlap",
        if plus <= exact { "holds" } else { "does not hold" }
    ));
    let mut params = BTreeMap::new();
    params.insert("r".to_string(), r);
    params.insert("epsilon".to_string(), eps);
    params.insert("trials".to_string(), trials as f64);
    Ok(checks.into_report("thm-dist", dims, params, seed, start.elapsed().as_secs_f64()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::herm::eigenvalues;
    use crate::metrics::r_of_epsilon;

    fn d2() -> Dims {
        Dims::new(2).unwrap()
    }

    #[test]
    fn swap_is_an_involution() {
        let b = weyl_bell_basis(Dims::new(3).unwrap());
        let s = swap_family(&b);
        assert_eq!(swap_family(&s), b);
        assert!(s.defect().worst() < 1e-12);
        assert!(s.projector(0).max_abs_diff(&b.projector(1)) < 1e-15);
        match p0_family(&b) {
            FamilySpec::Finite(v) => {
                assert_eq!(v.len(), 2);
                for k in 2..9 {
                    assert_eq!(v[0].vector(k), v[1].vector(k));
                }
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn measurement_is_complete_and_npm() {
        let b = weyl_bell_basis(d2());
        for lambda in [0.0, 0.1, r0(d2())] {
            let m = discrimination_measurement(lambda, &b).unwrap();
            assert!(m.completeness_defect() < 1e-14);
            if lambda > 0.0 {
                let fam = p0_family(&b);
                for e in &m.effects {
                    assert!(npm_dual_membership(e, lambda, &fam).unwrap().is_certified_inside());
                }
            }
        }
        let m = discrimination_measurement(0.0, &b).unwrap();
        for e in &m.effects {
            assert!(eigenvalues(e).unwrap()[3] > -1e-14);
        }
        assert!(discrimination_measurement(0.3, &b).is_err());
    }

    #[test]
    fn states_have_expected_statistics() {
        let b = weyl_bell_basis(d2());
        let r = 0.1;
        let inst = DiscriminationInstance::new(r, b).unwrap();
        assert!(delta_defect(&inst.statistics()) < 1e-12);
        assert!((inst.overlap - 0.305_555_555_6).abs() < 1e-10);
        // Tr ρ_1 M_1(λ) and Tr ρ_1 M_2(λ) for λ below r
        let lam = 0.04;
        let m = discrimination_measurement(lam, &inst.basis).unwrap();
        let s = m.statistics(std::slice::from_ref(&inst.states.rho1));
        assert!((s[0][0] - (lam + r + 1.0) / (2.0 * r + 1.0)).abs() < 1e-12);
        assert!((s[0][1] - (r - lam) / (2.0 * r + 1.0)).abs() < 1e-12);
        assert!(inst.state_verdicts().unwrap().iter().all(|v| v.is_certified_inside()));
        assert!(discrimination_states(0.0, &inst.basis).is_err());
    }

    #[test]
    fn overlap_at_r0_is_one_half() {
        let inst = DiscriminationInstance::new(r0(d2()), weyl_bell_basis(d2())).unwrap();
        assert!((inst.overlap - 0.5).abs() < 1e-12);
        assert!((overlap_half_form(r0(d2())) - 0.25).abs() < 1e-12);
        assert!((overlap_half_form_eps(inst.epsilon) - 0.25).abs() < 1e-12);
        assert!((overlap_plus_form_eps(inst.epsilon) - 0.335_786_4).abs() < 1e-7);
    }

    #[test]
    fn eps_forms_agree() {
        for eps in [0.1, 0.5, 1.0, 1.5] {
            let r = r_of_epsilon(eps).unwrap();
            assert!((overlap_half_form(r) - overlap_half_form_eps(eps)).abs() < 1e-12);
            assert!((overlap_closed_form(r) - 2.0 * overlap_half_form_eps(eps)).abs() < 1e-12);
        }
        // the plus form stops being a lower bound past ε² = 8/3
        let e = (8.0f64 / 3.0).sqrt();
        let r = r_of_epsilon(e).unwrap();
        assert!((overlap_plus_form_eps(e) - overlap_closed_form(r)).abs() < 1e-12);
        let e = 1.7;
        assert!(overlap_plus_form_eps(e) > overlap_closed_form(r_of_epsilon(e).unwrap()));
    }

    #[test]
    fn theorem_report_passes_on_closed_form() {
        let rep = verify_theorem_dist(0.1, d2(), 5, 3).unwrap();
        assert!(rep.pass, "{:?}", rep.notes);
        assert_eq!(rep.trials, 5);
        let rep = verify_theorem_dist(0.4, Dims::new(3).unwrap(), 3, 3).unwrap();
        assert!(rep.pass, "{:?}", rep.notes);
    }
}
