//! Claim registry and runners.
//!
//! Every runner is a pure function of `(claim_id, dims, params, seed)`.
//! Seeds are split as follows: the claim's child seed is the first `u64` of
//! stream `fnv1a(claim_id)` of a ChaCha8 generator seeded with `seed`.
//! Sampled trials are processed in chunks of [`CHUNK`]; chunk `c` draws from
//! stream `c` of the child seed, and chunk results are merged in order, so
//! reports do not depend on the thread count.

use std::collections::BTreeMap;
use std::time::Instant;

use rand::{Rng, RngCore};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cones::{
    con1_radius, con2_floor, hierarchy_witness, is_block_positive_default, kr0_dual_membership,
    npm_element, r0, FamilySpec, Status, DEFAULT_SAMPLE_BUDGET,
};
use crate::discrimination::verify_theorem_dist;
use crate::error::{Error, Result};
use crate::herm::{
    chacha, haar_mes, random_mebasis, random_product_pure, random_pure, random_state,
    trace_inner_unchecked, weyl_bell_basis, Dims, HermMat, MEBasis,
};
use crate::metrics::{
    d_bound_report, epsilon_of_r, f_max, fidelity_pure, trace_norm, F_MAX_ITERS, F_MAX_RESTARTS,
};
use crate::report::{Checks, ClaimReport};
use crate::symmetry::{
    apply, check_capacity, check_gamma_self_dual, check_lu_symmetry_npm, gu_breaking_witness,
};
use crate::tol::TOL;

/// Trials per rayon work item.
pub const CHUNK: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    Quick,
    Full,
}

/// Claim ids in execution order.
pub const CLAIMS: [&str; 12] = [
    "lemma-con1",
    "lemma-con2",
    "prop-construction1",
    "prop-construction2",
    "lemma-max-ent",
    "thm-dist",
    "prop-global2",
    "prop-gamma",
    "prop-lu",
    "prop-cap",
    "con-hie",
    "eq-f1",
];

/// Modules a claim runner draws on.
pub fn claim_modules(id: &str) -> Option<&'static [&'static str]> {
    Some(match id {
        "lemma-con1" | "lemma-con2" => &["herm", "cones"],
        "prop-construction1" => &["herm", "cones"],
        "prop-construction2" | "lemma-max-ent" => &["herm", "cones", "metrics"],
        "thm-dist" => &["herm", "cones", "metrics", "discrimination"],
        "prop-global2" | "prop-gamma" | "prop-lu" => &["herm", "cones", "symmetry"],
        "prop-cap" => &["herm", "cones", "discrimination", "symmetry"],
        "con-hie" => &["herm", "cones"],
        "eq-f1" => &["herm", "metrics"],
        _ => return None,
    })
}

/// Default trial counts. Cheap sampled inequalities use 10³ (quick) or 10⁵
/// (full); claims whose trials run heuristic searches use smaller fixed
/// counts.
pub fn default_trials(id: &str, profile: Profile) -> usize {
    let full = profile == Profile::Full;
    match id {
        "lemma-con1" | "lemma-con2" | "prop-construction1" => {
            if full {
                100_000
            } else {
                1_000
            }
        }
        "eq-f1" => {
            if full {
                10_000
            } else {
                1_000
            }
        }
        "prop-construction2" | "thm-dist" => {
            if full {
                100
            } else {
                20
            }
        }
        "lemma-max-ent" => {
            if full {
                1_000
            } else {
                100
            }
        }
        "prop-global2" => {
            if full {
                50
            } else {
                20
            }
        }
        "prop-gamma" | "prop-lu" => 1_000,
        "con-hie" => 10_000,
        _ => 1,
    }
}

/// Default `r` for claims parameterized by it.
pub fn default_r(id: &str, dims: Dims) -> Option<f64> {
    match id {
        "lemma-con1" => Some(con1_radius(dims)),
        "lemma-con2" | "prop-construction1" | "prop-construction2" | "lemma-max-ent"
        | "thm-dist" | "prop-global2" | "prop-lu" | "con-hie" => Some(r0(dims)),
        _ => None,
    }
}

/// Sampling budget for `FullMeop` families inside claim runners.
pub const FULL_MEOP_BUDGET: usize = DEFAULT_SAMPLE_BUDGET;
/// Rotations used for the LU-invariance of verdicts.
pub const LU_ROTATIONS: usize = 100;

/// Overrides for a claim run; unset fields take the defaults above.
#[derive(Debug, Clone, Copy)]
pub struct ClaimParams {
    pub r: Option<f64>,
    pub trials: Option<usize>,
    pub tol: f64,
    pub profile: Profile,
}

impl Default for ClaimParams {
    fn default() -> Self {
        ClaimParams {
            r: None,
            trials: None,
            tol: TOL,
            profile: Profile::Quick,
        }
    }
}

fn fnv1a(s: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in s.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Child seed of a claim; see the module documentation.
pub fn child_seed(seed: u64, claim_id: &str) -> u64 {
    let mut rng = chacha(seed);
    rng.set_stream(fnv1a(claim_id));
    rng.next_u64()
}

fn chunk_rng(seed: u64, chunk: usize) -> ChaCha8Rng {
    let mut rng = chacha(seed);
    rng.set_stream(chunk as u64);
    rng
}

/// Run `trial` `trials` times in deterministic chunks.
fn sampled<F>(trials: usize, seed: u64, tol: f64, trial: F) -> Result<Checks>
where
    F: Fn(&mut ChaCha8Rng, &mut Checks) -> Result<()> + Sync,
{
    let chunks = trials.div_ceil(CHUNK);
    let parts = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = chunk_rng(seed, c);
            let mut checks = Checks::new(tol);
            let n = CHUNK.min(trials - c * CHUNK);
            for _ in 0..n {
                trial(&mut rng, &mut checks)?;
            }
            checks.add_trials(n as u64);
            Ok(checks)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut all = Checks::new(tol);
    for p in parts {
        all.merge(p);
    }
    Ok(all)
}

fn check_r_range(r: f64, hi: f64) -> Result<()> {
    if r.is_finite() && r >= 0.0 && r <= hi + 1e-12 {
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

/// `Tr(N(λ;E) N(μ;F))` through the Gram matrix of the two bases.
fn npm_pair_value(lambda: f64, e: &MEBasis, mu: f64, f: &MEBasis) -> f64 {
    let w = |x: f64, k: usize| match k {
        0 => -x,
        1 => 1.0 + x,
        _ => 0.5,
    };
    let mut acc = 0.0;
    for (k, u) in e.vectors().iter().enumerate() {
        for (l, v) in f.vectors().iter().enumerate() {
            acc += w(lambda, k) * w(mu, l) * u.inner(v).norm_sqr();
        }
    }
    acc
}

fn run_con1(dims: Dims, r: f64, trials: usize, seed: u64, tol: f64) -> Result<Checks> {
    check_r_range(r, con1_radius(dims))?;
    let mut c = sampled(trials, seed, tol, |rng, c| {
        let basis = random_mebasis(dims, rng);
        let lambda = r * rng.random::<f64>();
        let y = random_product_pure(dims, rng);
        let n = npm_element(lambda, &basis)?;
        c.ge("Tr N y >= 0", n.quad_form(&y), 0.0);
        Ok(())
    })?;
    // the extremal element at λ = r against its most dangerous product vector
    let n = npm_element(r, &weyl_bell_basis(dims))?;
    let v = is_block_positive_default(&n, dims, seed)?;
    c.ge("min product value of N(r)", v.bound.unwrap_or(f64::NAN), 0.0);
    c.note(format!(
        "alternating-minimization minimum of N(r) over product vectors: {:.3e}",
        v.bound.unwrap_or(f64::NAN)
    ));
    Ok(c)
}

fn run_con2(dims: Dims, r: f64, trials: usize, seed: u64, tol: f64) -> Result<Checks> {
    check_r_range(r, r0(dims))?;
    let floor = con2_floor(r, dims);
    let mut c = sampled(trials, seed, tol, |rng, c| {
        let e = random_mebasis(dims, rng);
        let f = random_mebasis(dims, rng);
        let lambda = r * rng.random::<f64>();
        let mu = r * rng.random::<f64>();
        let v = npm_pair_value(lambda, &e, mu, &f);
        c.ge("Tr xy >= floor", v, floor);
        c.ge("Tr xy >= 0", v, 0.0);
        Ok(())
    })?;
    // the pair attaining the floor: same basis with E_1, E_2 swapped
    let b = weyl_bell_basis(dims);
    let swapped = crate::discrimination::swap_family(&b);
    let tight = npm_pair_value(r, &b, r, &swapped);
    c.close("swapped pair attains the floor", tight, floor, 1e-12);
    c.note(format!("analytic floor -2(r+1/2)^2 + D/4 = {:.12}", floor + 0.0));
    Ok(c)
}

/// Shrink a state toward `I/D` until it passes the dual test.
fn dual_state(
    rng: &mut ChaCha8Rng,
    dims: Dims,
    r: f64,
    fam: &FamilySpec,
) -> Result<(HermMat, bool)> {
    let n = dims.total();
    let rho = random_state(n, rng);
    let mixed = HermMat::identity(n).scale(1.0 / n as f64);
    let mut t = 1.0;
    for _ in 0..60 {
        let x = &rho.scale(t) + &mixed.scale(1.0 - t);
        if kr0_dual_membership(&x, r, fam)?.is_certified_inside() {
            return Ok((x, true));
        }
        t *= 0.5;
    }
    Ok((mixed, false))
}

fn run_construction1(dims: Dims, r: f64, trials: usize, seed: u64, tol: f64) -> Result<Checks> {
    check_r_range(r, r0(dims))?;
    sampled(trials, seed, tol, |rng, c| {
        let fam_bases = vec![random_mebasis(dims, rng), random_mebasis(dims, rng)];
        let fam = FamilySpec::Finite(fam_bases.clone());
        let mut side = |rng: &mut ChaCha8Rng| -> Result<HermMat> {
            if rng.random::<bool>() {
                let (x, ok) = dual_state(rng, dims, r, &fam)?;
                c.holds("sampled state reaches the dual cone", ok);
                Ok(x)
            } else {
                let b = &fam_bases[rng.random_range(0..2)];
                npm_element(r * rng.random::<f64>(), b)
            }
        };
        let x = side(rng)?;
        let y = side(rng)?;
        c.ge("Tr xy >= 0", trace_inner_unchecked(&x, &y), 0.0);
        Ok(())
    })
}

fn run_construction2(dims: Dims, r: f64, trials: usize, seed: u64) -> Result<Checks> {
    check_r_range(r, r0(dims))?;
    if r <= 0.0 {
        return Err(Error::ParameterOutOfRange {
            name: "r",
            value: r,
            lo: f64::MIN_POSITIVE,
            hi: r0(dims),
        });
    }
    let fam = FamilySpec::full_meop(FULL_MEOP_BUDGET, seed)?;
    let mut c = Checks::new(1e-9);
    let expected = 4.0 * r / (2.0 * r + 1.0);
    match d_bound_report(r, &fam, dims, trials, seed) {
        Ok(rep) => {
            for w in &rep.witness_states {
                c.close("dist = 4r/(2r+1)", w.dist, expected, 1e-9);
                c.ge("dist <= eps_r", rep.epsilon_r, w.dist);
            }
            c.add_trials(rep.sampled_sigma_count as u64);
            c.note(format!(
                "max distance {:.12} <= eps_r = {:.12}",
                rep.max_over_sigma_of_min_dist, rep.epsilon_r
            ));
        }
        Err(Error::MembershipAssertion(m)) => {
            c.holds("witness state construction", false);
            c.note(m);
        }
        Err(e) => return Err(e),
    }
    Ok(c)
}

fn run_max_ent(dims: Dims, r: f64, trials: usize, seed: u64, tol: f64) -> Result<Checks> {
    check_r_range(r, r0(dims))?;
    let p = 1.0 / (2.0 * r + 1.0);
    let n = dims.total();
    let inv_d = 1.0 / n as f64;
    sampled(trials, seed, tol, |rng, c| {
        let rho = random_state(n, rng);
        let fm = f_max(&rho, F_MAX_RESTARTS, F_MAX_ITERS, rng.next_u64())?.value;
        // F_max(tρ + (1−t)I/D) = t F_max(ρ) + (1−t)/D; aim just below p
        let t = if fm > p {
            0.999 * (p - inv_d) / (fm - inv_d)
        } else {
            1.0
        };
        let mixed = HermMat::identity(n).scale(inv_d);
        let x = &rho.scale(t) + &mixed.scale(1.0 - t);
        let fam = FamilySpec::full_meop(FULL_MEOP_BUDGET, rng.next_u64())?;
        let v = kr0_dual_membership(&x, r, &fam)?;
        c.holds("F_max <= 1/(2r+1) implies dual membership", v.is_inside());
        c.ge("dual bound", v.bound.unwrap_or(f64::NAN), 0.0);
        Ok(())
    })
}

fn run_global2(dims: Dims, r: f64, trials: usize, seed: u64) -> Result<Checks> {
    check_r_range(r, r0(dims))?;
    let parts = (0..trials)
        .into_par_iter()
        .map(|k| {
            let mut rng = chunk_rng(seed, k);
            let basis = random_mebasis(dims, &mut rng);
            let w = gu_breaking_witness(r, &basis)?;
            let mut c = Checks::new(1e-10);
            c.add_trials(1);
            c.ge("violation <= -r", -r, w.violation);
            let gx = apply(&w.g, &w.x)?;
            let bp = is_block_positive_default(&gx, dims, rng.next_u64())?;
            c.holds("g(x) outside SEP*", bp.status == Status::Outside);
            let bx = is_block_positive_default(&w.x, dims, rng.next_u64())?;
            c.holds("x inside SEP*", bx.status == Status::Inside);
            Ok(c)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut c = Checks::new(1e-10);
    for p in parts {
        c.merge(p);
    }
    Ok(c)
}

fn run_hierarchy(dims: Dims, r1: f64, budget: usize, seed: u64) -> Result<Checks> {
    check_r_range(r1, r0(dims))?;
    let r2 = r1 / 2.0;
    let fam = FamilySpec::Finite(vec![weyl_bell_basis(dims)]);
    let h = hierarchy_witness(r1, r2, &fam, dims, seed, budget)?;
    let mut c = Checks::new(1e-9);
    c.add_trials(h.candidates_tried as u64);
    c.holds("witness found within budget", h.found);
    if h.found {
        c.holds("outside NPM_r1*", h.verdict_r1.is_outside());
        c.holds("inside NPM_r2*", h.verdict_r2.is_certified_inside());
        if let Some(w) = &h.verdict_r1.witness {
            c.close("witness re-evaluation", w.evaluate(&h.x), w.violation, 1e-12);
        }
    }
    c.note(format!(
        "r1 = {r1:.7}, r2 = {r2:.7}: found = {}, candidates = {}, window = {:.3e}",
        h.found, h.candidates_tried, h.window
    ));
    c.note("evidence that the dual constraint sets differ; the primal inclusion direction is not asserted");
    Ok(c)
}

fn run_f1(dims: Dims, trials: usize, seed: u64, tol: f64) -> Result<Checks> {
    let n = dims.total();
    sampled(trials, seed, tol, |rng, c| {
        let rho = random_state(n, rng);
        let sigma = if rng.random::<bool>() {
            HermMat::projector(&random_pure(n, rng))
        } else {
            HermMat::projector(&haar_mes(dims, rng))
        };
        let f = fidelity_pure(&rho, &sigma)?;
        let d = trace_norm(&(&rho - &sigma))?;
        c.ge("|rho - sigma|_1 <= 2 sqrt(1 - F)", 2.0 * (1.0 - f).max(0.0).sqrt(), d);
        Ok(())
    })
}

fn registered() -> Vec<String> {
    CLAIMS.iter().map(|s| s.to_string()).collect()
}

/// Run one registered claim. Mathematical failures produce `pass = false`;
/// errors are reserved for unknown ids and out-of-domain parameters.
pub fn run_claim(id: &str, dims: Dims, params: &ClaimParams, seed: u64) -> Result<ClaimReport> {
    if claim_modules(id).is_none() {
        return Err(Error::UnknownClaim {
            id: id.to_string(),
            registered: registered(),
        });
    }
    if !(params.tol > 0.0 && params.tol < 1.0) {
        return Err(Error::MalformedParam {
            name: "tol".into(),
            reason: format!("{} not in (0, 1)", params.tol),
        });
    }
    if params.trials == Some(0) {
        return Err(Error::MalformedParam {
            name: "trials".into(),
            reason: "must be at least 1".into(),
        });
    }
    let start = Instant::now();
    let trials = params.trials.unwrap_or_else(|| default_trials(id, params.profile));
    let r = params.r.or_else(|| default_r(id, dims));
    let s = child_seed(seed, id);
    let tol = params.tol;
    let rr = || r.expect("claim takes r");

    let mut rp: BTreeMap<String, f64> = BTreeMap::new();
    if let Some(r) = r {
        rp.insert("r".into(), r);
    }
    rp.insert("trials".into(), trials as f64);

    let checks = match id {
        "lemma-con1" => run_con1(dims, rr(), trials, s, tol)?,
        "lemma-con2" => run_con2(dims, rr(), trials, s, tol)?,
        "prop-construction1" => run_construction1(dims, rr(), trials, s, tol)?,
        "prop-construction2" => {
            rp.insert("sample_budget".into(), FULL_MEOP_BUDGET as f64);
            rp.insert("epsilon_r".into(), epsilon_of_r(rr())?);
            run_construction2(dims, rr(), trials, s)?
        }
        "lemma-max-ent" => run_max_ent(dims, rr(), trials, s, tol)?,
        "thm-dist" => {
            let mut rep = verify_theorem_dist(rr(), dims, trials, s)?;
            rep.seed = seed;
            rep.wall_time_s = start.elapsed().as_secs_f64();
            return Ok(rep);
        }
        "prop-global2" => run_global2(dims, rr(), trials, s)?,
        "prop-gamma" => {
            let mut rep = check_gamma_self_dual(dims, trials, s)?;
            rep.seed = seed;
            rep.wall_time_s = start.elapsed().as_secs_f64();
            return Ok(rep);
        }
        "prop-lu" => {
            check_r_range(rr(), r0(dims))?;
            let mut rep = check_lu_symmetry_npm(rr(), dims, trials, LU_ROTATIONS, s)?;
            rep.seed = seed;
            rep.wall_time_s = start.elapsed().as_secs_f64();
            return Ok(rep);
        }
        "prop-cap" => {
            let mut rep = check_capacity(dims, s)?;
            rep.seed = seed;
            rep.wall_time_s = start.elapsed().as_secs_f64();
            return Ok(rep);
        }
        "con-hie" => {
            rp.insert("r2".into(), rr() / 2.0);
            run_hierarchy(dims, rr(), trials, s)?
        }
        "eq-f1" => run_f1(dims, trials, s, tol)?,
        _ => unreachable!("registry checked above"),
    };
    if tol != TOL {
        rp.insert("tol".into(), tol);
    }
    Ok(checks.into_report(id, dims, rp, seed, start.elapsed().as_secs_f64()))
}

/// Run every registered claim concurrently, returning reports in registry
/// order. `params.r` must be unset since each claim has its own range.
pub fn run_all(dims: Dims, seed: u64, params: &ClaimParams) -> Result<Vec<ClaimReport>> {
    if params.r.is_some() {
        return Err(Error::MalformedParam {
            name: "r".into(),
            reason: "cannot be combined with a run over all claims".into(),
        });
    }
    CLAIMS
        .par_iter()
        .map(|id| run_claim(id, dims, params, seed))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d2() -> Dims {
        Dims::new(2).unwrap()
    }

    fn small(trials: usize) -> ClaimParams {
        ClaimParams {
            trials: Some(trials),
            ..ClaimParams::default()
        }
    }

    #[test]
    fn unknown_claim_lists_registry() {
        let e = run_claim("nope", d2(), &ClaimParams::default(), 0).unwrap_err();
        let msg = e.to_string();
        assert!(msg.contains("lemma-con1") && msg.contains("eq-f1"));
    }

    #[test]
    fn child_seeds_differ_per_claim_and_seed() {
        assert_ne!(child_seed(0, "lemma-con1"), child_seed(0, "lemma-con2"));
        assert_ne!(child_seed(0, "lemma-con1"), child_seed(1, "lemma-con1"));
        assert_eq!(child_seed(5, "thm-dist"), child_seed(5, "thm-dist"));
    }

    #[test]
    fn con2_at_r0_has_zero_floor() {
        let rep = run_claim("lemma-con2", d2(), &small(2000), 0).unwrap();
        assert!(rep.pass, "{:?}", rep.notes);
        assert!(rep.max_violation >= -1e-9);
        assert!(rep.notes[0].contains("0.000000000000"));
    }

    #[test]
    fn out_of_range_r_is_an_error() {
        let p = ClaimParams {
            r: Some(0.3),
            ..small(10)
        };
        assert!(run_claim("lemma-con2", d2(), &p, 0).is_err());
        // con1 admits r up to (√D−1)/2
        let p = ClaimParams {
            r: Some(0.5),
            ..small(100)
        };
        assert!(run_claim("lemma-con1", d2(), &p, 0).unwrap().pass);
    }

    #[test]
    fn reports_are_deterministic() {
        let a = run_claim("prop-construction1", d2(), &small(1500), 3).unwrap();
        let b = run_claim("prop-construction1", d2(), &small(1500), 3).unwrap();
        assert!(a.pass, "{:?}", a.notes);
        assert_eq!(a.max_violation.to_bits(), b.max_violation.to_bits());
        assert_eq!(a.trials, 1500);
    }

    #[test]
    fn small_runs_of_every_claim_pass() {
        for id in CLAIMS {
            let trials = match id {
                "con-hie" => 100,
                "prop-construction2" | "thm-dist" | "prop-global2" => 3,
                _ => 20,
            };
            let rep = run_claim(id, d2(), &small(trials), 11).unwrap();
            assert!(rep.pass, "{id}: {:?}", rep.notes);
        }
    }
}
