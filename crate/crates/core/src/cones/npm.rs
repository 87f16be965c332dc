use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{
    check_r, is_psd, Certificate, FamilySpec, MembershipVerdict, Status, Witness,
};
use crate::error::{Error, Result};
use crate::herm::{
    chacha, haar_local_pair, max_me_overlap, weyl_bell_basis, CMat, Dims, HermMat, LocalPair,
    MEBasis,
};
use crate::tol::TOL;

/// `N(λ;{E_k}) = −λE_1 + (1+λ)E_2 + ½ Σ_{k≥3} E_k`.
pub fn npm_element(lambda: f64, basis: &MEBasis) -> Result<HermMat> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::ParameterOutOfRange {
            name: "lambda",
            value: lambda,
            lo: 0.0,
            hi: f64::INFINITY,
        });
    }
    let dim = basis.dims().total();
    let weights = (0..basis.len()).map(|k| match k {
        0 => -lambda,
        1 => 1.0 + lambda,
        _ => 0.5,
    });
    Ok(HermMat::weighted_projectors(
        dim,
        weights.zip(basis.vectors().iter()),
    ))
}

/// `Tr(x N(λ;{E_k}))` from the overlaps `o_k = Tr(x E_k)`.
pub fn npm_value(overlaps: &[f64], lambda: f64) -> f64 {
    let rest: f64 = overlaps[2..].iter().sum();
    -lambda * overlaps[0] + (1.0 + lambda) * overlaps[1] + 0.5 * rest
}

/// Smallest `Tr(x N)` found over the tested NPM elements.
#[derive(Debug, Clone)]
pub struct NpmSearch {
    pub min_value: f64,
    pub lambda: f64,
    /// Ordered basis attaining `min_value`.
    pub basis: MEBasis,
    pub bases_tested: usize,
    pub exhaustive: bool,
}

fn endpoint_min(overlaps: &[f64], r: f64) -> (f64, f64) {
    let v0 = npm_value(overlaps, 0.0);
    let vr = npm_value(overlaps, r);
    if vr < v0 {
        (vr, r)
    } else {
        (v0, 0.0)
    }
}

/// Ordering of an unordered basis that minimizes `Tr(x N(λ))` for every
/// `λ ≥ 0`: largest overlap first, smallest of the rest second.
fn best_ordering(overlaps: &[f64]) -> (usize, usize) {
    let mut i = 0;
    for (k, &o) in overlaps.iter().enumerate() {
        if o > overlaps[i] {
            i = k;
        }
    }
    let mut j = usize::from(i == 0);
    for (k, &o) in overlaps.iter().enumerate() {
        if k != i && o < overlaps[j] {
            j = k;
        }
    }
    (i, j)
}

const TARGET_RESTARTS: usize = 4;
const TARGET_ITERS: usize = 200;

fn stream(seed: u64, k: usize) -> ChaCha8Rng {
    let mut rng = chacha(seed);
    rng.set_stream(k as u64);
    rng
}

/// Candidate `k` of a sampled search: 0 and 1 are Weyl bases whose first
/// member is the best maximally entangled vector found for `x` and for `−x`;
/// the rest are Haar-LU rotations of the Weyl basis.
fn sampled_candidate(x: &HermMat, dims: Dims, seed: u64, k: usize) -> Result<MEBasis> {
    let weyl = weyl_bell_basis(dims);
    let d = dims.d_loc();
    let pair = match k {
        0 | 1 => {
            let target = if k == 0 { x.clone() } else { -x };
            let best = max_me_overlap(
                &target,
                dims,
                TARGET_RESTARTS,
                TARGET_ITERS,
                &mut stream(seed, k),
            )?;
            LocalPair {
                ua: best.unitary,
                ub: CMat::identity(d, d),
            }
        }
        _ => haar_local_pair(dims, &mut stream(seed, k)),
    };
    Ok(weyl.rotate(&pair))
}

/// `(value, λ, candidate index, leading pair)` of one sampled basis.
type Scored = (f64, f64, usize, (usize, usize));

/// Minimize `Tr(x N(λ;{E_k}))` over `λ ∈ {0, r}` and the family. Finite
/// families are enumerated in their given ordering; for `FullMeop` every
/// sampled basis is also reordered optimally.
pub fn npm_search(x: &HermMat, r: f64, family: &FamilySpec) -> Result<NpmSearch> {
    let dims = Dims::from_total(x.dim())?;
    check_r(r, dims)?;
    family.check_dims(dims)?;
    match family {
        FamilySpec::Finite(bases) => {
            let mut best: Option<(f64, f64, usize)> = None;
            for (i, b) in bases.iter().enumerate() {
                let (v, lambda) = endpoint_min(&b.overlaps(x), r);
                if best.is_none_or(|(bv, _, _)| v < bv) {
                    best = Some((v, lambda, i));
                }
            }
            let (min_value, lambda, i) = best.expect("finite family is nonempty");
            Ok(NpmSearch {
                min_value,
                lambda,
                basis: bases[i].clone(),
                bases_tested: bases.len(),
                exhaustive: true,
            })
        }
        FamilySpec::FullMeop {
            sample_budget,
            seed,
        } => {
            let scored: Vec<Result<Scored>> = (0..*sample_budget)
                .into_par_iter()
                .map(|k| {
                    let b = sampled_candidate(x, dims, *seed, k)?;
                    let o = b.overlaps(x);
                    let (i, j) = best_ordering(&o);
                    let mut ordered = vec![o[i], o[j]];
                    ordered.extend((0..o.len()).filter(|&m| m != i && m != j).map(|m| o[m]));
                    let (v, lambda) = endpoint_min(&ordered, r);
                    Ok((v, lambda, k, (i, j)))
                })
                .collect();
            let mut best: Option<(f64, f64, usize, (usize, usize))> = None;
            for s in scored {
                let s = s?;
                if best.is_none_or(|b| s.0 < b.0) {
                    best = Some(s);
                }
            }
            let (min_value, lambda, k, (i, j)) = best.expect("sample budget is at least 1");
            let basis = sampled_candidate(x, dims, *seed, k)?.with_leading(i, j);
            Ok(NpmSearch {
                min_value,
                lambda,
                basis,
                bases_tested: *sample_budget,
                exhaustive: false,
            })
        }
    }
}

/// NPM_r(P)* membership: `Tr(x N) ≥ −tol` for every tested NPM element.
pub fn npm_dual_membership(x: &HermMat, r: f64, family: &FamilySpec) -> Result<MembershipVerdict> {
    let search = npm_search(x, r, family)?;
    let n = npm_element(search.lambda, &search.basis)?;
    let witness = Witness::matrix(x, n);
    if witness.violation < -TOL {
        return Ok(MembershipVerdict::outside(witness));
    }
    let min_value = search.min_value.min(witness.violation);
    let cert = if search.exhaustive {
        Certificate::ExhaustiveFamily {
            bases: search.bases_tested,
            min_value,
        }
    } else {
        Certificate::Sampled {
            bases: search.bases_tested,
            min_value,
        }
    };
    Ok(MembershipVerdict::inside(cert, min_value))
}

/// `K_r^(0)(P)*` membership: `x ⪰ 0` and `x ∈ NPM_r(P)*`.
pub fn kr0_dual_membership(x: &HermMat, r: f64, family: &FamilySpec) -> Result<MembershipVerdict> {
    let dims = Dims::from_total(x.dim())?;
    check_r(r, dims)?;
    let psd = is_psd(x)?;
    if psd.status == Status::Outside {
        return Ok(psd);
    }
    let npm = npm_dual_membership(x, r, family)?;
    if npm.status == Status::Outside {
        return Ok(npm);
    }
    let bound = psd.bound.unwrap_or(0.0).min(npm.bound.unwrap_or(0.0));
    let certs = [psd.certificate, npm.certificate].into_iter().flatten().collect();
    Ok(MembershipVerdict::inside(Certificate::All(certs), bound))
}
