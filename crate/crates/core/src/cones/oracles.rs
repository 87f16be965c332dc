use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{Certificate, MembershipVerdict, Witness};
use crate::error::{Error, Result};
use crate::herm::{
    chacha, eig_h, haar_unit_vector, partial_transpose, CMat, CVec, Dims, HermMat, PureVec, ZERO,
};
use crate::tol::TOL;

pub const BLOCK_POSITIVE_RESTARTS: usize = 32;
pub const BLOCK_POSITIVE_ITERS: usize = 200;

/// SES membership: positive semidefiniteness.
pub fn is_psd(x: &HermMat) -> Result<MembershipVerdict> {
    let eig = eig_h(x)?;
    let (lmin, v) = eig.min();
    if lmin < -TOL {
        Ok(MembershipVerdict::outside(Witness::vector(x, v.clone())))
    } else {
        Ok(MembershipVerdict::inside(
            Certificate::Spectral {
                min_eigenvalue: lmin,
            },
            lmin,
        ))
    }
}

/// Best product vector found by [`min_product_value`].
#[derive(Debug, Clone)]
pub struct ProductMin {
    pub value: f64,
    pub a: PureVec,
    pub b: PureVec,
}

impl ProductMin {
    pub fn product(&self) -> PureVec {
        self.a.kron(&self.b)
    }
}

// M_b[b, b'] = Σ_{a,a'} conj(α_a) x[(a,b),(a',b')] α_a'
fn contract_a(x: &CMat, d: usize, alpha: &CVec) -> CMat {
    let mut m = CMat::zeros(d, d);
    for a in 0..d {
        for a2 in 0..d {
            let w = alpha[a].conj() * alpha[a2];
            if w == ZERO {
                continue;
            }
            for b in 0..d {
                for b2 in 0..d {
                    m[(b, b2)] += w * x[(a * d + b, a2 * d + b2)];
                }
            }
        }
    }
    m
}

fn contract_b(x: &CMat, d: usize, beta: &CVec) -> CMat {
    let mut m = CMat::zeros(d, d);
    for b in 0..d {
        for b2 in 0..d {
            let w = beta[b].conj() * beta[b2];
            if w == ZERO {
                continue;
            }
            for a in 0..d {
                for a2 in 0..d {
                    m[(a, a2)] += w * x[(a * d + b, a2 * d + b2)];
                }
            }
        }
    }
    m
}

fn min_eigvec(m: CMat) -> Result<(f64, PureVec)> {
    let eig = eig_h(&HermMat::hermitian_part(m))?;
    let (v, p) = eig.min();
    Ok((v, p.clone()))
}

fn descend(x: &CMat, d: usize, mut alpha: PureVec, iters: usize) -> Result<ProductMin> {
    let (mut value, mut beta) = min_eigvec(contract_a(x, d, alpha.amplitudes()))?;
    for _ in 0..iters {
        let (_, na) = min_eigvec(contract_b(x, d, beta.amplitudes()))?;
        let (nv, nb) = min_eigvec(contract_a(x, d, na.amplitudes()))?;
        let improved = nv < value - 1e-15 * value.abs().max(1.0);
        if nv <= value {
            alpha = na;
            beta = nb;
            value = nv;
        }
        if !improved {
            break;
        }
    }
    Ok(ProductMin {
        value,
        a: alpha,
        b: beta,
    })
}

fn restart_rng(seed: u64, restart: usize) -> ChaCha8Rng {
    let mut rng = chacha(seed);
    rng.set_stream(restart as u64);
    rng
}

/// Minimum of `⟨a⊗b|x|a⊗b⟩` found by alternating minimization.
///
/// Start 0 is the leading Schmidt vector of the lowest eigenvector of `x`;
/// start `k ≥ 1` draws Alice's vector from stream `k` of `seed`. Restarts run
/// in parallel and the smallest value wins (ties to the lowest index), so the
/// result does not depend on thread count.
pub fn min_product_value(
    x: &HermMat,
    dims: Dims,
    restarts: usize,
    iters: usize,
    seed: u64,
) -> Result<ProductMin> {
    dims.check(x.dim())?;
    let d = dims.d_loc();
    let eig = eig_h(x)?;
    let coeff = eig.min().1.coefficient_matrix(dims)?;
    let svd = coeff.svd(true, false);
    let u = svd.u.ok_or(Error::SvdFailure(d))?;
    let (top, _) = svd
        .singular_values
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, &s)| if s > acc.1 { (i, s) } else { acc });
    let first = PureVec::normalized(u.column(top).into_owned())?;

    let results: Vec<Result<ProductMin>> = (0..restarts.max(1))
        .into_par_iter()
        .map(|k| {
            let start = if k == 0 {
                first.clone()
            } else {
                haar_unit_vector(d, &mut restart_rng(seed, k))
            };
            descend(x.matrix(), d, start, iters)
        })
        .collect();
    let mut best: Option<ProductMin> = None;
    for r in results {
        let r = r?;
        if best.as_ref().is_none_or(|b| r.value < b.value) {
            best = Some(r);
        }
    }
    let mut best = best.expect("at least one restart");
    // report the value the returned vector attains
    best.value = x.quad_form(&best.product());
    Ok(best)
}

/// SEP* membership via [`min_product_value`]. `Outside` carries the violating
/// product vector; `Inside` is heuristic and never certified.
pub fn is_block_positive(
    x: &HermMat,
    dims: Dims,
    restarts: usize,
    iters: usize,
    seed: u64,
) -> Result<MembershipVerdict> {
    let best = min_product_value(x, dims, restarts, iters, seed)?;
    if best.value < -TOL {
        Ok(MembershipVerdict::outside(Witness::vector(x, best.product())))
    } else {
        Ok(MembershipVerdict::inside(
            Certificate::AlternatingMinimization {
                restarts,
                iters,
                min_value: best.value,
            },
            best.value,
        ))
    }
}

pub fn is_block_positive_default(x: &HermMat, dims: Dims, seed: u64) -> Result<MembershipVerdict> {
    is_block_positive(x, dims, BLOCK_POSITIVE_RESTARTS, BLOCK_POSITIVE_ITERS, seed)
}

/// Peres–Horodecki test. `Inside` only when `D ≤ 6`, otherwise a PPT state
/// is `Undecided`. `Outside` carries `Γ(|v⟩⟨v|)` for the lowest eigenvector
/// `v` of `Γ(x)`, whose trace against `x` is that eigenvalue.
pub fn is_ppt_separable(x: &HermMat, dims: Dims) -> Result<MembershipVerdict> {
    dims.check(x.dim())?;
    let tr = x.trace();
    if (tr - 1.0).abs() > TOL {
        return Err(Error::NotAState(format!("trace {tr}")));
    }
    let lmin = eig_h(x)?.min().0;
    if lmin < -TOL {
        return Err(Error::NotAState(format!("min eigenvalue {lmin}")));
    }
    let g = partial_transpose(x, dims)?;
    let eig = eig_h(&g)?;
    let (gmin, v) = eig.min();
    if gmin < -TOL {
        let w = partial_transpose(&HermMat::projector(v), dims)?;
        return Ok(MembershipVerdict::outside(Witness::matrix(x, w)));
    }
    let cert = Certificate::PptExact {
        min_pt_eigenvalue: gmin,
    };
    if dims.total() <= 6 {
        Ok(MembershipVerdict::inside(cert, gmin))
    } else {
        Ok(MembershipVerdict::undecided(Some(cert), Some(gmin)))
    }
}
