//! Maximization of `⟨Φ|x|Φ⟩` over maximally entangled unit vectors `|Φ⟩`.
//!
//! Every maximally entangled vector is `|Φ_U⟩ = (U ⊗ I)|Φ+⟩`, whose
//! coefficient matrix is `U / √d`. The objective is a quadratic form in
//! `vec(U)`; after shifting `x` to be positive semidefinite it is convex, so
//! replacing `U` by the polar factor of the gradient matrix `G = (x Φ_U)`
//! (reshaped to `d × d`) never decreases it.

use nalgebra::Complex;
use rand::Rng;

use super::{eig_h, haar_unitary, polar_unitary, CMat, CVec, Dims, HermMat, PureVec};
use crate::error::Result;

/// Result of [`max_me_overlap`]: the best value found and its maximizer.
#[derive(Debug, Clone)]
pub struct MeOverlap {
    pub value: f64,
    pub mes: PureVec,
    pub unitary: CMat,
    pub iterations: usize,
}

fn mes_from_unitary(u: &CMat) -> CVec {
    let d = u.nrows();
    let s = Complex::new(1.0 / (d as f64).sqrt(), 0.0);
    CVec::from_fn(d * d, |k, _| u[(k / d, k % d)] * s)
}

fn quad(x: &CMat, v: &CVec) -> f64 {
    v.dotc(&(x * v)).re
}

fn ascend(shifted: &CMat, d: usize, mut u: CMat, iters: usize, out_iters: &mut usize) -> Result<CMat> {
    let mut v = mes_from_unitary(&u);
    let mut f = quad(shifted, &v);
    for _ in 0..iters {
        let g = shifted * &v;
        let gm = CMat::from_fn(d, d, |a, b| g[a * d + b]);
        let next = polar_unitary(&gm)?;
        let nv = mes_from_unitary(&next);
        let nf = quad(shifted, &nv);
        *out_iters += 1;
        if nf <= f + 1e-15 * f.abs().max(1.0) {
            if nf > f {
                u = next;
            }
            break;
        }
        u = next;
        v = nv;
        f = nf;
    }
    Ok(u)
}

/// Best `⟨Φ|x|Φ⟩` over maximally entangled `|Φ⟩`, from one start at the
/// maximally entangled vector closest to the top eigenvector of `x` plus
/// `restarts − 1` Haar-random starts. The returned value is attained by the
/// returned vector, so it is a lower bound on the true maximum.
pub fn max_me_overlap<R: Rng + ?Sized>(
    x: &HermMat,
    dims: Dims,
    restarts: usize,
    iters: usize,
    rng: &mut R,
) -> Result<MeOverlap> {
    dims.check(x.dim())?;
    let d = dims.d_loc();
    let eig = eig_h(x)?;
    let (lmin, _) = eig.min();
    let n = dims.total();
    // ⟨Φ|I|Φ⟩ = 1, so shifting by the smallest eigenvalue only moves the
    // objective by a constant; leaving an identity component would damp the
    // polar steps
    let shifted = x.matrix() - CMat::identity(n, n) * Complex::new(lmin, 0.0);

    let top = eig.max().1.coefficient_matrix(dims)?;
    let mut starts = vec![polar_unitary(&top)?];
    for _ in 1..restarts.max(1) {
        starts.push(haar_unitary(d, rng));
    }

    let mut best: Option<MeOverlap> = None;
    let mut total_iters = 0;
    for start in starts {
        let u = ascend(&shifted, d, start, iters, &mut total_iters)?;
        let mes = PureVec::normalized(mes_from_unitary(&u))?.with_canonical_phase();
        let value = x.quad_form(&mes);
        if best.as_ref().is_none_or(|b| value > b.value) {
            best = Some(MeOverlap {
                value,
                mes,
                unitary: u,
                iterations: 0,
            });
        }
    }
    let mut best = best.expect("at least one start");
    best.iterations = total_iters;
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::herm::{chacha, phi_plus, random_state, weyl_bell_basis};

    #[test]
    fn maximally_mixed_gives_one_over_d() {
        let dims = Dims::new(3).unwrap();
        let x = HermMat::identity(9).scale(1.0 / 9.0);
        let r = max_me_overlap(&x, dims, 4, 50, &mut chacha(0)).unwrap();
        assert!((r.value - 1.0 / 9.0).abs() < 1e-14);
        assert!(r.mes.entanglement_deviation(dims).unwrap() < 1e-12);
    }

    #[test]
    fn finds_a_rotated_bell_state() {
        let dims = Dims::new(2).unwrap();
        let b = weyl_bell_basis(dims);
        let x = b.projector(3);
        let r = max_me_overlap(&x, dims, 1, 100, &mut chacha(1)).unwrap();
        assert!((r.value - 1.0).abs() < 1e-12, "{}", r.value);
        let x = HermMat::projector(&phi_plus(dims));
        let r = max_me_overlap(&x, dims, 1, 100, &mut chacha(1)).unwrap();
        assert!((r.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn never_below_any_tested_mes() {
        let dims = Dims::new(2).unwrap();
        let mut rng = chacha(4);
        for _ in 0..20 {
            let rho = random_state(4, &mut rng);
            let r = max_me_overlap(&rho, dims, 4, 200, &mut rng).unwrap();
            for k in 0..4 {
                assert!(r.value >= weyl_bell_basis(dims).overlaps(&rho)[k] - 1e-12);
            }
        }
    }
}
