//! Seeded samplers. Every sampler is a pure function of its parameters and
//! the generator state handed to it.

use nalgebra::Complex;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{phi_plus, weyl_bell_basis, CMat, CVec, Dims, HermMat, MEBasis, PureVec};

/// Name of the generator recorded in reports.
pub const RNG_NAME: &str = "ChaCha8Rng";

pub fn chacha(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> Complex<f64> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex::new(re * s, im * s)
}

fn ginibre<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CMat {
    // column-major fill keeps the draw order fixed for a given dim
    CMat::from_fn(dim, dim, |_, _| complex_normal(rng))
}

/// Haar-distributed unitary via QR of a Ginibre matrix with the phases of
/// `diag(R)` divided out.
pub fn haar_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CMat {
    assert!(dim >= 1, "haar_unitary needs dim >= 1");
    loop {
        let qr = ginibre(dim, rng).qr();
        let r = qr.r();
        if (0..dim).any(|i| r[(i, i)].norm() < 1e-300) {
            continue;
        }
        let mut q = qr.q();
        for j in 0..dim {
            let ph = r[(j, j)] / r[(j, j)].norm();
            for i in 0..dim {
                q[(i, j)] *= ph;
            }
        }
        return q;
    }
}

pub fn haar_unitary_seeded(dim: usize, seed: u64) -> CMat {
    haar_unitary(dim, &mut chacha(seed))
}

/// Uniformly random unit vector in `C^dim`.
pub fn haar_unit_vector<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> PureVec {
    loop {
        let v = CVec::from_fn(dim, |_, _| complex_normal(rng));
        if let Ok(p) = PureVec::normalized(v) {
            return p;
        }
    }
}

pub fn random_pure<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> PureVec {
    haar_unit_vector(dim, rng)
}

/// `a ⊗ b` with `a`, `b` independent Haar-random local unit vectors.
pub fn random_product_pure<R: Rng + ?Sized>(dims: Dims, rng: &mut R) -> PureVec {
    let a = haar_unit_vector(dims.d_loc(), rng);
    let b = haar_unit_vector(dims.d_loc(), rng);
    a.kron(&b)
}

pub fn random_product_pure_seeded(dims: Dims, seed: u64) -> PureVec {
    random_product_pure(dims, &mut chacha(seed))
}

/// Hilbert–Schmidt random density matrix `G G† / Tr(G G†)`.
pub fn random_state<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> HermMat {
    let g = ginibre(dim, rng);
    let p = HermMat::hermitian_part(&g * g.adjoint());
    let t = p.trace();
    p.scale(1.0 / t)
}

/// GUE-distributed Hermitian matrix `(G + G†)/2`.
pub fn random_hermitian<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> HermMat {
    HermMat::hermitian_part(ginibre(dim, rng))
}

/// A pair of local unitaries `(U_A, U_B)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalPair {
    pub ua: CMat,
    pub ub: CMat,
}

impl LocalPair {
    pub fn identity(dims: Dims) -> Self {
        let d = dims.d_loc();
        LocalPair {
            ua: CMat::identity(d, d),
            ub: CMat::identity(d, d),
        }
    }

    /// `U_A ⊗ U_B`.
    pub fn kron(&self) -> CMat {
        self.ua.kronecker(&self.ub)
    }

    pub fn adjoint(&self) -> Self {
        LocalPair {
            ua: self.ua.adjoint(),
            ub: self.ub.adjoint(),
        }
    }
}

pub fn haar_local_pair<R: Rng + ?Sized>(dims: Dims, rng: &mut R) -> LocalPair {
    let ua = haar_unitary(dims.d_loc(), rng);
    let ub = haar_unitary(dims.d_loc(), rng);
    LocalPair { ua, ub }
}

/// Haar-random maximally entangled vector `(U ⊗ I)|Φ+⟩`.
pub fn haar_mes<R: Rng + ?Sized>(dims: Dims, rng: &mut R) -> PureVec {
    let d = dims.d_loc();
    let u = haar_unitary(d, rng);
    let local = LocalPair {
        ua: u,
        ub: CMat::identity(d, d),
    };
    let v = local.kron() * phi_plus(dims).amplitudes();
    PureVec::normalized(v)
        .expect("unitary image of a unit vector is nonzero")
        .with_canonical_phase()
}

/// Element of MEOP(A;B) sampled as a Haar-LU rotation of the Weyl basis with
/// its ordering shuffled uniformly.
pub fn random_mebasis<R: Rng + ?Sized>(dims: Dims, rng: &mut R) -> MEBasis {
    let pair = haar_local_pair(dims, rng);
    let rotated = weyl_bell_basis(dims).rotate(&pair);
    let mut order: Vec<usize> = (0..dims.total()).collect();
    order.shuffle(rng);
    rotated.permuted(&order)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::herm::unitarity_defect;

    #[test]
    fn haar_unitary_is_unitary_and_deterministic() {
        for dim in [1, 2, 4, 9] {
            let u = haar_unitary_seeded(dim, 11);
            assert!(unitarity_defect(&u) < 1e-13);
            assert_eq!(u, haar_unitary_seeded(dim, 11));
        }
        assert_ne!(haar_unitary_seeded(4, 1), haar_unitary_seeded(4, 2));
    }

    #[test]
    fn product_pure_has_schmidt_rank_one() {
        let dims = Dims::new(3).unwrap();
        let v = random_product_pure_seeded(dims, 5);
        let m = v.coefficient_matrix(dims).unwrap();
        let sv = m.singular_values();
        let mut s: Vec<f64> = sv.iter().copied().collect();
        s.sort_by(|a, b| b.total_cmp(a));
        assert!((s[0] - 1.0).abs() < 1e-12);
        assert!(s[1] < 1e-12 && s[2] < 1e-12);
        assert_eq!(v, random_product_pure_seeded(dims, 5));
    }

    #[test]
    fn random_state_is_a_state() {
        let mut rng = chacha(3);
        let rho = random_state(4, &mut rng);
        assert!((rho.trace() - 1.0).abs() < 1e-14);
        let ev = crate::herm::eigenvalues(&rho).unwrap();
        assert!(ev[3] > -1e-14);
    }

    #[test]
    fn haar_mes_is_maximally_entangled() {
        let dims = Dims::new(3).unwrap();
        let mut rng = chacha(9);
        for _ in 0..10 {
            let v = haar_mes(dims, &mut rng);
            assert!(v.entanglement_deviation(dims).unwrap() < 1e-13);
        }
    }
}
