use proptest::prelude::*;

use pseslab::cones::{
    con1_radius, con2_floor, npm_element, r0, ConeKind, ConeSpec, FamilySpec, OracleOptions,
};
use pseslab::herm::{
    chacha, eigenvalues, haar_local_pair, haar_mes, haar_unitary, random_hermitian,
    random_mebasis, random_product_pure, random_pure, random_state, trace_inner, Dims, HermMat,
};
use pseslab::metrics::{f_max, fidelity_pure, trace_norm};
use pseslab::symmetry::{apply, GroupElement};
use pseslab::tol::TOL;

fn d2() -> Dims {
    Dims::new(2).unwrap()
}

fn dims_of(n: usize) -> Dims {
    Dims::new(n).unwrap()
}

fn kinds(r: f64, fam: FamilySpec) -> Vec<ConeKind> {
    vec![
        ConeKind::Ses,
        ConeKind::SepDual,
        ConeKind::GammaSes,
        ConeKind::NpmCone(r, fam.clone()),
        ConeKind::Kr0(r, fam.clone()),
        ConeKind::Kr0Dual(r, fam.clone()),
        ConeKind::Kr(r, fam),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn outside_witnesses_re_evaluate(seed in any::<u64>(), shift in 0.0f64..1.5) {
        let dims = d2();
        let mut rng = chacha(seed);
        let x = &random_hermitian(4, &mut rng) + &HermMat::identity(4).scale(shift);
        let fam = FamilySpec::finite(vec![random_mebasis(dims, &mut rng)]).unwrap();
        for kind in kinds(r0(dims), fam) {
            let spec = ConeSpec::new(kind.clone(), dims).unwrap();
            let v = spec.membership(&x, OracleOptions { seed, ..OracleOptions::default() }).unwrap();
            if v.is_outside() {
                let w = v.witness.as_ref().expect("outside verdicts carry a witness");
                prop_assert!(w.violation < -TOL, "{kind:?}");
                prop_assert!((w.evaluate(&x) - w.violation).abs() <= 1e-9, "{kind:?}");
            }
        }
    }

    #[test]
    fn npm_elements_are_block_positive_up_to_con1_radius(
        seed in any::<u64>(), n in 2usize..4, t in 0.0f64..=1.0,
    ) {
        let dims = dims_of(n);
        let mut rng = chacha(seed);
        let n_elem = npm_element(t * con1_radius(dims), &random_mebasis(dims, &mut rng)).unwrap();
        for _ in 0..32 {
            let y = random_product_pure(dims, &mut rng);
            prop_assert!(n_elem.quad_form(&y) >= -1e-9);
        }
    }

    #[test]
    fn npm_pairs_respect_the_con2_floor(
        seed in any::<u64>(), n in 2usize..4, s in 0.0f64..=1.0, a in 0.0f64..=1.0, b in 0.0f64..=1.0,
    ) {
        let dims = dims_of(n);
        let r = s * r0(dims);
        let mut rng = chacha(seed);
        let x = npm_element(a * r, &random_mebasis(dims, &mut rng)).unwrap();
        let y = npm_element(b * r, &random_mebasis(dims, &mut rng)).unwrap();
        let v = trace_inner(&x, &y).unwrap();
        prop_assert!(v >= con2_floor(r, dims) - 1e-9);
        prop_assert!(v >= -1e-9);
    }

    #[test]
    fn f_max_is_attained_and_mixing_is_affine(seed in any::<u64>(), t in 0.0f64..=1.0) {
        let dims = d2();
        let mut rng = chacha(seed);
        let rho = random_state(4, &mut rng);
        let fm = f_max(&rho, 8, 200, seed).unwrap();
        prop_assert!(fm.mes.entanglement_deviation(dims).unwrap() <= 1e-9);
        prop_assert!((rho.quad_form(&fm.mes) - fm.value).abs() <= 1e-12);
        prop_assert!(fm.value >= 0.25 - 1e-12);
        for _ in 0..16 {
            prop_assert!(rho.quad_form(&haar_mes(dims, &mut rng)) <= fm.value + 1e-12);
        }
        let mixed = &rho.scale(t) + &HermMat::identity(4).scale((1.0 - t) / 4.0);
        let fm_mixed = f_max(&mixed, 8, 200, seed).unwrap().value;
        prop_assert!((fm_mixed - (t * fm.value + (1.0 - t) / 4.0)).abs() <= 1e-8);
    }

    #[test]
    fn trace_distance_obeys_the_fidelity_bound(seed in any::<u64>(), n in 2usize..4) {
        let dims = dims_of(n);
        let mut rng = chacha(seed);
        let rho = random_state(dims.total(), &mut rng);
        let sigma = HermMat::projector(&random_pure(dims.total(), &mut rng));
        let f = fidelity_pure(&rho, &sigma).unwrap();
        let dist = trace_norm(&(&rho - &sigma)).unwrap();
        prop_assert!(dist <= 2.0 * (1.0 - f).sqrt() + 1e-12);
        prop_assert!(dist >= 2.0 * (1.0 - f) - 1e-12);
    }

    #[test]
    fn group_action_preserves_spectrum(seed in any::<u64>(), local in any::<bool>()) {
        let dims = d2();
        let mut rng = chacha(seed);
        let x = random_hermitian(4, &mut rng);
        let g = if local {
            GroupElement::local(haar_local_pair(dims, &mut rng)).unwrap()
        } else {
            GroupElement::global(haar_unitary(4, &mut rng)).unwrap()
        };
        let before = eigenvalues(&x).unwrap();
        let after = eigenvalues(&apply(&g, &x).unwrap()).unwrap();
        for (a, b) in before.iter().zip(&after) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
    }
}
