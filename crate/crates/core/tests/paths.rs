use std::f64::consts::PI;

use coiso_core::index::{self, conley_zehnder, index_report, mean_index};
use coiso_core::linalg::{self, Mat};
use coiso_core::symplectic::{
    concatenate, direct_sum, flow_of_quadratic, iterate, random_symplectic, spectrum, symplectic_defect,
    validate_symplectic, QuadraticHamiltonian, SymplecticPath,
};
use coiso_core::{Error, Tolerances};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rotation(delta: f64) -> SymplecticPath {
    flow_of_quadratic(&QuadraticHamiltonian::scalar(1, -delta), 1.0, 8)
}

fn shear() -> SymplecticPath {
    flow_of_quadratic(&QuadraticHamiltonian::diagonal(&[0.0, 1.0]).unwrap(), 1.0, 4)
}

/// Time-one flow of a random quadratic, dimension 2 to 8. Half the corpus
/// has entries uniform in `[−1, 1]`; the other half is definite and scaled
/// up so that the path winds several times while staying bounded.
fn random_flow(seed: u64) -> SymplecticPath {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(1..=4);
    let h = if rng.gen_bool(0.5) {
        QuadraticHamiltonian::random(n, 1.0, &mut rng)
    } else {
        let a = QuadraticHamiltonian::random(n, 1.0, &mut rng).matrix().clone();
        let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        let scale = rng.gen_range(0.5..6.0);
        let d = (&a * &a / (2 * n) as f64 + Mat::identity(2 * n, 2 * n) * 0.1) * (sign * scale);
        QuadraticHamiltonian::new(d).unwrap()
    };
    flow_of_quadratic(&h, 1.0, 16)
}

#[test]
fn validation() {
    let tol = 1e-9;
    assert!(validate_symplectic(Mat::identity(2, 2), tol).is_ok());
    assert!(validate_symplectic(Mat::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]), tol).is_ok());
    assert!(matches!(
        validate_symplectic(Mat::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 1.0]), tol),
        Err(Error::NotSymplectic { .. })
    ));
}

#[test]
fn additivity_examples() {
    let r = rotation(PI / 2.0);
    let d = mean_index(&direct_sum(&r, &r).unwrap()).unwrap();
    assert!((d - 1.0).abs() < 1e-10);
    assert!(mean_index(&direct_sum(&shear(), &shear()).unwrap()).unwrap().abs() < 1e-10);
    let rr = concatenate(&r, &r).unwrap();
    assert!((mean_index(&rr).unwrap() - 1.0).abs() < 1e-10);
    let loop4 = iterate(&r, 4);
    assert!((loop4.endpoint() - Mat::identity(2, 2)).norm() < 1e-10);
    assert!((mean_index(&loop4).unwrap() - 2.0).abs() < 1e-10);
    let s3 = iterate(&shear(), 3);
    assert!((s3.endpoint()[(0, 1)].abs() - 3.0).abs() < 1e-10);
}

#[test]
fn spectrum_examples() {
    let tol = Tolerances::default();
    let id = spectrum(&Mat::identity(4, 4), &tol).unwrap();
    assert_eq!(id.len(), 1);
    assert_eq!(id[0].multiplicity, 4);
    let th = 0.7;
    let rot = rotation(th).endpoint().clone();
    let sp = spectrum(&rot, &tol).unwrap();
    assert_eq!(sp.len(), 2);
    assert_eq!(sp[0].krein_sign, -sp[1].krein_sign);
    for p in &sp {
        assert!((p.eigenvalue.arg().abs() - th).abs() < 1e-10);
    }
    let hyp = spectrum(&Mat::from_diagonal(&nalgebra::DVector::from_vec(vec![2.0, 0.5])), &tol).unwrap();
    assert!(hyp.iter().all(|p| p.krein_sign == 0 && p.eigenvalue.im == 0.0));
}

#[test]
fn small_definite_flow() {
    let h = QuadraticHamiltonian::diagonal(&[1.0, 1e-2]).unwrap();
    assert_eq!(h.signature(1e-10).unwrap(), 2);
    assert_eq!(conley_zehnder(&flow_of_quadratic(&h.clone(), 0.1, 4)).unwrap(), -1);
}

#[test]
fn degenerate_report() {
    let r = index_report(&direct_sum(&shear(), &rotation(PI / 2.0)).unwrap()).unwrap();
    assert!(r.degenerate_endpoint);
    assert_eq!(r.cz_index, None);
    assert!((r.mean_index - 0.5).abs() < 1e-10);
    assert!(matches!(conley_zehnder(&shear()), Err(Error::DegenerateEndpoint)));
}

#[test]
fn random_flow_homogeneity() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let p = flow_of_quadratic(&QuadraticHamiltonian::random(2, 1.0, &mut rng), 1.0, 16);
    assert!(index::homogeneity_check(&p, 6).unwrap() <= 1e-6);
}

fn inverse_pairs_close(eigs: &[Complex64], tol: f64) -> bool {
    eigs.iter().all(|l| {
        let inv = 1.0 / l;
        eigs.iter().any(|m| (m - inv).norm() <= tol * inv.norm().max(1.0))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn flows_stay_symplectic(seed in any::<u64>()) {
        let p = random_flow(seed);
        for m in p.matrices() {
            prop_assert!(symplectic_defect(m) <= 1e-8 * m.norm().powi(2).max(1.0));
        }
    }

    #[test]
    fn flow_group_property(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = QuadraticHamiltonian::random(rng.gen_range(1..=3), 1.0, &mut rng);
        let full = flow_of_quadratic(&h, 1.0, 8).endpoint().clone();
        let half = flow_of_quadratic(&h, 0.5, 8).endpoint().clone();
        prop_assert!((&half * &half - &full).norm() <= 1e-9 * full.norm().max(1.0));
    }

    #[test]
    fn spectrum_is_reciprocal(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = random_symplectic(rng.gen_range(1..=4), &mut rng);
        let eigs = linalg::eigenvalues(&m);
        prop_assert!(inverse_pairs_close(&eigs, 1e-7));
    }

    #[test]
    fn mean_index_additive(a in any::<u64>(), b in any::<u64>()) {
        let (pa, pb) = (random_flow(a), random_flow(b));
        let sum = mean_index(&direct_sum(&pa, &pb).unwrap()).unwrap();
        let parts = mean_index(&pa).unwrap() + mean_index(&pb).unwrap();
        prop_assert!((sum - parts).abs() < 1e-8);
    }

    #[test]
    fn gap_bound(seed in any::<u64>()) {
        let p = random_flow(seed);
        if let Ok(cz) = conley_zehnder(&p) {
            let gap = (mean_index(&p).unwrap() - cz as f64).abs();
            prop_assert!(gap < p.n() as f64 - 1e-9, "gap {gap}");
        }
    }

    #[test]
    fn conjugation_invariance(seed in any::<u64>()) {
        let p = random_flow(seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabcd);
        let c = random_symplectic(p.n(), &mut rng);
        let d = mean_index(&p.conjugated(&c)).unwrap();
        prop_assert!((d - mean_index(&p).unwrap()).abs() < 1e-7);
    }

    #[test]
    fn loop_additivity(seed in any::<u64>(), w in 1usize..3) {
        let p = random_flow(seed);
        let n = p.n();
        // A closed loop winding w times in the first factor plane.
        let mut gen = Mat::zeros(2 * n, 2 * n);
        gen[(0, 0)] = -2.0 * PI * w as f64;
        gen[(n, n)] = -2.0 * PI * w as f64;
        let lp = flow_of_quadratic(&QuadraticHamiltonian::new(gen).unwrap(), 1.0, 16);
        let d = mean_index(&concatenate(&lp, &p).unwrap()).unwrap();
        prop_assert!((d - 2.0 * w as f64 - mean_index(&p).unwrap()).abs() < 1e-7);
    }

    #[test]
    fn iterate_homogeneity_and_limit(seed in any::<u64>()) {
        let p = random_flow(seed);
        let d = mean_index(&p).unwrap();
        for k in 2..=6 {
            let pk = iterate(&p, k);
            prop_assert!((mean_index(&pk).unwrap() - k as f64 * d).abs() < 1e-7);
            if let Ok(cz) = conley_zehnder(&pk) {
                prop_assert!((cz as f64 / k as f64 - d).abs() <= p.n() as f64 / k as f64 + 1e-6);
            }
        }
    }

    #[test]
    fn located_crossings_sum_to_index(seed in any::<u64>()) {
        let p = iterate(&random_flow(seed), 1 + (seed % 3) as usize);
        if let Ok((cz, crossings)) = index::conley_zehnder_with(&p, &Tolerances::default()) {
            let total = crossings[0].signature / 2
                + crossings[1..].iter().map(|c| c.signature).sum::<i64>();
            prop_assert_eq!(cz, -total);
            prop_assert_eq!(cz, -index::graph_phase_count(&p).unwrap());
        }
    }
}
