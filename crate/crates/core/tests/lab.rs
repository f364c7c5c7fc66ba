use std::f64::consts::PI;

use coiso_core::index;
use coiso_core::lab::fuzz::{admissible_cz_count, lemma33_fuzz, prop32_window_check};
use coiso_core::lab::*;
use coiso_core::models::{shipped_models, CoisotropicModel};
use coiso_core::symplectic::{flow_of_quadratic, QuadraticHamiltonian};
use coiso_core::Error;

fn split(eps: f64) -> TestHamiltonianProfile {
    let m = &shipped_models()[0];
    let r = 0.3;
    let eu = neighbourhood_energy(m, r);
    build_profile(eu + 1.0, eps, r, m.big_r, eu).unwrap()
}

#[test]
fn profile_knot_values() {
    let p = split(0.01);
    let (c, e, r) = (p.c, p.eps, p.r_param);
    assert_eq!(p.h(0.0), c);
    assert_eq!(p.h(p.big_r), 0.0);
    assert!((p.h(2.0 * e) - (c - e)).abs() < 1e-12);
    assert!((p.h(r - e) - e).abs() < 1e-12);
    assert!((p.slope - (c - 2.0 * e) / (r - 3.0 * e)).abs() < 1e-12);
}

#[test]
fn profile_cap_convexity() {
    let p = split(0.02);
    let (e, r) = (p.eps, p.r_param);
    for i in 1..100 {
        let u = i as f64 / 100.0;
        assert!(p.d2h(e + u * e) <= 0.0);
        assert!(p.d2h(r - e + u * e) >= 0.0);
    }
    // Nonincreasing on a fine grid.
    let mut prev = p.h(0.0);
    for i in 1..=4000 {
        let h = p.h(p.big_r * i as f64 / 4000.0);
        assert!(h <= prev + 1e-12, "{i} {h} {prev}");
        prev = h;
    }
}

#[test]
fn profile_rejects_bad_parameters() {
    let m = &shipped_models()[0];
    let eu = neighbourhood_energy(m, 0.3);
    for (c, eps, r, big_r) in [
        (eu + 1.0, 0.1, 0.3, 0.4),
        (eu + 1.0, 0.0, 0.3, 0.4),
        (eu + 1.0, 0.01, 0.4, 0.4),
        (eu - 0.1, 0.01, 0.3, 0.4),
        (f64::NAN, 0.01, 0.3, 0.4),
    ] {
        assert!(matches!(build_profile(c, eps, r, big_r, eu), Err(Error::BadParameters(_))));
    }
}

#[test]
fn profile_json_round_trip() {
    let p = split(0.01);
    let s = serde_json::to_string(&p).unwrap();
    assert!(s.contains("\"C\"") && s.contains("\"R\""));
    let back: TestHamiltonianProfile = serde_json::from_str(&s).unwrap();
    assert_eq!(back, p);
}

#[test]
fn catalog_two_bands_only() {
    // Unit-length circle, slope exactly 2.5: lengths 1 and 2 are realised.
    let m = CoisotropicModel::split_torus(&[1.0 / (2.0 * PI)]).unwrap();
    let (r, eps) = (0.06, 0.001);
    let c = 0.15 - 5.5 * eps;
    let eu = neighbourhood_energy(&m, r);
    let p = build_profile(c, eps, r, m.big_r, eu).unwrap();
    assert!((p.slope - 2.5).abs() < 1e-12);
    let recs = orbit_catalog(&p, &m).unwrap();
    assert_eq!(recs.len(), 8);
    let mut lengths: Vec<f64> = recs.iter().map(|r| r.geodesic.length).collect();
    lengths.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
    for rec in &recs {
        let s = rec.level;
        match rec.band {
            Band::Inner => assert!(s >= eps && s <= 2.0 * eps),
            Band::Outer => assert!(s >= r - eps && s <= r),
        }
        assert!((p.dh(s) + rec.geodesic.length).abs() < 1e-9);
        let want = closed_form_action(p.h(s), m.class_area(&rec.geodesic.homotopy_class).unwrap(), s, rec.geodesic.length);
        assert!((rec.action - want).abs() < 1e-9);
    }
    for band in [Band::Inner, Band::Outer] {
        assert_eq!(recs.iter().filter(|r| r.band == band).count(), 4);
    }
}

#[test]
fn catalog_empty_when_slope_is_short() {
    let mut m = CoisotropicModel::split_torus(&[1.0]).unwrap();
    m.displacement_energy = 0.1;
    let eu = neighbourhood_energy(&m, 0.3);
    let p = build_profile(1.0, 0.01, 0.3, m.big_r, eu).unwrap();
    assert!(p.slope < 2.0 * PI);
    assert!(orbit_catalog(&p, &m).unwrap().is_empty());
}

#[test]
fn catalog_rejects_slope_in_spectrum() {
    let m = CoisotropicModel::split_torus(&[1.0 / (2.0 * PI)]).unwrap();
    let (r, eps) = (0.06, 0.001);
    // slope = (C − 2ε)/(r − 3ε) = 3 exactly.
    let c = 3.0 * (r - 3.0 * eps) + 2.0 * eps;
    let eu = neighbourhood_energy(&m, r);
    let p = build_profile(c, eps, r, m.big_r, eu).unwrap();
    assert!(matches!(orbit_catalog(&p, &m), Err(Error::SlopeInSpectrum(_))));
}

#[test]
fn action_arithmetic() {
    // Sign of the level term follows the Liouville form of the chart.
    let a = closed_form_action(5.0, PI, 0.1, 2.0 * PI);
    assert!((a - (5.0 - PI + 0.2 * PI)).abs() < 1e-12);
}

#[test]
fn direct_action_matches_closed_form() {
    for m in shipped_models() {
        let r = 0.75 * m.big_r;
        let eu = neighbourhood_energy(&m, r);
        let p = build_profile(1.3 * eu, 0.05 * r, r, m.big_r, eu).unwrap();
        let recs = orbit_catalog(&p, &m).unwrap();
        assert!(!recs.is_empty());
        for rec in recs.iter().step_by(3) {
            let (a, closure) = direct_action(&m, &rec.geodesic, rec.level, p.h(rec.level), p.dh(rec.level));
            assert!(closure < 1e-9);
            assert!((a - rec.action).abs() < 1e-7, "{} {a} {}", m.id(), rec.action);
        }
    }
}

#[test]
fn catalog_indices_match_reversed_maslov() {
    let m = &shipped_models()[2];
    let r = 0.75 * m.big_r;
    let eu = neighbourhood_energy(m, r);
    let p = build_profile(1.3 * eu, 0.05 * r, r, m.big_r, eu).unwrap();
    for rec in orbit_catalog(&p, m).unwrap() {
        assert!((rec.mean_index - rec.maslov).abs() < 1e-6);
    }
}

#[test]
fn catalog_index_ignores_the_hessian() {
    for m in shipped_models() {
        let r = 0.75 * m.big_r;
        let eu = neighbourhood_energy(&m, r);
        let p = build_profile(1.3 * eu, 0.1 * r, r, m.big_r, eu).unwrap();
        for rec in orbit_catalog(&p, &m).unwrap().iter().step_by(5) {
            let s = rec.level;
            let full = orbit_mean_index(&m, &rec.geodesic, s, p.dh(s), p.d2h(s)).unwrap();
            assert!((full - rec.mean_index).abs() < 1e-8, "{} {full} {}", m.id(), rec.mean_index);
        }
    }
}

#[test]
fn csv_outputs() {
    let p = split(0.01);
    let recs = orbit_catalog(&p, &shipped_models()[0]).unwrap();
    let csv = catalog_csv(&recs);
    assert_eq!(csv.lines().count(), recs.len() + 1);
    let plot = plot_data_csv(&recs);
    assert!(plot.starts_with("series,x,y"));
    assert!(plot.contains("level_action") && plot.contains("class_mu"));
}

fn shear_path() -> coiso_core::symplectic::SymplecticPath {
    flow_of_quadratic(&QuadraticHamiltonian::diagonal(&[0.0, 1.0]).unwrap(), 1.0, 16)
}

#[test]
fn shear_perturbed_by_positive_quadratic() {
    let g = shear_path();
    let delta = index::mean_index(&g).unwrap();
    assert!(delta.abs() < 1e-12);
    let k = flow_of_quadratic(&QuadraticHamiltonian::diagonal(&[1e-6, 1e-3]).unwrap(), 1.0, 16);
    let cz = index::conley_zehnder(&g.product(&k).unwrap()).unwrap();
    assert_eq!(cz, -1);
    assert!(cz as f64 >= delta - 1.0 && cz as f64 <= delta);
}

#[test]
fn shear_perturbed_by_indefinite_quadratic() {
    let g = shear_path();
    let k = flow_of_quadratic(&QuadraticHamiltonian::diagonal(&[-1e-6, 1e-3]).unwrap(), 1.0, 16);
    assert_eq!(index::conley_zehnder(&g.product(&k).unwrap()).unwrap(), 0);
}

#[test]
fn split_window_fuzz() {
    for (n, k) in [(1, 1), (2, 1), (3, 2), (4, 4)] {
        let s = lemma33_fuzz(n, k, 60, 1e-2, 7).unwrap();
        assert!(s.pass(), "{s:?}");
        assert_eq!(s.accepted, 60);
    }
    assert!(lemma33_fuzz(5, 1, 1, 1e-2, 0).is_err());
    assert!(lemma33_fuzz(2, 1, 1, 0.1, 0).is_err());
}

#[test]
fn fuzz_is_reproducible() {
    let a = lemma33_fuzz(3, 1, 40, 1e-2, 99).unwrap();
    let b = lemma33_fuzz(3, 1, 40, 1e-2, 99).unwrap();
    assert_eq!(a, b);
}

#[test]
fn window_width() {
    for n in 1..=4 {
        for k in 1..=n {
            for i in 0..40 {
                let d = -3.0 + 0.173 * i as f64;
                assert!(admissible_cz_count(d, n, k) <= 2 * n - k + 1);
            }
        }
    }
    assert_eq!(admissible_cz_count(0.0, 2, 1), 4);
    assert_eq!(admissible_cz_count(0.5, 2, 1), 3);
}

#[test]
fn perturbed_orbit_window() {
    let m = &shipped_models()[0];
    let g = m.geodesic_of_class(&[1, 0]).unwrap();
    let s = prop32_window_check(m, &g, 100, 1e-2, 3).unwrap();
    assert_eq!(s.violations, 0);
    assert_eq!(s.accepted + s.abandoned, 100);
    assert!(s.accepted > 0);
}

#[test]
fn index_identity_and_reversal() {
    let m = &shipped_models()[0];
    let g = m.geodesic_of_class(&[1, 0]).unwrap();
    let r = prop31_check(m, &g).unwrap();
    assert!((r.mu - 2.0).abs() < 1e-7);
    assert!(r.diff <= 1e-7);
    let rev = prop31_check(m, &m.geodesic_of_class(&[-1, 0]).unwrap()).unwrap();
    assert!((rev.mu + r.mu).abs() < 1e-7);
    assert!(rev.diff <= 1e-7);

    let flat = &shipped_models()[1];
    let r = prop31_check(flat, &flat.geodesic_of_class(&[1, 0]).unwrap()).unwrap();
    assert!(r.diff <= 1e-7);
}

#[test]
fn theorem_witnesses() {
    let m = &shipped_models()[0];
    let rep = theorem_bounds_check(m, 0.1).unwrap();
    assert!(rep.pass, "{}", rep.to_json());
    let w = rep.witness.as_ref().unwrap();
    assert_eq!(w["class"], serde_json::json!([1, 0]));
    assert!((w["mu"].as_f64().unwrap() - 2.0).abs() < 1e-7);
    assert!((w["area"].as_f64().unwrap() - PI).abs() < 1e-9);
    assert!(rep.external_constants.contains_key("e_M"));

    let flat = &shipped_models()[1];
    let rep = theorem_bounds_check(flat, 0.1).unwrap();
    assert!(rep.pass);
    let mu = rep.witness.as_ref().unwrap()["mu"].as_f64().unwrap();
    assert!((1.0..=5.0).contains(&mu));
    assert!(rep.checks.iter().any(|c| c.name == "mean_index_window" && c.pass));
    assert!(theorem_bounds_check(flat, 0.0).is_err());
}

#[test]
fn theorem_reports_missing_witness() {
    let mut m = CoisotropicModel::split_torus(&[1.0, 2.0]).unwrap();
    m.displacement_energy = 0.5;
    let rep = theorem_bounds_check(&m, 0.1).unwrap();
    assert!(!rep.pass);
    assert_eq!(rep.failure.as_deref(), Some("no_witness_found"));
    assert!(rep.data.contains_key("candidates"));
}

#[test]
fn band_check_window() {
    let m = &shipped_models()[0];
    let r = 0.3;
    let eu = neighbourhood_energy(m, r);
    let rep = lemma35_band_check(m, r, &[eu + 0.5, eu + 1.1], &[0.01, 0.005]).unwrap();
    assert!(rep.pass, "{}", rep.to_json());
    assert_eq!(rep.witness.as_ref().unwrap()["class"], serde_json::json!([1, 0]));
}

#[test]
fn band_check_rejects_scaled_spectrum() {
    let m = &shipped_models()[0];
    let r = 0.3;
    let c = r * 4.0 * PI;
    assert!(matches!(
        lemma35_band_check(m, r, &[c], &[0.01]),
        Err(Error::CInSpectrumScaled(_))
    ));
}

#[test]
fn report_schema_and_determinism() {
    let a = lemma33_report(2, 1, 20, 1e-2, 5).unwrap();
    let b = lemma33_report(2, 1, 20, 1e-2, 5).unwrap();
    assert_eq!(a.to_json(), b.to_json());
    let v: serde_json::Value = serde_json::from_str(&a.to_json()).unwrap();
    assert_eq!(v["schema"], REPORT_SCHEMA);
    assert_eq!(v["seed"], 5);
}
