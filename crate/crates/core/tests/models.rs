use std::f64::consts::PI;

use coiso_core::maslov::FramedLeafLoop;
use coiso_core::models::{shipped_models, CoisotropicModel, ModelKind, NormalFormChart, Vector};
use coiso_core::symplectic::symplectic_defect;
use coiso_core::Error;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn unit_lattice_torus() -> CoisotropicModel {
    CoisotropicModel::flat_torus(3, &[1.0 / (2.0 * PI), 1.0 / PI]).unwrap()
}

fn classes(m: &CoisotropicModel, l_max: f64) -> Vec<(Vec<i64>, f64)> {
    m.closed_geodesics(l_max)
        .into_iter()
        .map(|g| (g.homotopy_class, g.length))
        .collect()
}

#[test]
fn lattice_enumeration() {
    let m = unit_lattice_torus();
    let got = classes(&m, 2.5);
    let mut cls: Vec<Vec<i64>> = got.iter().map(|(c, _)| c.clone()).collect();
    cls.sort();
    // Brute-force lattice oracle; note √5 < 2.5 so the diagonals are in.
    let mut want = Vec::new();
    for a in -3i64..=3 {
        for b in -3i64..=3 {
            let l = ((a * a + 4 * b * b) as f64).sqrt();
            if (a, b) != (0, 0) && l <= 2.5 {
                want.push(vec![a, b]);
            }
        }
    }
    want.sort();
    assert_eq!(want.len(), 10);
    assert_eq!(cls, want);
    for (c, l) in &got {
        let oracle = ((c[0] as f64).powi(2) + (2.0 * c[1] as f64).powi(2)).sqrt();
        assert!((l - oracle).abs() < 1e-9);
    }
    assert!(got.windows(2).all(|w| w[0].1 <= w[1].1));
}

#[test]
fn nothing_below_the_shortest_loop() {
    let m = unit_lattice_torus();
    assert!(m.closed_geodesics(0.99).is_empty());
    assert!(m.length_spectrum(0.99).is_empty());
}

#[test]
fn ellipsoid_round_orbits() {
    let m = CoisotropicModel::ellipsoid(&[1.0, 1.0]).unwrap();
    let g = m.closed_geodesics(2.0 * PI);
    assert_eq!(g.len(), 4);
    assert!(g.iter().all(|g| (g.length - 2.0 * PI).abs() < 1e-12));
}

#[test]
fn length_spectra() {
    let m = unit_lattice_torus();
    let s = m.length_spectrum(3.0);
    let want = [1.0, 2.0, 5f64.sqrt(), 8f64.sqrt(), 3.0];
    assert_eq!(s.len(), want.len(), "{s:?}");
    for (a, b) in s.iter().zip(want) {
        assert!((a - b).abs() < 1e-9);
    }
    let square = CoisotropicModel::flat_torus(3, &[1.0 / (2.0 * PI); 2]).unwrap();
    let s = square.length_spectrum(2.0);
    let want = [1.0, 2f64.sqrt(), 2.0];
    assert_eq!(s.len(), 3, "{s:?}");
    for (a, b) in s.iter().zip(want) {
        assert!((a - b).abs() < 1e-9);
    }
}

#[test]
fn spectrum_closed_under_multiples() {
    for m in shipped_models() {
        let s = m.length_spectrum(20.0);
        for &l in &s {
            for k in 2..=4 {
                let kl = k as f64 * l;
                if kl <= 20.0 {
                    assert!(s.iter().any(|x| (x - kl).abs() < 1e-9), "{} missing {kl}", m.id());
                }
            }
        }
    }
}

#[test]
fn zero_momentum_is_at_rest() {
    let m = &shipped_models()[1];
    let chart = NormalFormChart::new(m, 0.8 * m.big_r).unwrap();
    let z = m.torus_point(&[0.3, 1.1]);
    let tr = chart.geodesic_flow(&z, &[0.0, 0.0], 5.0).unwrap();
    for p in &tr.points {
        assert!((p - &z).norm() < 1e-14);
    }
}

#[test]
fn flow_closes_up_and_conserves_momentum() {
    let m = unit_lattice_torus();
    let chart = NormalFormChart::new(&m, 0.9 * m.big_r).unwrap();
    let s = 0.5 * m.big_r;
    let z = m.torus_point(&[0.0, 0.0]);
    let g = m.geodesic_of_class(&[1, 0]).unwrap();
    let tr = chart.geodesic_flow(&z, &[s, 0.0], g.length / s).unwrap();
    let p0 = tr.momenta[0].clone();
    for p in &tr.momenta {
        assert!((p - &p0).norm() < 1e-10);
    }
    let start = m.project(&tr.points[0]);
    let end = m.project(tr.points.last().unwrap());
    assert!((start - end).norm() < 1e-7);
    // The projection follows the straight-line geodesic.
    let t_end = *tr.times.last().unwrap();
    for (t, z) in tr.times.iter().zip(&tr.points).step_by(97) {
        let want = m.loop_point(&[1, 0], t / t_end);
        assert!((m.project(z) - want).norm() < 1e-7);
    }
}

#[test]
fn flow_rejects_momentum_outside_chart() {
    let m = &shipped_models()[0];
    let chart = NormalFormChart::new(m, 0.5 * m.big_r).unwrap();
    let z = m.torus_point(&[0.0, 0.0]);
    assert_eq!(
        chart.geodesic_flow(&z, &[m.big_r, 0.0], 1.0).unwrap_err(),
        Error::LeftChart(0.0)
    );
    assert!(NormalFormChart::new(m, m.big_r).is_err());
}

#[test]
fn holonomy_examples() {
    let flat = &shipped_models()[1];
    let lp = FramedLeafLoop::canonical(flat, &[1, -1], 64).unwrap();
    let h = flat.holonomy(&lp).unwrap();
    assert_eq!(h.dim(), 2);
    assert!(h.matrices().iter().all(|m| (m - coiso_core::linalg::Mat::identity(2, 2)).norm() == 0.0));

    let split = &shipped_models()[0];
    let lp = FramedLeafLoop::canonical(split, &[1, 0], 64).unwrap();
    assert_eq!(split.holonomy(&lp).unwrap().dim(), 0);

    let ell = CoisotropicModel::ellipsoid(&[1.0, 1.7]).unwrap();
    let lp = FramedLeafLoop::canonical(&ell, &[1, 0], 128).unwrap();
    let h = ell.holonomy(&lp).unwrap();
    let want = coiso_core::linalg::rotation2(2.0 * PI / 1.7);
    assert!((h.endpoint() - want).norm() < 1e-9);
}

#[test]
fn area_examples() {
    let m = &shipped_models()[0];
    assert_eq!(m.class_area(&[0, 0]).unwrap(), 0.0);
    assert!((m.class_area(&[1, 0]).unwrap() - PI).abs() < 1e-12);
    assert!((m.class_area(&[1, 1]).unwrap() - 5.0 * PI).abs() < 1e-12);
    let lp = FramedLeafLoop::canonical(m, &[1, 1], 32).unwrap();
    assert!((m.loop_area(&lp).unwrap() - 5.0 * PI).abs() < 1e-12);
    let flat = &shipped_models()[1];
    assert!(matches!(
        flat.class_area(&[1, 0, 1, 0]),
        Err(Error::NotContractibleInAmbient(_))
    ));
}

#[test]
fn area_matches_liouville_integral() {
    // ∮ ½(x dy − y dx) over the sampled canonical loop.
    for m in shipped_models() {
        for g in m.closed_geodesics(8.0) {
            let n = m.n;
            let pts: Vec<Vector> = (0..2000)
                .map(|i| m.loop_point(&g.homotopy_class, i as f64 / 2000.0))
                .collect();
            let mut area = 0.0;
            for i in 0..pts.len() {
                let (a, b) = (&pts[i], &pts[(i + 1) % pts.len()]);
                for j in 0..n {
                    area += 0.5 * (a[j] * b[n + j] - a[n + j] * b[j]);
                }
            }
            let want = m.class_area(&g.homotopy_class).unwrap();
            assert!((area - want).abs() < 1e-4 * want.abs().max(1.0), "{} {:?}", m.id(), g.homotopy_class);
        }
    }
}

#[test]
fn stability_certificates() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for m in shipped_models() {
        let cert = m.stability_certificate(1000, &mut rng);
        assert!(cert.pass, "{}: {cert:?}", m.id());
    }
}

#[test]
fn leaves_are_flat() {
    for m in shipped_models() {
        for angles in [[0.0, 0.0], [0.4, 2.0], [3.0, 5.5]] {
            assert!(m.leaf_curvature(&angles) < 1e-8, "{}", m.id());
        }
    }
}

#[test]
fn linearised_flows_are_symplectic() {
    for m in shipped_models() {
        let g = m.closed_geodesics(8.0).remove(0);
        let p: Vec<f64> = g.direction.iter().map(|d| 0.5 * m.big_r * d).collect();
        let z0 = m.lift_to_level(&m.loop_point(&g.homotopy_class, 0.0), &p);
        let path = m.linearized_rho_flow(&z0, 3.0, 32);
        for a in path.matrices() {
            assert!(symplectic_defect(a) < 1e-9 * a.norm().powi(2).max(1.0));
        }
    }
}

#[test]
fn model_json_round_trip_and_rejections() {
    for m in shipped_models() {
        let back = CoisotropicModel::from_json(&m.to_json()).unwrap();
        assert_eq!(back, m);
    }
    let bad_key = r#"{"schema":"coiso-model-v1","kind":"split-lagrangian-torus","n":1,"k":1,"radii":[1.0],"R":0.2,"displacement_energy":3.0,"extra":1}"#;
    assert!(CoisotropicModel::from_json(bad_key).is_err());
    let bad_k = r#"{"schema":"coiso-model-v1","kind":"flat-coisotropic-torus","n":2,"k":2,"radii":[1.0,1.0],"R":0.2,"displacement_energy":3.0}"#;
    assert!(matches!(CoisotropicModel::from_json(bad_k), Err(Error::InvalidModel(_))));
    let m = CoisotropicModel::from_json(
        r#"{"schema":"coiso-model-v1","kind":"ellipsoid-hypersurface","n":2,"k":1,"radii":[1.0,2.0],"R":0.3,"displacement_energy":3.14}"#,
    )
    .unwrap();
    assert_eq!(m.kind, ModelKind::EllipsoidHypersurface);
}
