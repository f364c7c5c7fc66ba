//! Writes the model and path files under `models/` and `paths/`.
//!
//! Run from the workspace root: `cargo run -p coiso-core --example fixtures`.

use std::f64::consts::PI;
use std::fs;

use coiso_core::linalg::Mat;
use coiso_core::models::CoisotropicModel;
use coiso_core::symplectic::{flow_of_quadratic, QuadraticHamiltonian, SymplecticPath};
use coiso_core::Tolerances;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    fs::create_dir_all("models")?;
    fs::create_dir_all("paths")?;
    let models = [
        ("torus12.json", CoisotropicModel::split_torus(&[1.0, 2.0])?),
        ("flat_torus.json", CoisotropicModel::flat_torus(3, &[0.6, 0.9])?),
        ("ellipsoid.json", CoisotropicModel::ellipsoid(&[1.0, 1.7])?),
    ];
    for (name, m) in &models {
        fs::write(format!("models/{name}"), m.to_json() + "\n")?;
    }

    let shear = |s: f64| Mat::from_row_slice(2, 2, &[1.0, s, 0.0, 1.0]);
    let tol = Tolerances::default();
    let paths = [
        ("shear.json", SymplecticPath::new((0..=4).map(|i| (i as f64 / 4.0, shear(i as f64 / 4.0))).collect(), &tol)?),
        ("rot90.json", flow_of_quadratic(&QuadraticHamiltonian::scalar(1, -PI / 2.0), 1.0, 8)),
        ("neg_definite.json", flow_of_quadratic(&QuadraticHamiltonian::scalar(2, -0.1), 1.0, 8)),
    ];
    for (name, p) in &paths {
        fs::write(format!("paths/{name}"), p.to_json() + "\n")?;
    }
    Ok(())
}
