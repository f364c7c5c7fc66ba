//! One-periodic orbits of radial test Hamiltonians and their actions.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use super::profile::{Band, TestHamiltonianProfile};
use crate::index;
use crate::linalg::{self, Mat};
use crate::maslov;
use crate::models::{CoisotropicModel, LeafGeodesic, Vector};
use crate::symplectic::SymplecticPath;
use crate::{Error, Result};

/// A nonconstant one-periodic orbit `x` of `X_H = H′(|p|)·X` on `|p| = level`.
///
/// `geodesic` is the projection `π(x)`; `maslov` is `μ(η)` for the reversed
/// loop `η = π(x)⁻`.
#[derive(Debug, Clone, Serialize)]
pub struct OrbitRecord {
    pub geodesic: LeafGeodesic,
    pub level: f64,
    pub momentum: Vec<f64>,
    pub action: f64,
    pub mean_index: f64,
    pub maslov: f64,
    /// `Area(η) = −Area(π(x))`.
    pub eta_area: f64,
    pub band: Band,
}

/// `A_H(x) = H(s) + A(γ) + s·ℓ(γ)` with `A(γ) = −Area(γ)`.
///
/// The orbit runs against `p̂` because `H′ < 0`, so the cylinder from `γ`
/// to `x` carries `∫_x Σ p_j α_j = −s·ℓ`.
pub fn closed_form_action(h: f64, area_gamma: f64, level: f64, length: f64) -> f64 {
    h - area_gamma + level * length
}

/// Momentum `p` over `γ(0)` whose `h(|p|)`-orbit with `h′ = h1` traces `γ`.
pub fn orbit_momentum(geodesic: &LeafGeodesic, level: f64, h1: f64) -> Vec<f64> {
    let sign = if h1 < 0.0 { -1.0 } else { 1.0 };
    geodesic.direction.iter().map(|d| sign * level * d).collect()
}

fn start_point(model: &CoisotropicModel, geodesic: &LeafGeodesic, p: &[f64]) -> Vector {
    model.lift_to_level(&model.loop_point(&geodesic.homotopy_class, 0.0), p)
}

/// Linearised flow of `h(|p|)` along the orbit over `γ` at level `s`, on
/// `[0, ℓ/|h1|]`, given `h′ = h1` and `h″ = h2` at `s`.
pub fn orbit_linearization(
    model: &CoisotropicModel,
    geodesic: &LeafGeodesic,
    level: f64,
    h1: f64,
    h2: f64,
) -> SymplecticPath {
    orbit_linearization_scaled(model, geodesic, level, h1, h2, 1.0)
}

pub fn orbit_linearization_scaled(
    model: &CoisotropicModel,
    geodesic: &LeafGeodesic,
    level: f64,
    h1: f64,
    h2: f64,
    hess_scale: f64,
) -> SymplecticPath {
    let p = orbit_momentum(geodesic, level, h1);
    let k = p.len();
    let phat: Vec<f64> = p.iter().map(|x| x / level).collect();
    let grad: Vec<f64> = phat.iter().map(|x| h1 * x).collect();
    let mut hess = Mat::zeros(k, k);
    for i in 0..k {
        for j in 0..k {
            let pp = phat[i] * phat[j];
            let id = if i == j { 1.0 } else { 0.0 };
            hess[(i, j)] = hess_scale * (h2 * pp + h1 / level * (id - pp));
        }
    }
    let z0 = start_point(model, geodesic, &p);
    let t_end = geodesic.length / h1.abs();
    model.linearized_momentum_flow(&z0, &grad, &hess, t_end, 8)
}

/// `Δ(x)` of the orbit over `γ` at level `s`.
///
/// At the closed orbit the Hessian enters the monodromy only through a
/// nilpotent term `N = Σ ∂²K (A_j z)(Q_i z)ᵀ` (the momenta commute), so
/// the endpoint spectrum, and with it `Δ`, does not depend on `∂²K`. The
/// Hessian is therefore rescaled to norm at most 1 before the path is
/// sampled; thin caps otherwise produce shears of order `1/ε²`.
pub fn orbit_mean_index(model: &CoisotropicModel, geodesic: &LeafGeodesic, level: f64, h1: f64, h2: f64) -> Result<f64> {
    let radial = h2.abs().max(h1.abs() / level);
    let f = if radial > 1.0 { 1.0 / radial } else { 1.0 };
    index::mean_index(&orbit_linearization_scaled(model, geodesic, level, h1, h2, f))
}

/// Action of the orbit by direct quadrature: `−∮_x λ + ∫ H dt` with the
/// Liouville form `λ = ½ Σ (x dy − y dx)`. Also returns `|x(T) − x(0)|`.
pub fn direct_action(
    model: &CoisotropicModel,
    geodesic: &LeafGeodesic,
    level: f64,
    h: f64,
    h1: f64,
) -> (f64, f64) {
    const N: usize = 4096;
    let n = model.n;
    let p = orbit_momentum(geodesic, level, h1);
    let j = linalg::standard_j(n);
    let x = model
        .momentum_quadratics()
        .iter()
        .zip(&p)
        .fold(Mat::zeros(2 * n, 2 * n), |acc, ((q, _), pj)| {
            acc - (&j * q) * (h1 * pj / level)
        });
    let z0 = start_point(model, geodesic, &p);
    let t_end = geodesic.length / h1.abs();
    let step = linalg::expm(&(&x * (t_end / N as f64)));
    let mut z = z0.clone();
    let mut area = 0.0;
    for _ in 0..N {
        let v = &x * &z;
        for m in 0..n {
            area += 0.5 * (z[m] * v[n + m] - z[n + m] * v[m]);
        }
        z = &step * &z;
    }
    area *= t_end / N as f64;
    (h * t_end - area, (&z - &z0).norm())
}

fn slope_check(profile: &TestHamiltonianProfile, model: &CoisotropicModel) -> Result<()> {
    let m = profile.slope;
    let tol = 1e-9 * m.max(1.0);
    if model
        .length_spectrum(m + 1.0)
        .iter()
        .any(|l| (l - m).abs() <= tol)
    {
        return Err(Error::SlopeInSpectrum(m));
    }
    Ok(())
}

fn reversed(class: &[i64]) -> Vec<i64> {
    class.iter().map(|c| -c).collect()
}

/// All nonconstant one-periodic orbits of the profile over the model.
pub fn orbit_catalog(profile: &TestHamiltonianProfile, model: &CoisotropicModel) -> Result<Vec<OrbitRecord>> {
    if profile.big_r > model.big_r + 1e-12 {
        return Err(Error::BadParameters(format!(
            "profile R = {} exceeds the model's R = {}",
            profile.big_r, model.big_r
        )));
    }
    slope_check(profile, model)?;
    let geodesics = model.closed_geodesics(profile.slope);
    let mut items = Vec::new();
    for (gi, g) in geodesics.iter().enumerate() {
        for s in profile.levels_with_slope(g.length) {
            let band = profile.band(s).ok_or_else(|| {
                Error::BadParameters(format!("orbit at level {s} lies off the caps"))
            })?;
            items.push((gi, g.clone(), s, band));
        }
    }
    // With the Hessian dropped the path is exp(τ Σ p̂_j X_j), τ up to ±length,
    // so Δ only depends on the geodesic and the sign of H'.
    let keys: BTreeMap<(usize, bool), (f64, f64)> = items
        .iter()
        .map(|(gi, _, s, _)| ((*gi, profile.dh(*s) > 0.0), (*s, profile.dh(*s))))
        .collect();
    let deltas: BTreeMap<(usize, bool), f64> = keys
        .into_par_iter()
        .map(|(key, (s, h1))| {
            let path = orbit_linearization_scaled(model, &geodesics[key.0], s, h1, 0.0, 0.0);
            Ok((key, index::mean_index(&path)?))
        })
        .collect::<Result<_>>()?;
    let classes: Vec<Vec<i64>> = {
        let mut seen = BTreeMap::new();
        for g in &geodesics {
            seen.insert(reversed(&g.homotopy_class), ());
        }
        seen.into_keys().collect()
    };
    let mus: BTreeMap<Vec<i64>, f64> = classes
        .into_par_iter()
        .map(|c| Ok((c.clone(), maslov::class_index(model, &c)?.mu)))
        .collect::<Result<_>>()?;
    items
        .into_par_iter()
        .map(|(gi, g, s, band)| {
            let h1 = profile.dh(s);
            let area = model.class_area(&g.homotopy_class)?;
            let mean_index = deltas[&(gi, h1 > 0.0)];
            Ok(OrbitRecord {
                level: s,
                momentum: orbit_momentum(&g, s, h1),
                action: closed_form_action(profile.h(s), area, s, g.length),
                mean_index,
                maslov: mus[&reversed(&g.homotopy_class)],
                eta_area: -area,
                band,
                geodesic: g,
            })
        })
        .collect()
}

fn class_label(c: &[i64]) -> String {
    let parts: Vec<String> = c.iter().map(|x| x.to_string()).collect();
    format!("({})", parts.join(" "))
}

/// CSV table of orbit records.
pub fn catalog_csv(records: &[OrbitRecord]) -> String {
    let mut out = String::from("class,length,level,band,action,mean_index,maslov_eta,area_eta\n");
    for r in records {
        let band = match r.band {
            Band::Inner => "inner",
            Band::Outer => "outer",
        };
        let _ = writeln!(
            out,
            "{},{:.12},{:.12},{},{:.12},{:.12},{:.12},{:.12}",
            class_label(&r.geodesic.homotopy_class),
            r.geodesic.length,
            r.level,
            band,
            r.action,
            r.mean_index,
            r.maslov,
            r.eta_area
        );
    }
    out
}

/// Plot-ready series: level against action, and class against `μ(η)`.
pub fn plot_data_csv(records: &[OrbitRecord]) -> String {
    let mut out = String::from("series,x,y\n");
    for r in records {
        let _ = writeln!(out, "level_action,{:.12},{:.12}", r.level, r.action);
    }
    let mut seen = BTreeMap::new();
    for r in records {
        seen.insert(class_label(&reversed(&r.geodesic.homotopy_class)), r.maslov);
    }
    for (c, mu) in seen {
        let _ = writeln!(out, "class_mu,\"{c}\",{mu:.12}");
    }
    out
}
