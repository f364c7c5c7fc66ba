//! Index identity, theorem inequalities and the inner-band action window.

use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use super::catalog::{self, orbit_catalog};
use super::fuzz::{self, default_level, rho_linearization, WindowSummary};
use super::profile::{build_profile, neighbourhood_energy, Band};
use super::report::ExperimentReport;
use crate::index;
use crate::maslov::{self, FramedLeafLoop, DEFAULT_SAMPLES};
use crate::models::{CoisotropicModel, LeafGeodesic};
use crate::{Error, Result};

/// `μ(γ)` from the leaf-frame pipeline against `−Δ_ρ(x)` from the
/// linearised `ρ`-flow.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Prop31Result {
    pub class: Vec<i64>,
    pub length: f64,
    pub mu: f64,
    pub minus_mean_index: f64,
    pub diff: f64,
}

pub fn prop31_check(model: &CoisotropicModel, geodesic: &LeafGeodesic) -> Result<Prop31Result> {
    if geodesic.homotopy_class.iter().all(|&c| c == 0) {
        return Err(Error::BadClass(geodesic.homotopy_class.clone(), "trivial loop".into()));
    }
    let lp = FramedLeafLoop::canonical(model, &geodesic.homotopy_class, DEFAULT_SAMPLES)?;
    let mu = maslov::maslov_index(&lp, model)?;
    let g = rho_linearization(model, geodesic, default_level(model));
    let minus_mean_index = -index::mean_index(&g)?;
    Ok(Prop31Result {
        class: geodesic.homotopy_class.clone(),
        length: geodesic.length,
        mu,
        minus_mean_index,
        diff: (mu - minus_mean_index).abs(),
    })
}

/// A candidate loop `η` for the theorem inequalities.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Candidate {
    pub class: Vec<i64>,
    pub length: f64,
    pub mu: f64,
    pub area: f64,
    pub mu_ok: bool,
    pub area_ok: bool,
}

const IDX_SLACK: f64 = 1e-7;

/// Length cutoff for the candidate enumeration.
pub fn candidate_cutoff(model: &CoisotropicModel) -> f64 {
    2.0 * model.lattice_lengths().iter().copied().fold(0.0, f64::max)
}

/// Candidate table and the index of the first witness, in order of length.
pub fn find_witness(model: &CoisotropicModel, delta: f64) -> Result<(Vec<Candidate>, Option<usize>)> {
    let (n, k) = (model.n as f64, model.k as f64);
    let bound = model.displacement_energy + delta;
    let table = model
        .closed_geodesics(candidate_cutoff(model))
        .into_par_iter()
        .map(|g| {
            let ci = maslov::class_index(model, &g.homotopy_class)?;
            Ok(Candidate {
                mu_ok: ci.mu >= 1.0 - IDX_SLACK && ci.mu <= 2.0 * n + 1.0 - k + IDX_SLACK,
                area_ok: ci.area > 0.0 && ci.area <= bound,
                class: ci.class,
                length: ci.length,
                mu: ci.mu,
                area: ci.area,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let w = table.iter().position(|c| c.mu_ok && c.area_ok);
    Ok((table, w))
}

/// Representative inner-band level and curvature for the unreversed orbit.
fn representative_orbit_index(model: &CoisotropicModel, eta: &[i64]) -> Result<f64> {
    let gamma: Vec<i64> = eta.iter().map(|c| -c).collect();
    let g = model.geodesic_of_class(&gamma)?;
    let s = 0.25 * model.big_r;
    let h1 = -g.length;
    catalog::orbit_mean_index(model, &g, s, h1, h1 / s)
}

/// Searches the closed geodesics for `η` with `1 ≤ μ(η) ≤ 2n + 1 − k` and
/// `0 < Area(η) ≤ e(M) + δ`.
pub fn theorem_bounds_check(model: &CoisotropicModel, delta: f64) -> Result<ExperimentReport> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::BadParameters(format!("delta must be positive, got {delta}")));
    }
    let (n, k) = (model.n, model.k);
    let mut rep = ExperimentReport::new("theorem", Some(model), None);
    rep.param("delta", delta)
        .param("length_cutoff", candidate_cutoff(model))
        .external("e_M", model.displacement_energy, "displacement energy of M");
    rep.note("witness chosen by enumerating closed leaf-wise geodesics and filtering by the index and area windows; no Floer computation is performed");
    rep.note("strictness of the action window is not tested");
    let (table, w) = find_witness(model, delta)?;
    let Some(w) = w else {
        let count = table.len();
        rep.datum("candidates", &table);
        rep.fail(Error::NoWitnessFound(count).kind());
        return Ok(rep);
    };
    let c = &table[w];
    let dx = representative_orbit_index(model, &c.class)?;
    let top = (2 * n + 1 - k) as f64;
    rep.check("mu_window", c.mu_ok, json!({"mu": c.mu, "lower": 1, "upper": top}))
        .check(
            "area_window",
            c.area_ok,
            json!({"area": c.area, "upper": model.displacement_energy + delta}),
        )
        .check(
            "mean_index_window",
            dx >= 1.0 - IDX_SLACK && dx <= (2 * n + 1) as f64 + IDX_SLACK,
            json!({"mean_index": dx, "lower": 1, "upper": 2 * n + 1}),
        );
    rep.witness = Some(json!({
        "class": c.class,
        "mu": c.mu,
        "area": c.area,
        "length": c.length,
        "orbit_mean_index": dx,
    }));
    rep.datum("candidates", &table);
    Ok(rep)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BandEntry {
    #[serde(rename = "C")]
    pub c: f64,
    pub eps: f64,
    pub slope: f64,
    pub slope_outside_spectrum: bool,
    pub inner_orbits: usize,
    pub inner_in_window: usize,
    pub witness_action: Option<f64>,
    pub witness_level: Option<f64>,
    pub witness_in_window: bool,
}

fn spectrum_hit(spectrum: &[f64], x: f64, tol: f64) -> bool {
    spectrum.iter().any(|l| (l - x).abs() <= tol)
}

/// Slope exclusion and the inner-band action window `C < A_H < C + e(U)`.
pub fn lemma35_band_check(
    model: &CoisotropicModel,
    r_param: f64,
    c_values: &[f64],
    eps_values: &[f64],
) -> Result<ExperimentReport> {
    let e_u = neighbourhood_energy(model, r_param);
    let c_max = c_values.iter().copied().fold(0.0, f64::max);
    let spectrum = model.length_spectrum(c_max / r_param + 1.0);
    for &c in c_values {
        if spectrum.iter().any(|l| (c - r_param * l).abs() <= 1e-6) {
            return Err(Error::CInSpectrumScaled(c));
        }
    }
    let (table, w) = find_witness(model, e_u - model.displacement_energy)?;
    let mut rep = ExperimentReport::new("lemma35", Some(model), None);
    rep.param("r", r_param)
        .param("C_values", c_values)
        .param("eps_values", eps_values)
        .external("e_M", model.displacement_energy, "displacement energy of M")
        .external("e_U", e_u, "displacement energy of the neighbourhood |p| < r");
    rep.note("strictness of the action window is not tested");
    let Some(w) = w else {
        rep.datum("candidates", &table);
        rep.fail(Error::NoWitnessFound(table.len()).kind());
        return Ok(rep);
    };
    let eta = table[w].class.clone();
    let gamma: Vec<i64> = eta.iter().map(|c| -c).collect();
    rep.witness = Some(json!({"class": eta, "mu": table[w].mu, "area": table[w].area}));
    let mut entries = Vec::new();
    for &c in c_values {
        for &eps in eps_values {
            let profile = build_profile(c, eps, r_param, model.big_r, e_u)?;
            let m = profile.slope;
            let outside = !spectrum_hit(&model.length_spectrum(m + 1.0), m, 1e-9 * m.max(1.0));
            let mut entry = BandEntry {
                c,
                eps,
                slope: m,
                slope_outside_spectrum: outside,
                inner_orbits: 0,
                inner_in_window: 0,
                witness_action: None,
                witness_level: None,
                witness_in_window: false,
            };
            if outside {
                let records = orbit_catalog(&profile, model)?;
                let in_window = |a: f64| a > c && a < c + e_u;
                for r in records.iter().filter(|r| r.band == Band::Inner) {
                    entry.inner_orbits += 1;
                    entry.inner_in_window += in_window(r.action) as usize;
                    if r.geodesic.homotopy_class == gamma {
                        entry.witness_action = Some(r.action);
                        entry.witness_level = Some(r.level);
                        entry.witness_in_window = in_window(r.action);
                    }
                }
            }
            let tag = format!("C={c},eps={eps}");
            rep.check(&format!("slope_outside_spectrum[{tag}]"), outside, json!({"slope": m}));
            rep.check(
                &format!("witness_in_window[{tag}]"),
                entry.witness_in_window,
                json!({"action": entry.witness_action, "lower": c, "upper": c + e_u}),
            );
            entries.push(entry);
        }
    }
    rep.datum("entries", &entries);
    Ok(rep)
}

/// Report for the seeded fuzz of the split-path window.
pub fn lemma33_report(n: usize, k: usize, trials: usize, perturb_scale: f64, seed: u64) -> Result<ExperimentReport> {
    let s = fuzz::lemma33_fuzz(n, k, trials, perturb_scale, seed)?;
    let mut rep = ExperimentReport::new("lemma33", None, Some(seed));
    rep.param("n", n)
        .param("k", k)
        .param("trials", trials)
        .param("perturb_scale", perturb_scale);
    window_checks(&mut rep, &s);
    Ok(rep)
}

fn window_checks(rep: &mut ExperimentReport, s: &WindowSummary) {
    rep.check(
        "zero_violations",
        s.violations == 0,
        json!({"violations": s.violations, "accepted": s.accepted}),
    )
    .check("trials_accepted", s.accepted > 0, json!({"abandoned": s.abandoned}));
    if !s.failures.is_empty() {
        rep.witness = Some(serde_json::to_value(&s.failures[0]).expect("trial"));
    }
    rep.datum("summary", s);
}

/// `|μ(γ) + Δ_ρ(x)|` for every closed geodesic up to `l_max`.
pub fn prop31_report(model: &CoisotropicModel, l_max: f64, tol: f64) -> Result<ExperimentReport> {
    let results = model
        .closed_geodesics(l_max)
        .par_iter()
        .map(|g| prop31_check(model, g))
        .collect::<Result<Vec<_>>>()?;
    let mut rep = ExperimentReport::new("prop31", Some(model), None);
    rep.param("length_cutoff", l_max).param("tolerance", tol);
    for r in &results {
        rep.check(&format!("class{:?}", r.class), r.diff <= tol, r);
    }
    if let Some(bad) = results.iter().find(|r| r.diff > tol) {
        rep.witness = Some(serde_json::to_value(bad).expect("result"));
    }
    Ok(rep)
}

/// Perturbation window along one geodesic.
pub fn prop32_report(
    model: &CoisotropicModel,
    class: &[i64],
    trials: usize,
    perturb_scale: f64,
    seed: u64,
) -> Result<ExperimentReport> {
    let g = model.geodesic_of_class(class)?;
    let s = fuzz::prop32_window_check(model, &g, trials, perturb_scale, seed)?;
    let mut rep = ExperimentReport::new("prop32", Some(model), Some(seed));
    rep.param("class", class)
        .param("trials", trials)
        .param("perturb_scale", perturb_scale)
        .param("level", default_level(model));
    window_checks(&mut rep, &s);
    Ok(rep)
}
