//! Randomised checks of the index window `Δ − n ≤ CZ ≤ Δ + (n − k)`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::index;
use crate::linalg::{self, Mat};
use crate::models::{CoisotropicModel, LeafGeodesic};
use crate::symplectic::{flow_of_generator, QuadraticHamiltonian, SymplecticPath};
use crate::{Error, Result};

/// Attempts per trial before the trial is given up as rejected.
const MAX_ATTEMPTS: usize = 64;
const SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WindowTrial {
    pub trial: usize,
    pub mean_index: f64,
    pub cz: i64,
    pub lower_margin: f64,
    pub upper_margin: f64,
    pub rejected_attempts: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WindowSummary {
    pub n: usize,
    pub k: usize,
    pub trials: usize,
    pub accepted: usize,
    /// Attempts discarded for a degenerate endpoint or an irregular crossing.
    pub rejected: usize,
    /// Trials where every attempt was rejected.
    pub abandoned: usize,
    pub violations: usize,
    /// `min (CZ − (Δ − n))` over accepted trials.
    pub worst_lower_margin: f64,
    /// `min ((Δ + n − k) − CZ)` over accepted trials.
    pub worst_upper_margin: f64,
    pub failures: Vec<WindowTrial>,
}

impl WindowSummary {
    fn collect(n: usize, k: usize, outcomes: Vec<(Option<WindowTrial>, usize)>) -> Self {
        let mut s = WindowSummary {
            n,
            k,
            trials: outcomes.len(),
            accepted: 0,
            rejected: 0,
            abandoned: 0,
            violations: 0,
            worst_lower_margin: f64::INFINITY,
            worst_upper_margin: f64::INFINITY,
            failures: Vec::new(),
        };
        for (t, rej) in outcomes {
            s.rejected += rej;
            let Some(t) = t else {
                s.abandoned += 1;
                continue;
            };
            s.accepted += 1;
            s.worst_lower_margin = s.worst_lower_margin.min(t.lower_margin);
            s.worst_upper_margin = s.worst_upper_margin.min(t.upper_margin);
            if t.lower_margin < -SLACK || t.upper_margin < -SLACK {
                s.violations += 1;
                s.failures.push(t);
            }
        }
        s
    }

    pub fn pass(&self) -> bool {
        self.violations == 0 && self.accepted > 0
    }
}

/// Number of integers in `[Δ − n, Δ + n − k]`; at most `2n − k + 1`.
pub fn admissible_cz_count(delta: f64, n: usize, k: usize) -> usize {
    let lo = (delta - n as f64 - SLACK).ceil() as i64;
    let hi = (delta + (n - k) as f64 + SLACK).floor() as i64;
    (hi - lo + 1).max(0) as usize
}

fn trial_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// `t ↦ G(t)·exp(t X_P)` sampled on the refinement of `G`'s grid.
fn perturbed(g: &SymplecticPath, p: &QuadraticHamiltonian) -> Result<SymplecticPath> {
    g.product(&flow_of_generator(&p.generator(), g.t_end(), 16))
}

/// Evaluates the window for one perturbation, or `None` when the perturbed
/// path is degenerate.
fn window_attempt(g: &SymplecticPath, delta: f64, p: &QuadraticHamiltonian, n: usize, k: usize, trial: usize) -> Result<Option<WindowTrial>> {
    let gt = perturbed(g, p)?;
    match index::conley_zehnder(&gt) {
        Ok(cz) => Ok(Some(WindowTrial {
            trial,
            mean_index: delta,
            cz,
            lower_margin: cz as f64 - (delta - n as f64),
            upper_margin: delta + (n - k) as f64 - cz as f64,
            rejected_attempts: 0,
        })),
        Err(Error::DegenerateEndpoint | Error::IrregularCrossing(_) | Error::RefinementExhausted(_)) => {
            Ok(None)
        }
        Err(e) => Err(e),
    }
}

fn check_scale(perturb_scale: f64) -> Result<()> {
    if !(perturb_scale > 0.0 && perturb_scale <= 1e-2) {
        return Err(Error::BadParameters(format!(
            "perturb_scale must lie in (0, 1e-2], got {perturb_scale}"
        )));
    }
    Ok(())
}

/// The split path `G = A ⊕ Γ`: `A` is the flow of `ρ = |p|²/2` on `L ⊕ L*`
/// (dimension `2k`), `Γ` the flow of a quadratic with entries in `[−1, 1]`.
pub fn split_generator<R: rand::Rng + ?Sized>(n: usize, k: usize, rng: &mut R) -> Mat {
    let mut rho = Mat::zeros(2 * k, 2 * k);
    for i in k..2 * k {
        rho[(i, i)] = 1.0;
    }
    let a = QuadraticHamiltonian::new(rho).expect("square").generator();
    let gamma = QuadraticHamiltonian::random(n - k, 1.0, rng).generator();
    linalg::symplectic_direct_sum(&a, &gamma)
}

/// Seeded fuzz of `Δ(G) − n ≤ CZ(G̃) ≤ Δ(G) + (n − k)`.
///
/// Trial `i` draws from its own ChaCha stream, so results do not depend on
/// scheduling. A trial redraws `Γ` and the perturbation until the perturbed
/// path is nondegenerate.
pub fn lemma33_fuzz(n: usize, k: usize, trials: usize, perturb_scale: f64, seed: u64) -> Result<WindowSummary> {
    if !(1 <= k && k <= n && n <= 4) {
        return Err(Error::BadParameters(format!("need 1 ≤ k ≤ n ≤ 4, got n = {n}, k = {k}")));
    }
    check_scale(perturb_scale)?;
    let outcomes = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let stream = ((n as u64) << 56) | ((k as u64) << 48) | trial as u64;
            let mut rng = trial_rng(seed, stream);
            for attempt in 0..MAX_ATTEMPTS {
                let x = split_generator(n, k, &mut rng);
                let g = flow_of_generator(&x, 1.0, 16);
                let delta = index::mean_index(&g)?;
                let p = QuadraticHamiltonian::random(n, perturb_scale, &mut rng);
                if let Some(mut t) = window_attempt(&g, delta, &p, n, k, trial)? {
                    t.rejected_attempts = attempt;
                    return Ok((Some(t), attempt));
                }
            }
            Ok((None, MAX_ATTEMPTS))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(WindowSummary::collect(n, k, outcomes))
}

/// Linearised `ρ`-flow along the orbit over `γ` at momentum level `level`,
/// reparametrised to `[0, 1]`.
pub fn rho_linearization(model: &CoisotropicModel, geodesic: &LeafGeodesic, level: f64) -> SymplecticPath {
    let p: Vec<f64> = geodesic.direction.iter().map(|d| level * d).collect();
    let z0 = model.lift_to_level(&model.loop_point(&geodesic.homotopy_class, 0.0), &p);
    model
        .linearized_rho_flow(&z0, geodesic.length / level, 64)
        .rescaled(1.0)
}

/// Default momentum level for `ρ`-orbits. High levels keep the orbit
/// time `ℓ/|p|`, and with it the shear of the linearised flow, small.
pub fn default_level(model: &CoisotropicModel) -> f64 {
    0.9 * model.big_r
}

/// Perturbs the linearised `ρ`-flow along `γ` and checks
/// `Δ_ρ(x) − n ≤ CZ(x̃) ≤ Δ_ρ(x) + (n − k)` per trial.
pub fn prop32_window_check(
    model: &CoisotropicModel,
    geodesic: &LeafGeodesic,
    trials: usize,
    perturb_scale: f64,
    seed: u64,
) -> Result<WindowSummary> {
    check_scale(perturb_scale)?;
    let (n, k) = (model.n, model.k);
    let g = rho_linearization(model, geodesic, default_level(model));
    let delta = index::mean_index(&g)?;
    let outcomes = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = trial_rng(seed, trial as u64);
            for attempt in 0..MAX_ATTEMPTS {
                let p = QuadraticHamiltonian::random(n, perturb_scale, &mut rng);
                if let Some(mut t) = window_attempt(&g, delta, &p, n, k, trial)? {
                    t.rejected_attempts = attempt;
                    return Ok((Some(t), attempt));
                }
            }
            Ok((None, MAX_ATTEMPTS))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(WindowSummary::collect(n, k, outcomes))
}
