//! Mean index and Conley–Zehnder index of sampled symplectic paths.
//!
//! Normalisation: the flow of a small negative definite quadratic
//! Hamiltonian has `CZ = n` and `Δ > 0`; a small flow of a nondegenerate
//! `H` has `CZ = −sgn(H)/2`.

use std::f64::consts::PI;

use serde::Serialize;

use num_complex::Complex64;

use crate::linalg::{self, CMat, Mat};
use crate::symplectic::{self, SymplecticPath};
use crate::{Error, Result, Tolerances};

const MAX_DEPTH: u32 = 40;
/// Largest generator norm of one grid cell when scanning for crossings.
const GRID_STEP: f64 = 0.2;
/// Largest generator norm of one cell of the angle lift.
const LIFT_STEP: f64 = 0.5;

fn wrap(a: f64) -> f64 {
    let r = a.rem_euclid(2.0 * PI);
    if r > PI {
        r - 2.0 * PI
    } else {
        r
    }
}

/// Sample grid refined so that each cell's step generator has norm at most `step`.
fn refined_grid(path: &SymplecticPath, step: f64) -> Result<Vec<f64>> {
    let times = path.times();
    let mut grid = vec![0.0];
    for i in 0..times.len() - 1 {
        // ‖log(I + E)‖ ≤ −ln(1 − ‖E‖) spares the logarithm on short steps.
        let e = (path.segment_step(i) - Mat::identity(path.dim(), path.dim())).norm();
        let bound = if e < 0.5 {
            -(1.0 - e).ln()
        } else {
            path.segment_log(i)
                .ok_or(Error::RefinementExhausted(times[i]))?
                .norm()
        };
        let pieces = ((bound / step).ceil() as usize).max(1);
        let h = times[i + 1] - times[i];
        for j in 1..pieces {
            grid.push(times[i] + h * j as f64 / pieces as f64);
        }
        grid.push(times[i + 1]);
    }
    Ok(grid)
}

pub fn mean_index(path: &SymplecticPath) -> Result<f64> {
    mean_index_with(path, &Tolerances::default())
}

/// `Δ = (1/π) ×` the continuous lift of the spectral angle along the path.
pub fn mean_index_with(path: &SymplecticPath, tol: &Tolerances) -> Result<f64> {
    if path.dim() == 0 {
        return Ok(0.0);
    }
    let grid = refined_grid(path, LIFT_STEP)?;
    let angle = |t: f64| -> Result<f64> { symplectic::spectral_angle(&path.at(t)?, tol) };
    let start = angle(grid[0])?;
    let mut total = start;
    let mut prev = (grid[0], start);
    for &t in &grid[1..] {
        let next = (t, angle(t)?);
        total += lift(&angle, prev, next, MAX_DEPTH)?;
        prev = next;
    }
    Ok(total / PI)
}

fn lift<F>(angle: &F, a: (f64, f64), b: (f64, f64), depth: u32) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    let d = wrap(b.1 - a.1);
    if d.abs() < PI / 2.0 {
        return Ok(d);
    }
    if depth == 0 {
        return Err(Error::RefinementExhausted(a.0));
    }
    let tm = 0.5 * (a.0 + b.0);
    let m = (tm, angle(tm)?);
    Ok(lift(angle, a, m, depth - 1)? + lift(angle, m, b, depth - 1)?)
}
/// A crossing of the path with the Maslov cycle `{det(Φ − I) = 0}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Crossing {
    pub t: f64,
    /// Signature of the crossing form; the crossing at `t = 0` counts half.
    pub signature: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IndexResult {
    pub mean_index: f64,
    #[serde(rename = "cz")]
    pub cz_index: Option<i64>,
    pub degenerate_endpoint: bool,
    pub crossings: Vec<Crossing>,
}

fn shifted(m: &Mat) -> Mat {
    m - Mat::identity(m.nrows(), m.ncols())
}

fn sigma_min(m: &Mat) -> f64 {
    linalg::singular_values(&shifted(m))
        .iter()
        .fold(f64::INFINITY, |a, &s| a.min(s))
}

/// Whether `m` has an eigenvalue within `cross` of 1.
pub fn endpoint_degenerate(m: &Mat, tol: &Tolerances) -> bool {
    if m.nrows() == 0 {
        return false;
    }
    let near_one = linalg::eigenvalues(m)
        .iter()
        .any(|z| (z - 1.0).norm() < tol.cross);
    near_one || sigma_min(m) < tol.cross
}

/// Signature of `v ↦ ω(v, Φ̇ v)` restricted to the columns of `k`.
fn crossing_signature(k: &Mat, velocity: &Mat, t: f64, tol: &Tolerances) -> Result<i64> {
    let j = linalg::standard_j(velocity.nrows() / 2);
    let jv = &j * velocity;
    let sym = (&jv + jv.transpose()) * 0.5;
    let form = k.transpose() * sym * k;
    let scale = velocity.norm().max(1.0);
    if linalg::min_abs_eigenvalue(&form) < tol.form * scale {
        return Err(Error::IrregularCrossing(t));
    }
    let (pos, neg, _) = linalg::inertia(&form, 0.0);
    Ok(pos as i64 - neg as i64)
}

fn golden_min<F: Fn(f64) -> Result<f64>>(f: &F, mut a: f64, mut b: f64, tol: f64) -> Result<f64> {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    while b - a > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d)?;
        }
    }
    Ok(0.5 * (a + b))
}

/// Collects cells of `[a, b]` that may hold a zero of `σ_min(Φ − I)`.
///
/// `σ_min` is Lipschitz with constant `sup ‖Φ̇‖ ≤ lip` on the cell, so a
/// cell with `σ(a) + σ(b) > lip·(b − a)` holds no zero. Other cells are
/// halved until they are shorter than `min_width`.
fn zero_cells(
    path: &SymplecticPath,
    (a, fa): (f64, f64),
    (b, fb): (f64, f64),
    lip: f64,
    min_width: f64,
    out: &mut Vec<(f64, f64)>,
) -> Result<()> {
    if fa + fb > lip * (b - a) {
        return Ok(());
    }
    let mid = 0.5 * (a + b);
    if b - a <= min_width || mid <= a || mid >= b {
        out.push((a, b));
        return Ok(());
    }
    let fm = sigma_min(&path.at(mid)?);
    zero_cells(path, (a, fa), (mid, fm), lip, min_width, out)?;
    zero_cells(path, (mid, fm), (b, fb), lip, min_width, out)
}

/// Brackets around the grid's local minima of `σ_min(Φ − I)`.
fn minimum_brackets(grid: &[f64], f: &[f64]) -> Vec<(f64, f64)> {
    let last = grid.len() - 1;
    let mut out = Vec::new();
    for i in 1..=last {
        let left = f[i] <= f[i - 1];
        if i == last {
            if left {
                out.push((grid[i - 1], grid[i]));
            }
        } else if left && f[i] <= f[i + 1] {
            out.push((grid[i - 1], grid[i + 1]));
        }
    }
    out
}

/// Lipschitz brackets: every zero of `σ_min` lies in one of them.
fn lipschitz_brackets(
    path: &SymplecticPath,
    grid: &[f64],
    f: &[f64],
    speed: &[f64],
) -> Result<Vec<(f64, f64)>> {
    let min_width = 1e-6 * path.t_end();
    let mut cells = Vec::new();
    for i in 0..grid.len() - 1 {
        // A cell's generator has norm ≤ GRID_STEP, so ‖Φ̇‖ varies by less
        // than a factor e^{0.2} across it.
        let lip = 1.5 * speed[i].max(speed[i + 1]);
        zero_cells(path, (grid[i], f[i]), (grid[i + 1], f[i + 1]), lip, min_width, &mut cells)?;
    }
    // Adjacent cells around one crossing become one bracket.
    let mut brackets: Vec<(f64, f64)> = Vec::new();
    for (a, b) in cells {
        match brackets.last_mut() {
            Some(last) if a <= last.1 => last.1 = b,
            _ => brackets.push((a, b)),
        }
    }
    Ok(brackets)
}

fn crossings_in(
    path: &SymplecticPath,
    brackets: &[(f64, f64)],
    tol: &Tolerances,
) -> Result<Vec<Crossing>> {
    let t_end = path.t_end();
    let objective = |t: f64| -> Result<f64> { Ok(sigma_min(&path.at(t)?)) };
    let mut found: Vec<Crossing> = Vec::new();
    for &(a, b) in brackets {
        let t = golden_min(&objective, a, b, 1e-12 * t_end.max(1.0))?;
        if t < 1e-9 * t_end || t > t_end * (1.0 - 1e-9) {
            continue;
        }
        if found.iter().any(|c| (c.t - t).abs() < 1e-9 * t_end.max(1.0)) {
            continue;
        }
        let (m, v) = path.at_with_velocity(t)?;
        let scale = v.norm().max(1.0);
        let svd = linalg::svd(&shifted(&m), false, true);
        let smin = svd.singular_values.iter().fold(f64::INFINITY, |a, &s| a.min(s));
        if smin > 1e-8 * scale {
            continue;
        }
        let vt = svd.v_t.expect("right singular vectors");
        let cols: Vec<usize> = (0..svd.singular_values.len())
            .filter(|&i| svd.singular_values[i] <= 1e-6 * scale)
            .collect();
        let k = Mat::from_fn(m.nrows(), cols.len(), |r, c| vt[(cols[c], r)]);
        let signature = crossing_signature(&k, &v, t, tol)?;
        found.push(Crossing { t, signature });
    }
    found.sort_by(|a, b| a.t.partial_cmp(&b.t).unwrap());
    Ok(found)
}

/// Interior crossings whose signatures add up to `expected`.
///
/// The grid's local minima catch isolated crossings. When they fall short
/// of the graph phase count the rigorous Lipschitz scan takes over; if even
/// that disagrees, the scan's crossings are returned and the caller falls
/// back on the phase count.
fn interior_crossings(
    path: &SymplecticPath,
    expected: i64,
    tol: &Tolerances,
) -> Result<Vec<Crossing>> {
    let grid = refined_grid(path, GRID_STEP)?;
    let mut f = Vec::with_capacity(grid.len());
    let mut speed = Vec::with_capacity(grid.len());
    for &t in &grid {
        let (m, v) = path.at_with_velocity(t)?;
        f.push(sigma_min(&m));
        speed.push(v.norm());
    }
    let sum = |c: &[Crossing]| c.iter().map(|c| c.signature).sum::<i64>();
    let quick = crossings_in(path, &minimum_brackets(&grid, &f), tol);
    if let Ok(found) = &quick {
        if sum(found) == expected {
            return quick;
        }
    }
    crossings_in(path, &lipschitz_brackets(path, &grid, &f, &speed)?, tol)
}

/// Complex frame `A + iB` of the graph of `m`, viewed as a Lagrangian of
/// `(R^{2n} ⊕ R^{2n}, −ω ⊕ ω)` after flipping the momenta of the first factor.
fn graph_frame(m: &Mat) -> CMat {
    let d = m.nrows();
    let n = d / 2;
    CMat::from_fn(d, d, |r, c| {
        let (re, im) = if r < n {
            (
                if c == r { 1.0 } else { 0.0 },
                if c == r + n { -1.0 } else { 0.0 },
            )
        } else {
            (m[(r - n, c)], m[(r, c)])
        };
        Complex64::new(re, im)
    })
}

/// Unitary representative `(A + iB)(AᵀA + BᵀB)^{-1/2}` of a graph frame.
fn unitary(frame: &CMat) -> CMat {
    let g = (frame.adjoint() * frame).map(|z| z.re);
    let g = (&g + g.transpose()) * 0.5;
    let eig = g.symmetric_eigen();
    let inv_sqrt = &eig.eigenvectors
        * Mat::from_diagonal(&eig.eigenvalues.map(|e| 1.0 / e.sqrt()))
        * eig.eigenvectors.transpose();
    frame * linalg::to_complex(&inv_sqrt)
}

/// Signed count of crossings of the graph with the diagonal, the start
/// counting half, read off the phase of `det(A + iB)`.
///
/// The eigenvalues `e^{iθ}` of the Souriau matrix `MᵀM`, `M = U₀*U`, sit at
/// 1 exactly on crossings. Their total phase is the lift of `2 arg det U`;
/// the endpoint's principal phases turn that into a count.
pub fn graph_phase_count(path: &SymplecticPath) -> Result<i64> {
    let d = path.dim();
    if d == 0 {
        return Ok(0);
    }
    let angle = |t: f64| -> Result<f64> {
        Ok(2.0 * graph_frame(&path.at(t)?).determinant().arg())
    };
    let grid = refined_grid(path, LIFT_STEP)?;
    let mut total = 0.0;
    let mut prev = (grid[0], angle(grid[0])?);
    for &t in &grid[1..] {
        let next = (t, angle(t)?);
        total += lift(&angle, prev, next, MAX_DEPTH)?;
        prev = next;
    }
    let u0 = unitary(&graph_frame(&Mat::identity(d, d)));
    let m = u0.adjoint() * unitary(&graph_frame(path.endpoint()));
    let souriau = m.transpose() * &m;
    let principal: f64 = linalg::complex_eigenvalues(&souriau)
        .iter()
        .map(|z| z.arg().rem_euclid(2.0 * PI))
        .sum();
    let count = (total - principal) / (2.0 * PI) + d as f64 / 2.0;
    if (count - count.round()).abs() > 0.25 {
        return Err(Error::RefinementExhausted(path.t_end()));
    }
    Ok(count.round() as i64)
}

pub fn conley_zehnder(path: &SymplecticPath) -> Result<i64> {
    conley_zehnder_with(path, &Tolerances::default()).map(|(cz, _)| cz)
}

/// Crossing-form count, negated: `CZ = −(sig₀/2 + Σ sig)`.
///
/// The total is taken from the graph phase, which equals the crossing-form
/// sum on every regular path and stays exact when crossings cluster too
/// tightly to be resolved one by one. The returned crossings are the ones
/// the scan located.
pub fn conley_zehnder_with(
    path: &SymplecticPath,
    tol: &Tolerances,
) -> Result<(i64, Vec<Crossing>)> {
    if path.dim() == 0 {
        return Ok((0, Vec::new()));
    }
    if endpoint_degenerate(path.endpoint(), tol) {
        return Err(Error::DegenerateEndpoint);
    }
    let dim = path.dim();
    let (_, v0) = path.at_with_velocity(0.0)?;
    let sig0 = crossing_signature(&Mat::identity(dim, dim), &v0, 0.0, tol)?;
    let phase = graph_phase_count(path)?;
    // The start counts half; the phase count already includes that.
    let interior = interior_crossings(path, phase - sig0 / 2, tol)?;
    let mut crossings = vec![Crossing {
        t: 0.0,
        signature: sig0,
    }];
    crossings.extend(interior);
    Ok((-phase, crossings))
}

pub fn index_report(path: &SymplecticPath) -> Result<IndexResult> {
    index_report_with(path, &Tolerances::default())
}

pub fn index_report_with(path: &SymplecticPath, tol: &Tolerances) -> Result<IndexResult> {
    let mean_index = mean_index_with(path, tol)?;
    match conley_zehnder_with(path, tol) {
        Ok((cz, crossings)) => Ok(IndexResult {
            mean_index,
            cz_index: Some(cz),
            degenerate_endpoint: false,
            crossings,
        }),
        Err(Error::DegenerateEndpoint) => Ok(IndexResult {
            mean_index,
            cz_index: None,
            degenerate_endpoint: true,
            crossings: Vec::new(),
        }),
        Err(e) => Err(e),
    }
}

/// `max_{k ≤ k_max} |Δ(Φ^k) − k·Δ(Φ)|`.
pub fn homogeneity_check(path: &SymplecticPath, k_max: usize) -> Result<f64> {
    let base = mean_index(path)?;
    let mut worst: f64 = 0.0;
    for k in 2..=k_max {
        let dk = mean_index(&symplectic::iterate(path, k))?;
        worst = worst.max((dk - k as f64 * base).abs());
    }
    Ok(worst)
}
