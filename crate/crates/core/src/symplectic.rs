//! Linear symplectic algebra and sampled paths in `Sp(2n)`.

use std::f64::consts::PI;
use std::sync::OnceLock;

use nalgebra::DVector;
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::linalg::{self, Mat};
use crate::{Error, Result, Tolerances};

/// The standard symplectic form on `R^{2n}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SymplecticForm {
    n: usize,
}

impl SymplecticForm {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 || dim % 2 == 1 {
            return Err(Error::OddDimension(dim));
        }
        Ok(Self { n: dim / 2 })
    }

    pub fn dim(&self) -> usize {
        2 * self.n
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn j(&self) -> Mat {
        linalg::standard_j(self.n)
    }

    pub fn omega(&self, u: &DVector<f64>, v: &DVector<f64>) -> f64 {
        linalg::omega(u, v)
    }
}

/// `‖MᵀJM − J‖` measured entrywise.
pub fn symplectic_defect(m: &Mat) -> f64 {
    let j = linalg::standard_j(m.nrows() / 2);
    linalg::max_abs(&(m.transpose() * &j * m - j))
}

fn check_shape(m: &Mat) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    if m.nrows() % 2 == 1 {
        return Err(Error::OddDimension(m.nrows()));
    }
    Ok(())
}

/// A matrix known to satisfy `MᵀJM = J` up to tolerance.
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticMatrix(Mat);

impl SymplecticMatrix {
    pub fn matrix(&self) -> &Mat {
        &self.0
    }

    pub fn into_inner(self) -> Mat {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn inverse(&self) -> SymplecticMatrix {
        SymplecticMatrix(linalg::symplectic_inverse(&self.0))
    }
}

pub fn validate_symplectic(m: Mat, tol: f64) -> Result<SymplecticMatrix> {
    check_shape(&m)?;
    let residual = symplectic_defect(&m);
    if residual.is_nan() || residual > tol {
        return Err(Error::NotSymplectic { residual });
    }
    Ok(SymplecticMatrix(m))
}

/// A quadratic Hamiltonian `H(x) = ½ xᵀ H x`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticHamiltonian {
    matrix: Mat,
}

impl QuadraticHamiltonian {
    /// Symmetrises `m`; the stored matrix is exactly symmetric.
    pub fn new(m: Mat) -> Result<Self> {
        check_shape(&m)?;
        let matrix = (&m + m.transpose()) * 0.5;
        Ok(Self { matrix })
    }

    pub fn zero(n: usize) -> Self {
        Self {
            matrix: Mat::zeros(2 * n, 2 * n),
        }
    }

    pub fn scalar(n: usize, c: f64) -> Self {
        Self {
            matrix: Mat::identity(2 * n, 2 * n) * c,
        }
    }

    pub fn diagonal(d: &[f64]) -> Result<Self> {
        Self::new(Mat::from_diagonal(&DVector::from_column_slice(d)))
    }

    /// Entries uniform in `[-scale, scale]`, mirrored to a symmetric matrix.
    pub fn random<R: Rng + ?Sized>(n: usize, scale: f64, rng: &mut R) -> Self {
        let d = 2 * n;
        let mut m = Mat::zeros(d, d);
        for i in 0..d {
            for j in i..d {
                let v = rng.gen_range(-scale..=scale);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        Self { matrix: m }
    }

    pub fn matrix(&self) -> &Mat {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn n(&self) -> usize {
        self.dim() / 2
    }

    /// Generator `−J·H` of the linear Hamiltonian flow.
    pub fn generator(&self) -> Mat {
        -(linalg::standard_j(self.n()) * &self.matrix)
    }

    /// Number of positive minus number of negative squares.
    pub fn signature(&self, eig_tol: f64) -> Result<i32> {
        if self.dim() == 0 {
            return Ok(0);
        }
        let eigs = self.matrix.clone().symmetric_eigenvalues();
        let mut sig = 0;
        for &e in eigs.iter() {
            if e.abs() < eig_tol {
                return Err(Error::DegenerateForm(e));
            }
            sig += if e > 0.0 { 1 } else { -1 };
        }
        Ok(sig)
    }
}

/// A sampled path `[0, T] → Sp(2n)` starting at the identity.
///
/// Between samples the path is `A_i · exp(s · log(A_i⁻¹ A_{i+1}))`, which
/// reproduces one-parameter subgroups exactly.
#[derive(Debug, Clone)]
pub struct SymplecticPath {
    times: Vec<f64>,
    mats: Vec<Mat>,
    /// Per-segment logarithms, computed on first use.
    logs: Vec<OnceLock<Option<Mat>>>,
}

impl SymplecticPath {
    pub fn new(samples: Vec<(f64, Mat)>, tol: &Tolerances) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::TooFewSamples);
        }
        let dim = samples[0].1.nrows();
        for (t, m) in &samples {
            check_shape(m)?;
            if m.nrows() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: m.nrows(),
                });
            }
            if !t.is_finite() {
                return Err(Error::NotIncreasing);
            }
        }
        if samples[0].0 != 0.0
            || linalg::max_abs(&(&samples[0].1 - Mat::identity(dim, dim))) > tol.sympl
        {
            return Err(Error::BadStart);
        }
        if samples.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::NotIncreasing);
        }
        for (_, m) in &samples {
            let residual = symplectic_defect(m);
            if residual.is_nan() || residual > tol.sympl {
                return Err(Error::NotSymplectic { residual });
            }
        }
        let (times, mats) = samples.into_iter().unzip();
        Ok(Self::from_parts(times, mats))
    }

    pub(crate) fn from_parts(times: Vec<f64>, mats: Vec<Mat>) -> Self {
        debug_assert_eq!(times.len(), mats.len());
        let logs = (1..times.len()).map(|_| OnceLock::new()).collect();
        Self { times, mats, logs }
    }

    /// The constant identity path on `[0, t_end]`.
    pub fn constant(dim: usize, t_end: f64) -> Self {
        let id = Mat::identity(dim, dim);
        Self::from_parts(vec![0.0, t_end], vec![id.clone(), id])
    }

    pub fn dim(&self) -> usize {
        self.mats[0].nrows()
    }

    pub fn n(&self) -> usize {
        self.dim() / 2
    }

    pub fn t_end(&self) -> f64 {
        *self.times.last().unwrap()
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn matrices(&self) -> &[Mat] {
        &self.mats
    }

    pub fn endpoint(&self) -> &Mat {
        self.mats.last().unwrap()
    }

    /// The step `A_i⁻¹ A_{i+1}`.
    pub fn segment_step(&self, i: usize) -> Mat {
        linalg::symplectic_inverse(&self.mats[i]) * &self.mats[i + 1]
    }

    /// Log of the step `A_i⁻¹ A_{i+1}`, or `None` if it has no real logarithm.
    pub fn segment_log(&self, i: usize) -> Option<&Mat> {
        self.logs[i]
            .get_or_init(|| linalg::logm(&self.segment_step(i)))
            .as_ref()
    }

    fn segment(&self, t: f64) -> usize {
        match self.times.binary_search_by(|s| s.partial_cmp(&t).unwrap()) {
            Ok(i) => i.min(self.times.len() - 2),
            Err(0) => 0,
            Err(i) => (i - 1).min(self.times.len() - 2),
        }
    }

    /// Interpolated value at `t`, clamped to `[0, T]`.
    pub fn at(&self, t: f64) -> Result<Mat> {
        let t = t.clamp(0.0, self.t_end());
        let i = self.segment(t);
        if t == self.times[i] {
            return Ok(self.mats[i].clone());
        }
        if t == self.times[i + 1] {
            return Ok(self.mats[i + 1].clone());
        }
        let h = self.times[i + 1] - self.times[i];
        let l = self
            .segment_log(i)
            .ok_or(Error::RefinementExhausted(self.times[i]))?;
        let s = (t - self.times[i]) / h;
        Ok(&self.mats[i] * linalg::expm(&(l * s)))
    }

    /// Value and derivative at `t` (right derivative at sample times).
    pub fn at_with_velocity(&self, t: f64) -> Result<(Mat, Mat)> {
        let t = t.clamp(0.0, self.t_end());
        let mut i = self.segment(t);
        if t == self.t_end() {
            i = self.times.len() - 2;
        }
        let h = self.times[i + 1] - self.times[i];
        let l = self
            .segment_log(i)
            .ok_or(Error::RefinementExhausted(self.times[i]))?;
        let s = (t - self.times[i]) / h;
        let m = &self.mats[i] * linalg::expm(&(l * s));
        let v = &m * l / h;
        Ok((m, v))
    }

    /// The same path on `[0, t_end]`.
    pub fn rescaled(&self, t_end: f64) -> Self {
        let f = t_end / self.t_end();
        let mut times: Vec<f64> = self.times.iter().map(|t| t * f).collect();
        *times.last_mut().unwrap() = t_end;
        Self::from_parts(times, self.mats.clone())
    }

    /// Values at the given times (which must start at 0 and increase).
    pub fn resample(&self, times: &[f64]) -> Result<Self> {
        let mats = times.iter().map(|&t| self.at(t)).collect::<Result<Vec<_>>>()?;
        Ok(Self::from_parts(times.to_vec(), mats))
    }

    /// `t ↦ C⁻¹ Φ(t) C`.
    pub fn conjugated(&self, c: &Mat) -> Self {
        let ci = linalg::symplectic_inverse(c);
        let mats = self.mats.iter().map(|m| &ci * m * c).collect();
        Self::from_parts(self.times.clone(), mats)
    }

    /// Pointwise product `t ↦ Φ(t) Ψ(t)` on the common refinement.
    pub fn product(&self, other: &SymplecticPath) -> Result<Self> {
        let times = common_times(self, other)?;
        let mats = times
            .iter()
            .map(|&t| Ok(self.at(t)? * other.at(t)?))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::from_parts(times, mats))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&SymPathFile::from(self)).expect("path serialisation")
    }

    pub fn from_json(s: &str, tol: &Tolerances) -> Result<Self> {
        let file: SymPathFile =
            serde_json::from_str(s).map_err(|e| Error::Format(e.to_string()))?;
        file.into_path(tol)
    }
}

/// On-disk form of a path, format tag `sympath-v1`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SymPathFile {
    pub fmt: String,
    pub dim: usize,
    pub samples: Vec<SymPathSample>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SymPathSample {
    pub t: f64,
    pub m: Vec<f64>,
}

pub const SYMPATH_FMT: &str = "sympath-v1";

impl From<&SymplecticPath> for SymPathFile {
    fn from(p: &SymplecticPath) -> Self {
        let dim = p.dim();
        let samples = p
            .times
            .iter()
            .zip(&p.mats)
            .map(|(&t, m)| SymPathSample {
                t,
                m: (0..dim)
                    .flat_map(|i| (0..dim).map(move |j| (i, j)))
                    .map(|(i, j)| m[(i, j)])
                    .collect(),
            })
            .collect();
        Self {
            fmt: SYMPATH_FMT.into(),
            dim,
            samples,
        }
    }
}

impl SymPathFile {
    pub fn into_path(self, tol: &Tolerances) -> Result<SymplecticPath> {
        if self.fmt != SYMPATH_FMT {
            return Err(Error::Format(format!("unknown fmt {:?}", self.fmt)));
        }
        let d = self.dim;
        let samples = self
            .samples
            .into_iter()
            .map(|s| {
                if s.m.len() != d * d {
                    return Err(Error::DimensionMismatch {
                        expected: d * d,
                        found: s.m.len(),
                    });
                }
                Ok((s.t, Mat::from_row_slice(d, d, &s.m)))
            })
            .collect::<Result<Vec<_>>>()?;
        SymplecticPath::new(samples, tol)
    }
}

/// Samples of `t ↦ exp(t·(−J·H))` on `[0, t_end]`.
///
/// Uses at least `steps` uniform steps, and more when a single step would
/// rotate by more than one radian, so that the interpolation stays exact.
pub fn flow_of_quadratic(h: &QuadraticHamiltonian, t_end: f64, steps: usize) -> SymplecticPath {
    flow_of_generator(&h.generator(), t_end, steps)
}

pub(crate) fn flow_of_generator(x: &Mat, t_end: f64, steps: usize) -> SymplecticPath {
    let needed = (x.norm() * t_end.abs()).ceil() as usize;
    let steps = steps.max(needed).max(1);
    let tau = t_end / steps as f64;
    let step = linalg::expm(&(x * tau));
    let mut mats = Vec::with_capacity(steps + 1);
    let dim = x.nrows();
    mats.push(Mat::identity(dim, dim));
    for k in 1..=steps {
        let next = if k % 16 == 0 {
            linalg::expm(&(x * (tau * k as f64)))
        } else {
            &mats[k - 1] * &step
        };
        mats.push(next);
    }
    let times = (0..=steps)
        .map(|k| if k == steps { t_end } else { tau * k as f64 })
        .collect();
    SymplecticPath::from_parts(times, mats)
}

fn common_times(a: &SymplecticPath, b: &SymplecticPath) -> Result<Vec<f64>> {
    let (ta, tb) = (a.t_end(), b.t_end());
    if (ta - tb).abs() > 1e-9 * ta.max(tb) {
        return Err(Error::IntervalMismatch(ta, tb));
    }
    let mut all: Vec<f64> = a.times.iter().chain(&b.times).copied().collect();
    all.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let eps = 1e-12 * ta;
    let mut out: Vec<f64> = Vec::with_capacity(all.len());
    for t in all {
        if out.last().map_or(true, |&l| t - l > eps) {
            out.push(t);
        }
    }
    *out.last_mut().unwrap() = ta;
    Ok(out)
}

/// Block-diagonal path `a ⊕ b` in the ordering `(x_a, x_b, y_a, y_b)`.
pub fn direct_sum(a: &SymplecticPath, b: &SymplecticPath) -> Result<SymplecticPath> {
    let times = common_times(a, b)?;
    let mats = times
        .iter()
        .map(|&t| Ok(linalg::symplectic_direct_sum(&a.at(t)?, &b.at(t)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(SymplecticPath::from_parts(times, mats))
}

/// `a` followed by `t ↦ b(t)·a(T)`.
pub fn concatenate(a: &SymplecticPath, b: &SymplecticPath) -> Result<SymplecticPath> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    let dim = b.dim();
    if linalg::max_abs(&(&b.mats[0] - Mat::identity(dim, dim))) > Tolerances::default().sympl {
        return Err(Error::BadStart);
    }
    let ta = a.t_end();
    let end = a.endpoint().clone();
    let mut times = a.times.clone();
    let mut mats = a.mats.clone();
    for (t, m) in b.times.iter().zip(&b.mats).skip(1) {
        times.push(ta + t);
        mats.push(m * &end);
    }
    Ok(SymplecticPath::from_parts(times, mats))
}

/// `k`-fold concatenation of `a` with itself.
pub fn iterate(a: &SymplecticPath, k: usize) -> SymplecticPath {
    assert!(k >= 1, "iterate needs k >= 1");
    let ta = a.t_end();
    let mut times = a.times.clone();
    let mut mats = a.mats.clone();
    let mut base = a.endpoint().clone();
    for j in 1..k {
        for (t, m) in a.times.iter().zip(&a.mats).skip(1) {
            times.push(ta * j as f64 + t);
            mats.push(m * &base);
        }
        base = mats.last().unwrap().clone();
    }
    SymplecticPath::from_parts(times, mats)
}

/// A point of the spectrum of a symplectic matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectrumPoint {
    pub eigenvalue: Complex64,
    pub multiplicity: usize,
    /// Sign of the Krein form on the eigenspace; 0 off the circle, on the
    /// real axis, or for an indefinite cluster.
    pub krein_sign: i8,
    /// Positive minus negative squares of the Krein form on the generalised
    /// eigenspace (0 unless the point is elliptic and non-real).
    pub krein_signature: i32,
}

/// Closeness relative to the larger modulus, so that `λ ↦ 1/λ` maps
/// clusters to clusters.
fn close(a: Complex64, b: Complex64, radius: f64) -> bool {
    (a - b).norm() <= radius * a.norm().max(b.norm())
}

fn cluster(eigs: &[Complex64], radius: f64) -> Vec<(Complex64, usize)> {
    let mut groups: Vec<Vec<Complex64>> = Vec::new();
    let mut assigned = vec![false; eigs.len()];
    for i in 0..eigs.len() {
        if assigned[i] {
            continue;
        }
        assigned[i] = true;
        let mut group = vec![eigs[i]];
        let mut grew = true;
        while grew {
            grew = false;
            for j in 0..eigs.len() {
                if !assigned[j] && group.iter().any(|g| close(*g, eigs[j], radius)) {
                    assigned[j] = true;
                    group.push(eigs[j]);
                    grew = true;
                }
            }
        }
        groups.push(group);
    }
    groups
        .into_iter()
        .map(|g| {
            let m = g.len();
            (g.iter().sum::<Complex64>() / m as f64, m)
        })
        .collect()
}

/// Signature of the Krein form `v ↦ Im(ω(v̄, v))` on the generalised
/// eigenspace of `m` at `lambda` of dimension `mult`.
fn krein_signature(m: &Mat, lambda: Complex64, mult: usize) -> Result<i32> {
    let d = m.nrows();
    let shifted = linalg::to_complex(m) - linalg::CMat::identity(d, d) * lambda;
    let mut power = shifted.clone();
    for _ in 1..mult {
        power = &power * &shifted;
    }
    let svd = linalg::svd(&power, false, true);
    let vt = svd.v_t.expect("right singular vectors");
    let basis = linalg::CMat::from_fn(d, mult, |i, j| vt[(d - mult + j, i)].conj());
    let minus_i_j = linalg::to_complex(&linalg::standard_j(d / 2)) * Complex64::new(0.0, -1.0);
    let q = basis.adjoint() * minus_i_j * &basis;
    // Real symmetric embedding doubles every eigenvalue of the Hermitian form.
    let real = Mat::from_fn(2 * mult, 2 * mult, |i, j| {
        let (bi, bj) = (i / mult, j / mult);
        let z = q[(i % mult, j % mult)];
        match (bi, bj) {
            (0, 0) | (1, 1) => z.re,
            (0, 1) => -z.im,
            _ => z.im,
        }
    });
    let eigs = real.symmetric_eigenvalues();
    let scale = eigs.iter().fold(0.0_f64, |a, e| a.max(e.abs())).max(1e-300);
    let mut sig = 0;
    for &e in eigs.iter() {
        if e.abs() < 1e-9 * scale {
            return Err(Error::PairingFailure(format!(
                "degenerate Krein form at eigenvalue {lambda}"
            )));
        }
        sig += if e > 0.0 { 1 } else { -1 };
    }
    Ok(sig / 2)
}

/// Eigenvalues with symplectic pairing enforced and Krein data attached.
pub fn spectrum(m: &Mat, tol: &Tolerances) -> Result<Vec<SpectrumPoint>> {
    let d = m.nrows();
    if d == 0 {
        return Ok(Vec::new());
    }
    let eigs = linalg::eigenvalues(m);
    if eigs.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::PairingFailure("non-finite eigenvalue".into()));
    }
    let clusters = cluster(&eigs, tol.pairing);
    // Eigenvalues of size 1/‖m‖ carry relative roundoff of order eps·‖m‖².
    let pair_tol = tol.pairing.max(64.0 * f64::EPSILON * m.norm_squared());
    for &(c, mult) in &clusters {
        let inv = c.inv();
        let partner = clusters.iter().find(|(o, om)| {
            *om == mult && ((o * c) - 1.0).norm() <= pair_tol * (1.0 + (o - inv).norm())
        });
        if partner.is_none() {
            return Err(Error::PairingFailure(format!(
                "eigenvalue {c} (multiplicity {mult}) has no partner near {inv}"
            )));
        }
    }
    let mut out = Vec::with_capacity(clusters.len());
    for (c, mult) in clusters {
        let on_circle = (c.norm() - 1.0).abs() <= pair_tol.min(1e-3);
        let mut sig = 0;
        if on_circle && c.im.abs() > tol.pairing {
            let upper = if c.im > 0.0 { c } else { c.conj() };
            let s = krein_signature(m, upper, mult)?;
            sig = if c.im > 0.0 { s } else { -s };
        }
        out.push(SpectrumPoint {
            eigenvalue: c,
            multiplicity: mult,
            krein_sign: if sig.unsigned_abs() as usize == mult {
                sig.signum() as i8
            } else {
                0
            },
            krein_signature: sig,
        });
    }
    out.sort_by(|a, b| {
        (a.eigenvalue.arg(), a.eigenvalue.norm())
            .partial_cmp(&(b.eigenvalue.arg(), b.eigenvalue.norm()))
            .unwrap()
    });
    Ok(out)
}

/// Angle of the spectral circle map: Krein-weighted arguments of the
/// elliptic eigenvalues plus `π` for each negative hyperbolic pair. A
/// negative eigenvalue on the circle counts `π/2`.
pub fn spectral_angle(m: &Mat, tol: &Tolerances) -> Result<f64> {
    let spec = spectrum(m, tol)?;
    Ok(spectral_angle_of(&spec, tol))
}

pub fn spectral_angle_of(spec: &[SpectrumPoint], tol: &Tolerances) -> f64 {
    let mut angle = 0.0;
    for p in spec {
        let z = p.eigenvalue;
        if z.im.abs() <= tol.pairing {
            // A negative hyperbolic pair is read off its outer member alone;
            // the inner one is the less accurate of the two.
            if z.re < 0.0 {
                let r = z.norm();
                if r > 1.0 + tol.pairing {
                    angle += p.multiplicity as f64 * PI;
                } else if r >= 1.0 - tol.pairing {
                    angle += p.multiplicity as f64 * PI / 2.0;
                }
            }
        } else if z.im > 0.0 && p.krein_signature != 0 {
            angle += p.krein_signature as f64 * z.arg();
        }
    }
    angle
}

/// `exp(−J·H)` for a random quadratic `H` with entries uniform in `[−1, 1]`.
pub fn random_symplectic<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Mat {
    linalg::expm(&QuadraticHamiltonian::random(n, 1.0, rng).generator())
}
