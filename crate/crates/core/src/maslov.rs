//! Coisotropic Maslov index of loops tangent to the characteristic foliation.
//!
//! Along a loop `γ` the ambient tangent space splits as
//! `(T𝓕 ⊕ T⊥M) ⊕ E`. A leaf frame `ξ` and its dual normal frame `ξ*` give a
//! family `Ξ(t)` on the first factor, the holonomy `Γ(t)` acts on `E`, and
//! `μ(γ) = −Δ(Ξ ⊕ Γ)` with all maps read in the ambient (capping)
//! trivialisation.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::index;
use crate::linalg::{self, Mat};
use crate::models::{CoisotropicModel, ModelKind, Vector};
use crate::symplectic::{self, SymplecticPath};
use crate::{Error, Result, Tolerances};

/// Default number of samples on canonical loops.
pub const DEFAULT_SAMPLES: usize = 256;

/// Samples for the canonical loop of a class: 32 per turn, at least 32 and
/// at most [`DEFAULT_SAMPLES`].
pub fn canonical_samples(class: &[i64]) -> usize {
    let turns: u64 = class.iter().map(|c| c.unsigned_abs()).sum();
    (32 * turns as usize).clamp(32, DEFAULT_SAMPLES)
}

pub const LEAFLOOP_FMT: &str = "leafloop-v1";

/// A loop tangent to the characteristic foliation with a leaf frame.
#[derive(Debug, Clone)]
pub struct FramedLeafLoop {
    pub times: Vec<f64>,
    pub points: Vec<Vector>,
    /// Ambient `2n × k` frame of `T𝓕` at each sample.
    pub frames: Vec<Mat>,
    pub orientable: bool,
    pub homotopy_class: Vec<i64>,
}

impl FramedLeafLoop {
    /// The canonical loop of a class on `[0, 1]` with the model's leaf frame.
    pub fn canonical(model: &CoisotropicModel, class: &[i64], samples: usize) -> Result<Self> {
        Self::canonical_with(model, class, samples, |t| t)
    }

    /// Canonical loop traversed as `t ↦ γ(s(t))` for a reparametrisation
    /// `s` of `[0, 1]` fixing the end points.
    pub fn canonical_with<F: Fn(f64) -> f64>(
        model: &CoisotropicModel,
        class: &[i64],
        samples: usize,
        s: F,
    ) -> Result<Self> {
        let leaf = model.leaf_class(class)?;
        let samples = samples.max(8);
        let times: Vec<f64> = (0..=samples).map(|i| i as f64 / samples as f64).collect();
        let points: Vec<Vector> = times.iter().map(|&t| model.loop_point(&leaf, s(t))).collect();
        let frames = points.iter().map(|z| model.tangent_frame(z)).collect();
        Ok(Self {
            times,
            points,
            frames,
            orientable: true,
            homotopy_class: class.to_vec(),
        })
    }

    pub fn t_end(&self) -> f64 {
        *self.times.last().unwrap()
    }

    /// Replaces the frame by `ξ(t)·F(t)` for invertible `k × k` matrices `F(t)`.
    pub fn with_frame_change<F: Fn(f64) -> Mat>(mut self, f: F) -> Self {
        for (t, fr) in self.times.iter().zip(self.frames.iter_mut()) {
            *fr = &*fr * f(*t);
        }
        self
    }

    /// The `k`-fold loop.
    pub fn iterate(&self, k: usize) -> Self {
        assert!(k >= 1, "iterate needs k >= 1");
        let t_end = self.t_end();
        let mut out = self.clone();
        for lap in 1..k {
            for i in 1..self.times.len() {
                out.times.push(lap as f64 * t_end + self.times[i]);
                out.points.push(self.points[i].clone());
                out.frames.push(self.frames[i].clone());
            }
        }
        out.homotopy_class = self.homotopy_class.iter().map(|c| c * k as i64).collect();
        out
    }

    /// The double cover, continuing the frame by its monodromy.
    pub fn doubled(&self) -> Result<Self> {
        let first = &self.frames[0];
        let last = self.frames.last().unwrap();
        let svd = linalg::svd(first, true, true);
        let monodromy = svd
            .solve(last, 1e-14)
            .map_err(|e| Error::Format(e.to_string()))?;
        let t_end = self.t_end();
        let mut out = self.clone();
        for i in 1..self.times.len() {
            out.times.push(t_end + self.times[i]);
            out.points.push(self.points[i].clone());
            out.frames.push(&self.frames[i] * &monodromy);
        }
        out.homotopy_class = self.homotopy_class.iter().map(|c| 2 * c).collect();
        out.orientable = true;
        Ok(out)
    }

    /// Checks sample layout, tangency, rank and (if orientable) closure.
    pub fn validate(&self, model: &CoisotropicModel) -> Result<()> {
        let m = self.times.len();
        if m < 2 {
            return Err(Error::TooFewSamples);
        }
        if self.points.len() != m || self.frames.len() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                found: self.points.len().min(self.frames.len()),
            });
        }
        if self.times[0] != 0.0 {
            return Err(Error::BadStart);
        }
        if self.times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::NotIncreasing);
        }
        for (i, (z, fr)) in self.points.iter().zip(&self.frames).enumerate() {
            if z.len() != model.dim() {
                return Err(Error::DimensionMismatch {
                    expected: model.dim(),
                    found: z.len(),
                });
            }
            if fr.nrows() != model.dim() || fr.ncols() != model.k {
                return Err(Error::DimensionMismatch {
                    expected: model.k,
                    found: fr.ncols(),
                });
            }
            let canon = model.tangent_frame(z);
            let scale = linalg::max_abs(fr).max(1e-300);
            let coeffs = linalg::svd(&canon, true, true)
                .solve(fr, 1e-14)
                .map_err(|e| Error::Format(e.to_string()))?;
            let residual = linalg::max_abs(&(fr - &canon * &coeffs)) / scale;
            if residual > 1e-8 {
                return Err(Error::FrameNotTangent(i, residual));
            }
            let sv = linalg::singular_values(fr);
            let smin = sv.iter().fold(f64::INFINITY, |a, &s| a.min(s));
            let smax = sv.iter().fold(0.0_f64, |a, &s| a.max(s));
            if smin <= 1e-10 * smax.max(1e-300) {
                return Err(Error::FrameRankLoss(i));
            }
        }
        if self.orientable {
            let closure = linalg::max_abs(&(self.frames.last().unwrap() - &self.frames[0]));
            let gap = (self.points.last().unwrap() - &self.points[0]).amax();
            if closure > 1e-8 || gap > 1e-8 {
                return Err(Error::FrameNotClosed(closure.max(gap)));
            }
        }
        Ok(())
    }

    /// Parses a `leafloop-v1` document against an already loaded model.
    pub fn from_json(s: &str, model: &CoisotropicModel) -> Result<Self> {
        let file: LeafLoopFile =
            serde_json::from_str(s).map_err(|e| Error::Format(e.to_string()))?;
        file.into_loop(model)
    }
}

/// On-disk loop description, format tag `leafloop-v1`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LeafLoopFile {
    pub fmt: String,
    /// Path of the `coiso-model-v1` file the loop lives on.
    pub model: String,
    pub class: Vec<i64>,
    #[serde(default = "default_true")]
    pub orientable: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<Vec<LeafLoopSample>>,
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LeafLoopSample {
    pub t: f64,
    pub point: Vec<f64>,
    /// Row-major `2n × k` frame.
    pub frame: Vec<f64>,
}

impl LeafLoopFile {
    pub fn into_loop(self, model: &CoisotropicModel) -> Result<FramedLeafLoop> {
        if self.fmt != LEAFLOOP_FMT {
            return Err(Error::Format(format!("unknown fmt {:?}", self.fmt)));
        }
        let Some(samples) = self.samples else {
            let mut lp = FramedLeafLoop::canonical(model, &self.class, DEFAULT_SAMPLES)?;
            lp.orientable = self.orientable;
            return Ok(lp);
        };
        let d = model.dim();
        let k = model.k;
        let mut lp = FramedLeafLoop {
            times: Vec::new(),
            points: Vec::new(),
            frames: Vec::new(),
            orientable: self.orientable,
            homotopy_class: self.class,
        };
        for s in samples {
            if s.point.len() != d || s.frame.len() != d * k {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: s.point.len(),
                });
            }
            lp.times.push(s.t);
            lp.points.push(Vector::from_vec(s.point));
            lp.frames.push(Mat::from_row_slice(d, k, &s.frame));
        }
        Ok(lp)
    }
}

/// `Ξ`, `Γ` and their direct sum `Φ`.
#[derive(Debug, Clone)]
pub struct AssembledPath {
    pub xi_path: SymplecticPath,
    pub holonomy_path: SymplecticPath,
    pub phi: SymplecticPath,
}

fn v1_planes(lp: &FramedLeafLoop, model: &CoisotropicModel) -> Result<Vec<usize>> {
    Ok(match model.kind {
        ModelKind::EllipsoidHypersurface => vec![model.ellipsoid_plane(&lp.points)?],
        _ => (0..model.k).collect(),
    })
}

/// Frame transport `Ξ(t)` on `T𝓕 ⊕ T⊥M`: the symplectic basis
/// `B(t) = [ξ(t) | ξ*(t)]`, with `ξ*` the normal frame normalised by
/// `ω(ξ_a, ξ*_b) = δ_ab` and made isotropic, gives `Ξ(t) = B(t) B(0)⁻¹`.
pub fn xi_path_from_frame(lp: &FramedLeafLoop, model: &CoisotropicModel) -> Result<SymplecticPath> {
    lp.validate(model)?;
    let planes = v1_planes(lp, model)?;
    let idx = linalg::plane_indices(&planes, model.n);
    let j = linalg::standard_j(model.n);
    let k = model.k;
    let mut bases = Vec::with_capacity(lp.times.len());
    for (i, (z, xi)) in lp.points.iter().zip(&lp.frames).enumerate() {
        let nf = model.normal_frame(z);
        let w = xi.transpose() * &j * &nf;
        let winv = w.try_inverse().ok_or(Error::FrameRankLoss(i))?;
        let mut dual = &nf * winv;
        let s = dual.transpose() * &j * &dual;
        dual += xi * s * 0.5;
        let full = Mat::from_fn(model.dim(), 2 * k, |r, c| {
            if c < k {
                xi[(r, c)]
            } else {
                dual[(r, c - k)]
            }
        });
        let b = Mat::from_fn(2 * k, 2 * k, |r, c| full[(idx[r], c)]);
        if linalg::singular_values(&b).min() < 1e-12 {
            return Err(Error::FrameRankLoss(i));
        }
        bases.push(b);
    }
    let b0inv = bases[0].clone().try_inverse().ok_or(Error::FrameRankLoss(0))?;
    let mats: Vec<Mat> = bases.iter().map(|b| b * &b0inv).collect();
    for m in &mats {
        let residual = symplectic::symplectic_defect(m);
        if residual > 1e-8 {
            return Err(Error::NotSymplectic { residual });
        }
    }
    Ok(SymplecticPath::from_parts(lp.times.clone(), mats))
}

pub fn assemble(lp: &FramedLeafLoop, model: &CoisotropicModel) -> Result<AssembledPath> {
    model.leaf_class(&lp.homotopy_class)?;
    let xi_path = xi_path_from_frame(lp, model)?;
    let holonomy_path = model.holonomy(lp)?;
    let phi = symplectic::direct_sum(&xi_path, &holonomy_path)?;
    Ok(AssembledPath {
        xi_path,
        holonomy_path,
        phi,
    })
}

/// `μ(γ) = −Δ(Ξ ⊕ Γ)`; non-orientable loops use `μ(γ²)/2`.
pub fn maslov_index(lp: &FramedLeafLoop, model: &CoisotropicModel) -> Result<f64> {
    if !lp.orientable {
        return Ok(maslov_index(&lp.doubled()?, model)? / 2.0);
    }
    let a = assemble(lp, model)?;
    Ok(-index::mean_index_with(&a.phi, &Tolerances::default())?)
}

/// `μ` after twisting the capping trivialisation by a counter-clockwise
/// rotation loop of winding `m` in the first factor plane.
pub fn maslov_index_twisted(lp: &FramedLeafLoop, model: &CoisotropicModel, m: i64) -> Result<f64> {
    let a = assemble(lp, model)?;
    let t_end = a.phi.t_end();
    let dim = a.phi.dim();
    let n = dim / 2;
    let steps = (8 * m.unsigned_abs() as usize).max(8);
    let times: Vec<f64> = (0..=steps).map(|i| t_end * i as f64 / steps as f64).collect();
    let twist: Vec<Mat> = times
        .iter()
        .map(|&t| {
            let mut z = Mat::identity(dim, dim);
            let r = linalg::rotation2(-2.0 * PI * m as f64 * t / t_end);
            z[(0, 0)] = r[(0, 0)];
            z[(0, n)] = r[(0, 1)];
            z[(n, 0)] = r[(1, 0)];
            z[(n, n)] = r[(1, 1)];
            z
        })
        .collect();
    let twist = SymplecticPath::from_parts(times, twist);
    let phi = twist.product(&a.phi)?;
    Ok(-index::mean_index(&phi)?)
}

/// `μ(γ, u # v) = μ(γ, u) − 2m` for a sphere `v` with `⟨c₁, v⟩ = m`.
pub fn recap(mu: f64, m: i64) -> f64 {
    mu - 2.0 * m as f64
}

/// `|μ(γ^k) − k·μ(γ)|`.
pub fn homogeneity(lp: &FramedLeafLoop, model: &CoisotropicModel, k: usize) -> Result<f64> {
    let base = maslov_index(lp, model)?;
    let iterated = maslov_index(&lp.iterate(k), model)?;
    Ok((iterated - k as f64 * base).abs())
}

/// Index, area and length of the canonical loop of a class.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassIndex {
    pub class: Vec<i64>,
    pub mu: f64,
    pub area: f64,
    pub length: f64,
}

pub fn class_index(model: &CoisotropicModel, class: &[i64]) -> Result<ClassIndex> {
    let lp = FramedLeafLoop::canonical(model, class, canonical_samples(class))?;
    Ok(ClassIndex {
        class: class.to_vec(),
        mu: maslov_index(&lp, model)?,
        area: model.class_area(class)?,
        length: model.class_length(class)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recap_arithmetic() {
        assert_eq!(recap(2.0, 1), 0.0);
        assert_eq!(recap(1.25, 0), 1.25);
        assert_eq!(recap(2.0, -2), 6.0);
    }

    #[test]
    fn split_torus_classes() {
        let m = CoisotropicModel::split_torus(&[1.0, 2.0]).unwrap();
        let r = class_index(&m, &[1, 0]).unwrap();
        assert!((r.mu - 2.0).abs() < 1e-9, "{r:?}");
        assert!((r.area - PI).abs() < 1e-12);
        let r = class_index(&m, &[0, 0]).unwrap();
        assert!(r.mu.abs() < 1e-12);
        assert!((class_index(&m, &[1, 1]).unwrap().area - 5.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn ellipsoid_principal_orbit() {
        let m = CoisotropicModel::ellipsoid(&[1.0, 1.7]).unwrap();
        let r = class_index(&m, &[1, 0]).unwrap();
        assert!((r.mu - (2.0 + 2.0 / 1.7)).abs() < 1e-8, "{r:?}");
        let r = class_index(&m, &[0, 1]).unwrap();
        assert!((r.mu - (2.0 + 2.0 * 1.7)).abs() < 1e-8, "{r:?}");
    }
}
