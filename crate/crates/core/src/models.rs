//! Closed-form stable coisotropic models.
//!
//! Every model lives in `R^{2n}` (the flat coisotropic torus in
//! `R^{2k} × T^{2(n−k)}`, whose torus factor is taken in linear coordinates)
//! and its normal-form momenta are quadratic: `p_j(z) = ½ zᵀ Q_j z − c_j`.
//! The matrices `−J Q_j` commute, which makes all flows below closed-form.

use std::f64::consts::PI;

use nalgebra::DVector;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::linalg::{self, Mat};
use crate::maslov::FramedLeafLoop;
use crate::symplectic::SymplecticPath;
use crate::{Error, Result};

pub type Vector = DVector<f64>;

pub const MODEL_SCHEMA: &str = "coiso-model-v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    SplitLagrangianTorus,
    FlatCoisotropicTorus,
    EllipsoidHypersurface,
}

/// A stable coisotropic submanifold `M ⊂ W` with its normal-form data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoisotropicModel {
    pub schema: String,
    pub kind: ModelKind,
    pub n: usize,
    pub k: usize,
    /// Circle radii for tori, weights `a_j` for the ellipsoid `Σ |z_j|²/a_j = 1`.
    pub radii: Vec<f64>,
    /// Radius of the normal-form neighbourhood `U_R`.
    #[serde(rename = "R")]
    pub big_r: f64,
    /// Externally configured displacement energy `e(M)`.
    pub displacement_energy: f64,
}

impl CoisotropicModel {
    /// Split Lagrangian torus `S¹(r_1) × ⋯ × S¹(r_n) ⊂ R^{2n}` with
    /// `e(M) = π·min r²`.
    pub fn split_torus(radii: &[f64]) -> Result<Self> {
        let rmin = radii.iter().copied().fold(f64::INFINITY, f64::min);
        Self::new(
            ModelKind::SplitLagrangianTorus,
            radii.len(),
            radii.len(),
            radii.to_vec(),
            0.4 * rmin,
            PI * rmin * rmin,
        )
    }

    /// `T^k(r) × T^{2(n−k)} ⊂ R^{2k} × T^{2(n−k)}` with `e(M) = π·min r²`.
    pub fn flat_torus(n: usize, radii: &[f64]) -> Result<Self> {
        let rmin = radii.iter().copied().fold(f64::INFINITY, f64::min);
        Self::new(
            ModelKind::FlatCoisotropicTorus,
            n,
            radii.len(),
            radii.to_vec(),
            0.4 * rmin,
            PI * rmin * rmin,
        )
    }

    /// Ellipsoid `Σ |z_j|²/a_j = 1` with `e(M) = π·min a`.
    pub fn ellipsoid(weights: &[f64]) -> Result<Self> {
        let amin = weights.iter().copied().fold(f64::INFINITY, f64::min);
        Self::new(
            ModelKind::EllipsoidHypersurface,
            weights.len(),
            1,
            weights.to_vec(),
            0.4,
            PI * amin,
        )
    }

    pub fn new(
        kind: ModelKind,
        n: usize,
        k: usize,
        radii: Vec<f64>,
        big_r: f64,
        displacement_energy: f64,
    ) -> Result<Self> {
        let m = Self {
            schema: MODEL_SCHEMA.into(),
            kind,
            n,
            k,
            radii,
            big_r,
            displacement_energy,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |s: String| Err(Error::InvalidModel(s));
        if self.schema != MODEL_SCHEMA {
            return bad(format!("unknown schema {:?}", self.schema));
        }
        if self.k < 1 || self.k > self.n {
            return bad(format!("need 1 ≤ k ≤ n, got n = {}, k = {}", self.n, self.k));
        }
        let (want_k, want_len) = match self.kind {
            ModelKind::SplitLagrangianTorus => (self.n, self.n),
            ModelKind::FlatCoisotropicTorus => (self.k, self.k),
            ModelKind::EllipsoidHypersurface => (1, self.n),
        };
        if self.k != want_k {
            return bad(format!("{:?} needs k = {want_k}", self.kind));
        }
        if self.kind == ModelKind::FlatCoisotropicTorus && self.k == self.n {
            return bad("flat coisotropic torus needs k < n".into());
        }
        if self.radii.len() != want_len {
            return bad(format!("expected {want_len} radii, got {}", self.radii.len()));
        }
        if self.radii.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
            return bad("radii must be positive".into());
        }
        if !(self.big_r > 0.0 && self.big_r < self.chart_limit()) {
            return bad(format!(
                "R must lie in (0, {}) for this model",
                self.chart_limit()
            ));
        }
        if !(self.displacement_energy.is_finite() && self.displacement_energy > 0.0) {
            return bad("displacement_energy must be positive".into());
        }
        Ok(())
    }

    /// Momentum bound beyond which the normal-form chart degenerates.
    fn chart_limit(&self) -> f64 {
        match self.kind {
            ModelKind::EllipsoidHypersurface => 0.5,
            _ => 0.5 * self.radii.iter().copied().fold(f64::INFINITY, f64::min),
        }
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let m: Self = serde_json::from_str(s).map_err(|e| Error::Format(e.to_string()))?;
        m.validate()?;
        Ok(m)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serialisation")
    }

    pub fn dim(&self) -> usize {
        2 * self.n
    }

    /// Short identifier used in reports.
    pub fn id(&self) -> String {
        let kind = match self.kind {
            ModelKind::SplitLagrangianTorus => "split-torus",
            ModelKind::FlatCoisotropicTorus => "flat-torus",
            ModelKind::EllipsoidHypersurface => "ellipsoid",
        };
        let r: Vec<String> = self.radii.iter().map(|r| format!("{r}")).collect();
        format!("{kind}(n={},k={};{})", self.n, self.k, r.join(","))
    }

    /// `(Q_j, c_j)` with `p_j(z) = ½ zᵀ Q_j z − c_j`.
    pub fn momentum_quadratics(&self) -> Vec<(Mat, f64)> {
        let d = self.dim();
        let n = self.n;
        match self.kind {
            ModelKind::EllipsoidHypersurface => {
                let mut q = Mat::zeros(d, d);
                for (j, a) in self.radii.iter().enumerate() {
                    q[(j, j)] = 1.0 / a;
                    q[(n + j, n + j)] = 1.0 / a;
                }
                vec![(q, 0.5)]
            }
            _ => self
                .radii
                .iter()
                .enumerate()
                .map(|(j, &r)| {
                    let mut q = Mat::zeros(d, d);
                    q[(j, j)] = 1.0 / r;
                    q[(n + j, n + j)] = 1.0 / r;
                    (q, 0.5 * r)
                })
                .collect(),
        }
    }

    /// Normal-form momenta `p(z)`.
    pub fn momenta(&self, z: &Vector) -> Vector {
        let qs = self.momentum_quadratics();
        Vector::from_iterator(qs.len(), qs.iter().map(|(q, c)| 0.5 * z.dot(&(q * z)) - c))
    }

    /// Random point of `M`.
    pub fn random_point<R: Rng + ?Sized>(&self, rng: &mut R) -> Vector {
        let n = self.n;
        let mut z = Vector::zeros(self.dim());
        match self.kind {
            ModelKind::EllipsoidHypersurface => {
                let mut w: Vec<f64> = (0..self.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
                if w.iter().all(|v| v.abs() < 1e-3) {
                    w[0] = 1.0;
                }
                for (i, v) in w.into_iter().enumerate() {
                    z[i] = v;
                }
                let f: f64 = (0..n)
                    .map(|j| (z[j] * z[j] + z[n + j] * z[n + j]) / self.radii[j])
                    .sum();
                z /= f.sqrt();
            }
            _ => {
                for (j, &r) in self.radii.iter().enumerate() {
                    let th = rng.gen_range(0.0..2.0 * PI);
                    z[j] = r * th.cos();
                    z[n + j] = r * th.sin();
                }
                for j in self.k..n {
                    z[j] = rng.gen_range(0.0..1.0);
                    z[n + j] = rng.gen_range(0.0..1.0);
                }
            }
        }
        z
    }

    /// Point of `M` with the given leaf angles in the circle planes (tori).
    pub fn torus_point(&self, angles: &[f64]) -> Vector {
        let n = self.n;
        let mut z = Vector::zeros(self.dim());
        for (j, &r) in self.radii.iter().enumerate() {
            let th = angles.get(j).copied().unwrap_or(0.0);
            z[j] = r * th.cos();
            z[n + j] = r * th.sin();
        }
        z
    }

    /// Canonical leaf frame at `z`: the fields `X_{p_j} = −J Q_j z`, which are
    /// the arc-length fields `∂/∂φ_j` of the normal form (unit circle
    /// tangents on tori, the Reeb field `X_F/2` on the ellipsoid).
    pub fn tangent_frame(&self, z: &Vector) -> Mat {
        let j = linalg::standard_j(self.n);
        let cols: Vec<Vector> = self
            .momentum_quadratics()
            .iter()
            .map(|(q, _)| -(&j * (q * z)))
            .collect();
        Mat::from_columns(&cols)
    }

    /// Normal-form fields `∂/∂p_j` at `z`, normalised by `ω(∂p_j, ∂φ_j) = 1`.
    pub fn normal_frame(&self, z: &Vector) -> Mat {
        let n = self.n;
        let mut out = Mat::zeros(self.dim(), self.k);
        match self.kind {
            ModelKind::EllipsoidHypersurface => {
                let p = self.momenta(z)[0];
                out.set_column(0, &(z / (1.0 + 2.0 * p)));
            }
            _ => {
                for (c, &r) in self.radii.iter().enumerate() {
                    let s2 = z[c].powi(2) + z[n + c].powi(2);
                    out[(c, c)] = r * z[c] / s2;
                    out[(n + c, c)] = r * z[n + c] / s2;
                }
            }
        }
        out
    }

    /// Orthonormal basis of `T_z M` (the common kernel of the `dp_j`).
    pub fn tangent_space(&self, z: &Vector) -> Mat {
        let d = self.dim();
        let grads: Vec<Vector> = self
            .momentum_quadratics()
            .iter()
            .map(|(q, _)| q * z)
            .collect();
        let g = Mat::from_columns(&grads);
        let gram = (g.transpose() * &g).try_inverse().expect("independent gradients");
        let proj = Mat::identity(d, d) - &g * gram * g.transpose();
        let eig = proj.symmetric_eigen();
        let cols: Vec<Vector> = (0..d)
            .filter(|&i| eig.eigenvalues[i] > 0.5)
            .map(|i| eig.eigenvectors.column(i).into_owned())
            .collect();
        Mat::from_columns(&cols)
    }

    /// Evaluates `α_j(v)` at `z` for every leaf form.
    pub fn alpha(&self, z: &Vector, v: &Vector) -> Vector {
        let n = self.n;
        match self.kind {
            ModelKind::EllipsoidHypersurface => {
                // α = 2λ, λ = ½ Σ (x dy − y dx)
                let s: f64 = (0..n).map(|j| z[j] * v[n + j] - z[n + j] * v[j]).sum();
                Vector::from_element(1, s)
            }
            _ => Vector::from_iterator(
                self.k,
                self.radii.iter().enumerate().map(|(j, &r)| {
                    let s2 = z[j].powi(2) + z[n + j].powi(2);
                    r * (z[j] * v[n + j] - z[n + j] * v[j]) / s2
                }),
            ),
        }
    }
}

/// Appends `b` after subdividing `[a, b]` until consecutive samples differ
/// by a step `A⁻¹B` within `1` of the identity.
fn refine_segment<F: Fn(f64) -> Mat>(
    eval: &F,
    a: (f64, Mat),
    b: (f64, Mat),
    depth: u32,
    times: &mut Vec<f64>,
    mats: &mut Vec<Mat>,
) {
    let d = a.1.nrows();
    let step = linalg::symplectic_inverse(&a.1) * &b.1 - Mat::identity(d, d);
    if depth == 0 || linalg::max_abs(&step) <= 1.0 {
        times.push(b.0);
        mats.push(b.1);
        return;
    }
    let tm = 0.5 * (a.0 + b.0);
    let m = (tm, eval(tm));
    refine_segment(eval, a, m.clone(), depth - 1, times, mats);
    let last = (times[times.len() - 1], mats[mats.len() - 1].clone());
    refine_segment(eval, last, b, depth - 1, times, mats);
}

/// A closed leaf-wise geodesic of the metric `Σ α_j²`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LeafGeodesic {
    pub homotopy_class: Vec<i64>,
    pub length: f64,
    /// Momentum level of the orbit of `ρ` projecting to it (0 on `M`).
    pub momentum_level: f64,
    /// Unit momentum direction `p̂` whose `ρ`-flow traces the geodesic.
    pub direction: Vec<f64>,
    #[serde(skip)]
    pub samples: Vec<Vector>,
}

impl CoisotropicModel {
    /// Lattice lengths `2π r_j` (tori) or principal orbit lengths `2π a_j`.
    pub fn lattice_lengths(&self) -> Vec<f64> {
        self.radii.iter().map(|r| 2.0 * PI * r).collect()
    }

    /// Normalises a homotopy class to leaf coordinates.
    ///
    /// Flat coisotropic tori also accept a class of length `2n − k` whose
    /// last `2(n − k)` entries record the class in the symplectic torus
    /// factor; those loops are not contractible in the ambient space.
    pub fn leaf_class(&self, class: &[i64]) -> Result<Vec<i64>> {
        let bad = |why: &str| Err(Error::BadClass(class.to_vec(), why.into()));
        match self.kind {
            ModelKind::SplitLagrangianTorus => {
                if class.len() != self.n {
                    return bad("expected one entry per circle");
                }
                Ok(class.to_vec())
            }
            ModelKind::FlatCoisotropicTorus => {
                if class.len() == self.k {
                    Ok(class.to_vec())
                } else if class.len() == 2 * self.n - self.k {
                    if class[self.k..].iter().any(|&c| c != 0) {
                        return Err(Error::NotContractibleInAmbient(class.to_vec()));
                    }
                    Ok(class[..self.k].to_vec())
                } else {
                    bad("expected k entries (or 2n − k with the torus-factor class)")
                }
            }
            ModelKind::EllipsoidHypersurface => {
                if class.len() != self.n {
                    return bad("expected one entry per complex plane");
                }
                if class.iter().filter(|&&c| c != 0).count() > 1 {
                    return bad("only principal characteristic orbits are closed loops here");
                }
                Ok(class.to_vec())
            }
        }
    }

    /// Length of the closed geodesic in the given class.
    pub fn class_length(&self, class: &[i64]) -> Result<f64> {
        let c = self.leaf_class(class)?;
        let l = self.lattice_lengths();
        Ok(c
            .iter()
            .zip(&l)
            .map(|(&a, &len)| (a as f64 * len).powi(2))
            .sum::<f64>()
            .sqrt())
    }

    /// Symplectic area of the canonical capping of the class.
    pub fn class_area(&self, class: &[i64]) -> Result<f64> {
        let c = self.leaf_class(class)?;
        Ok(match self.kind {
            ModelKind::EllipsoidHypersurface => c
                .iter()
                .zip(&self.radii)
                .map(|(&w, &a)| w as f64 * PI * a)
                .sum(),
            _ => c
                .iter()
                .zip(&self.radii)
                .map(|(&w, &r)| w as f64 * PI * r * r)
                .sum(),
        })
    }

    /// Point of the canonical loop of a leaf class at `t ∈ [0, 1]`.
    pub fn loop_point(&self, leaf_class: &[i64], t: f64) -> Vector {
        match self.kind {
            ModelKind::EllipsoidHypersurface => {
                let j = leaf_class.iter().position(|&c| c != 0).unwrap_or(0);
                let w = leaf_class[j] as f64;
                let a = self.radii[j].sqrt();
                let mut z = Vector::zeros(self.dim());
                z[j] = a * (2.0 * PI * w * t).cos();
                z[self.n + j] = a * (2.0 * PI * w * t).sin();
                z
            }
            _ => {
                let angles: Vec<f64> = leaf_class
                    .iter()
                    .map(|&c| 2.0 * PI * c as f64 * t)
                    .collect();
                self.torus_point(&angles)
            }
        }
    }

    /// Unit momentum direction whose `ρ`-flow traces the class geodesic.
    pub fn class_direction(&self, leaf_class: &[i64]) -> Vec<f64> {
        let l = self.lattice_lengths();
        let v: Vec<f64> = match self.kind {
            ModelKind::EllipsoidHypersurface => {
                let w: i64 = leaf_class.iter().sum();
                vec![w.signum() as f64]
            }
            _ => leaf_class
                .iter()
                .zip(&l)
                .map(|(&c, &len)| c as f64 * len)
                .collect(),
        };
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            v
        } else {
            v.iter().map(|x| x / norm).collect()
        }
    }

    /// Coordinate planes of `T𝓕 ⊕ T⊥M` and of `E` along a canonical loop.
    pub fn splitting_planes(&self, leaf_class: &[i64]) -> (Vec<usize>, Vec<usize>) {
        match self.kind {
            ModelKind::EllipsoidHypersurface => {
                let j = leaf_class.iter().position(|&c| c != 0).unwrap_or(0);
                (vec![j], (0..self.n).filter(|&m| m != j).collect())
            }
            _ => ((0..self.k).collect(), (self.k..self.n).collect()),
        }
    }

    /// Plane carrying an ellipsoid loop, checking that it is principal.
    pub(crate) fn ellipsoid_plane(&self, points: &[Vector]) -> Result<usize> {
        let n = self.n;
        let plane_norm = |z: &Vector, j: usize| (z[j].powi(2) + z[n + j].powi(2)).sqrt();
        let j = (0..n)
            .max_by(|&a, &b| {
                plane_norm(&points[0], a)
                    .partial_cmp(&plane_norm(&points[0], b))
                    .unwrap()
            })
            .unwrap();
        for z in points {
            for m in (0..n).filter(|&m| m != j) {
                if plane_norm(z, m) > 1e-8 {
                    return Err(Error::ProjectionRankLoss(
                        "ellipsoid loops must run along a principal orbit".into(),
                    ));
                }
            }
        }
        Ok(j)
    }

    /// Closed geodesics of length at most `l_max`, contractible in the
    /// ambient space, sorted by length.
    pub fn closed_geodesics(&self, l_max: f64) -> Vec<LeafGeodesic> {
        let lengths = self.lattice_lengths();
        let mut classes: Vec<Vec<i64>> = Vec::new();
        match self.kind {
            ModelKind::EllipsoidHypersurface => {
                for (j, &l) in lengths.iter().enumerate() {
                    let wmax = (l_max / l + 1e-12).floor() as i64;
                    for w in (-wmax..=wmax).filter(|&w| w != 0) {
                        let mut c = vec![0; self.n];
                        c[j] = w;
                        classes.push(c);
                    }
                }
            }
            _ => {
                let bounds: Vec<i64> = lengths
                    .iter()
                    .map(|&l| (l_max / l + 1e-12).floor() as i64)
                    .collect();
                let mut c = vec![0i64; self.k];
                enumerate_box(&bounds, 0, &mut c, &mut classes);
                classes.retain(|c| c.iter().any(|&x| x != 0));
            }
        }
        let mut out: Vec<LeafGeodesic> = classes
            .into_iter()
            .filter_map(|c| {
                let length = self.class_length(&c).ok()?;
                (length <= l_max * (1.0 + 1e-12)).then(|| self.geodesic(&c, length))
            })
            .collect();
        out.sort_by(|a, b| {
            a.length
                .partial_cmp(&b.length)
                .unwrap()
                .then_with(|| b.homotopy_class.cmp(&a.homotopy_class))
        });
        out
    }

    fn geodesic(&self, class: &[i64], length: f64) -> LeafGeodesic {
        LeafGeodesic {
            homotopy_class: class.to_vec(),
            length,
            momentum_level: 0.0,
            direction: self.class_direction(class),
            samples: (0..=64).map(|i| self.loop_point(class, i as f64 / 64.0)).collect(),
        }
    }

    /// The geodesic in a class, if nontrivial.
    pub fn geodesic_of_class(&self, class: &[i64]) -> Result<LeafGeodesic> {
        let c = self.leaf_class(class)?;
        let length = self.class_length(&c)?;
        Ok(self.geodesic(&c, length))
    }

    /// Lengths of closed geodesics up to `l_max`, merged within `1e−9`.
    pub fn length_spectrum(&self, l_max: f64) -> Vec<f64> {
        let mut out: Vec<f64> = Vec::new();
        for g in self.closed_geodesics(l_max) {
            if out.last().map_or(true, |&l| g.length - l > 1e-9) {
                out.push(g.length);
            }
        }
        out
    }

    /// Holonomy `Γ` of the characteristic foliation along the loop, on `E`.
    pub fn holonomy(&self, lp: &FramedLeafLoop) -> Result<SymplecticPath> {
        let t_end = *lp.times.last().ok_or(Error::TooFewSamples)?;
        match self.kind {
            ModelKind::EllipsoidHypersurface => {
                let j = self.ellipsoid_plane(&lp.points)?;
                let n = self.n;
                let reeb = reeb_times(&lp.points, j, n, self.radii[j]);
                let mats = reeb
                    .iter()
                    .map(|&tau| {
                        (0..n)
                            .filter(|&m| m != j)
                            .fold(Mat::zeros(0, 0), |acc, m| {
                                linalg::symplectic_direct_sum(
                                    &acc,
                                    &linalg::rotation2(tau / self.radii[m]),
                                )
                            })
                    })
                    .collect();
                Ok(SymplecticPath::from_parts(lp.times.clone(), mats))
            }
            _ => Ok(SymplecticPath::constant(2 * (self.n - self.k), t_end)),
        }
    }

    /// Symplectic area of the canonical capping of a loop.
    pub fn loop_area(&self, lp: &FramedLeafLoop) -> Result<f64> {
        self.class_area(&lp.homotopy_class)
    }

    /// Ambient point at momentum `p` over the point `m ∈ M`.
    pub fn lift_to_level(&self, m: &Vector, p: &[f64]) -> Vector {
        let n = self.n;
        let mut z = m.clone();
        match self.kind {
            ModelKind::EllipsoidHypersurface => z *= (1.0 + 2.0 * p[0]).sqrt(),
            _ => {
                for (j, &r) in self.radii.iter().enumerate() {
                    let f = (1.0 + 2.0 * p[j] / r).sqrt();
                    z[j] *= f;
                    z[n + j] *= f;
                }
            }
        }
        z
    }

    /// Projection `π: U_R → M` of the normal form.
    pub fn project(&self, z: &Vector) -> Vector {
        let n = self.n;
        let mut out = z.clone();
        match self.kind {
            ModelKind::EllipsoidHypersurface => {
                out /= (1.0 + 2.0 * self.momenta(z)[0]).sqrt();
            }
            _ => {
                for (j, &r) in self.radii.iter().enumerate() {
                    let s = (z[j].powi(2) + z[n + j].powi(2)).sqrt();
                    out[j] *= r / s;
                    out[n + j] *= r / s;
                }
            }
        }
        out
    }

    /// Generator `Σ p_j (−J Q_j)` of the `ρ`-flow through `z`.
    pub fn rho_generator(&self, z: &Vector) -> Mat {
        let j = linalg::standard_j(self.n);
        let p = self.momenta(z);
        self.momentum_quadratics()
            .iter()
            .enumerate()
            .fold(Mat::zeros(self.dim(), self.dim()), |acc, (i, (q, _))| {
                acc - (&j * q) * p[i]
            })
    }

    /// Linearised flow of `ρ = |p|²/2` through `z0`, in ambient coordinates.
    pub fn linearized_rho_flow(&self, z0: &Vector, t_end: f64, steps: usize) -> SymplecticPath {
        let p = self.momenta(z0);
        let hess = Mat::identity(p.len(), p.len());
        self.linearized_momentum_flow(z0, p.as_slice(), &hess, t_end, steps)
    }

    /// Linearised flow through `z0` of a Hamiltonian `K(p)` of the momenta
    /// alone, given `∇K` and `∇²K` at `p(z0)`:
    /// `G(t) = exp(tX) + t Σ_{ij} ∂_i∂_j K · (A_j z(t)) (Q_i z0)ᵀ` with
    /// `A_j = −J Q_j` and `X = Σ ∂_j K · A_j`.
    pub fn linearized_momentum_flow(
        &self,
        z0: &Vector,
        grad: &[f64],
        hess: &Mat,
        t_end: f64,
        steps: usize,
    ) -> SymplecticPath {
        let j = linalg::standard_j(self.n);
        let qs = self.momentum_quadratics();
        let gens: Vec<Mat> = qs.iter().map(|(q, _)| -(&j * q)).collect();
        let x = gens
            .iter()
            .zip(grad)
            .fold(Mat::zeros(self.dim(), self.dim()), |acc, (a, g)| acc + a * *g);
        let grads0: Vec<Vector> = qs.iter().map(|(q, _)| q * z0).collect();
        let eval = |t: f64| -> Mat {
            let e = linalg::expm(&(&x * t));
            let zt = &e * z0;
            let mut g = e;
            for (jj, a) in gens.iter().enumerate() {
                let az = a * &zt;
                for (i, gi) in grads0.iter().enumerate() {
                    let h = hess[(jj, i)];
                    if h != 0.0 {
                        g += &az * gi.transpose() * (t * h);
                    }
                }
            }
            g
        };
        let needed = (x.norm() * t_end.abs()).ceil() as usize;
        let steps = steps.max(needed).max(1);
        let mut times = vec![0.0];
        let mut mats = vec![eval(0.0)];
        for s in 1..=steps {
            let t = if s == steps { t_end } else { t_end * s as f64 / steps as f64 };
            let g = eval(t);
            refine_segment(&eval, (times[times.len() - 1], mats[mats.len() - 1].clone()), (t, g), 30, &mut times, &mut mats);
        }
        SymplecticPath::from_parts(times, mats)
    }

    /// Stability certificate at random points of `M`.
    pub fn stability_certificate<R: Rng + ?Sized>(
        &self,
        samples: usize,
        rng: &mut R,
    ) -> StabilityCertificate {
        let mut cert = StabilityCertificate {
            samples,
            min_wedge: f64::INFINITY,
            max_dalpha_on_kernel: 0.0,
            max_frame_residual: 0.0,
            pass: false,
        };
        let j = linalg::standard_j(self.n);
        for _ in 0..samples {
            let z = self.random_point(rng);
            let t = self.tangent_space(&z);
            let omega_m = t.transpose() * &j * &t;
            let eig = (omega_m.transpose() * &omega_m).symmetric_eigen();
            let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
            order.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap());
            let kernel = Mat::from_columns(
                &order[..self.k]
                    .iter()
                    .map(|&i| &t * eig.eigenvectors.column(i))
                    .collect::<Vec<_>>(),
            );
            let transverse: f64 = order[self.k..]
                .iter()
                .map(|&i| eig.eigenvalues[i].max(0.0).sqrt().sqrt())
                .product();
            let a = Mat::from_fn(self.k, self.k, |r, c| {
                self.alpha(&z, &kernel.column(c).into_owned())[r]
            });
            cert.min_wedge = cert.min_wedge.min(a.determinant().abs() * transverse);

            let frame = self.tangent_frame(&z);
            let proj = &kernel * kernel.transpose() * &frame;
            cert.max_frame_residual = cert
                .max_frame_residual
                .max(linalg::max_abs(&(&frame - proj)) / linalg::max_abs(&frame));

            for c in 0..self.k {
                let u = kernel.column(c).into_owned();
                for w in 0..t.ncols() {
                    let v = t.column(w).into_owned();
                    let d = d_alpha(self, &z, &u, &v);
                    cert.max_dalpha_on_kernel = cert
                        .max_dalpha_on_kernel
                        .max(d.iter().fold(0.0_f64, |m, x| m.max(x.abs())));
                }
            }
        }
        cert.pass = cert.min_wedge > 1e-6
            && cert.max_dalpha_on_kernel < 1e-6
            && cert.max_frame_residual < 1e-8;
        cert
    }

    /// Largest Riemann-tensor component of the leaf metric `Σ α_j²` at the
    /// leaf through the base point, by finite differences in leaf angles.
    pub fn leaf_curvature(&self, angles: &[f64]) -> f64 {
        if self.k < 2 || self.kind == ModelKind::EllipsoidHypersurface {
            return 0.0;
        }
        let k = self.k;
        let metric = |th: &[f64]| -> Mat {
            let z = self.torus_point(th);
            let tangents: Vec<Vector> = (0..k)
                .map(|a| {
                    let mut v = Vector::zeros(self.dim());
                    let r = self.radii[a];
                    v[a] = -r * th[a].sin();
                    v[self.n + a] = r * th[a].cos();
                    v
                })
                .collect();
            let al: Vec<Vector> = tangents.iter().map(|v| self.alpha(&z, v)).collect();
            Mat::from_fn(k, k, |a, b| al[a].dot(&al[b]))
        };
        let h = 1e-3;
        let shifted = |th: &[f64], i: usize, d: f64| -> Vec<f64> {
            let mut t = th.to_vec();
            t[i] += d;
            t
        };
        let dg = |th: &[f64], i: usize| -> Mat {
            (metric(&shifted(th, i, h)) - metric(&shifted(th, i, -h))) / (2.0 * h)
        };
        let christoffel = |th: &[f64]| -> Vec<Mat> {
            let ginv = metric(th).try_inverse().expect("nondegenerate leaf metric");
            let d: Vec<Mat> = (0..k).map(|i| dg(th, i)).collect();
            (0..k)
                .map(|l| {
                    Mat::from_fn(k, k, |i, jj| {
                        (0..k)
                            .map(|m| 0.5 * ginv[(l, m)] * (d[i][(m, jj)] + d[jj][(m, i)] - d[m][(i, jj)]))
                            .sum()
                    })
                })
                .collect()
        };
        let th0: Vec<f64> = (0..k).map(|i| angles.get(i).copied().unwrap_or(0.0)).collect();
        let g0 = christoffel(&th0);
        let dgam: Vec<Vec<Mat>> = (0..k)
            .map(|jj| {
                let plus = christoffel(&shifted(&th0, jj, h));
                let minus = christoffel(&shifted(&th0, jj, -h));
                plus.iter().zip(&minus).map(|(p, m)| (p - m) / (2.0 * h)).collect()
            })
            .collect();
        let mut worst: f64 = 0.0;
        for l in 0..k {
            for i in 0..k {
                for jj in 0..k {
                    for kk in 0..k {
                        let mut r = dgam[jj][l][(i, kk)] - dgam[kk][l][(i, jj)];
                        for m in 0..k {
                            r += g0[l][(jj, m)] * g0[m][(i, kk)] - g0[l][(kk, m)] * g0[m][(i, jj)];
                        }
                        worst = worst.max(r.abs());
                    }
                }
            }
        }
        worst
    }
}

/// `dα(u, v)` for constant ambient fields, by central differences.
fn d_alpha(model: &CoisotropicModel, z: &Vector, u: &Vector, v: &Vector) -> Vector {
    let h = 1e-5;
    let dir = |w: &Vector, x: &Vector| {
        (model.alpha(&(z + w * h), x) - model.alpha(&(z - w * h), x)) / (2.0 * h)
    };
    dir(u, v) - dir(v, u)
}

/// Elapsed Reeb time along a principal ellipsoid loop in plane `j`.
fn reeb_times(points: &[Vector], j: usize, n: usize, a: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(points.len());
    let mut prev = points[0][n + j].atan2(points[0][j]);
    let mut total = 0.0;
    for z in points {
        let ang = z[n + j].atan2(z[j]);
        let mut d = ang - prev;
        while d > PI {
            d -= 2.0 * PI;
        }
        while d < -PI {
            d += 2.0 * PI;
        }
        total += d;
        prev = ang;
        out.push(a * total);
    }
    out
}

fn enumerate_box(bounds: &[i64], i: usize, cur: &mut Vec<i64>, out: &mut Vec<Vec<i64>>) {
    if i == bounds.len() {
        out.push(cur.clone());
        return;
    }
    for v in -bounds[i]..=bounds[i] {
        cur[i] = v;
        enumerate_box(bounds, i + 1, cur, out);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityCertificate {
    pub samples: usize,
    /// Smallest value of `|α_1∧⋯∧α_k∧ω_M^{n−k}|` on orthonormal frames.
    pub min_wedge: f64,
    pub max_dalpha_on_kernel: f64,
    /// Distance of the canonical leaf frame from `ker ω_M`.
    pub max_frame_residual: f64,
    pub pass: bool,
}

/// The normal-form neighbourhood `U_r`.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalFormChart {
    pub model: CoisotropicModel,
    pub r: f64,
}

/// A sampled trajectory of the `ρ`-flow.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub points: Vec<Vector>,
    pub momenta: Vec<Vector>,
}

impl NormalFormChart {
    pub fn new(model: &CoisotropicModel, r: f64) -> Result<Self> {
        if !(r > 0.0 && r < model.big_r) {
            return Err(Error::BadParameters(format!(
                "chart radius must lie in (0, {})",
                model.big_r
            )));
        }
        Ok(Self {
            model: model.clone(),
            r,
        })
    }

    pub fn contains(&self, z: &Vector) -> bool {
        self.model.momenta(z).norm() < self.r
    }

    /// Integrates the flow of `ρ = |p|²/2` from `(m, p)` with a fixed-step
    /// fourth-order Runge–Kutta scheme.
    pub fn geodesic_flow(&self, m: &Vector, p: &[f64], t_end: f64) -> Result<Trajectory> {
        let pv = Vector::from_column_slice(p);
        if pv.norm() >= self.r {
            return Err(Error::LeftChart(0.0));
        }
        let model = &self.model;
        let z0 = model.lift_to_level(m, p);
        let jm = linalg::standard_j(model.n);
        let gens: Vec<Mat> = model
            .momentum_quadratics()
            .iter()
            .map(|(q, _)| -(&jm * q))
            .collect();
        let field = |z: &Vector| -> Vector {
            let p = model.momenta(z);
            gens.iter()
                .enumerate()
                .fold(Vector::zeros(z.len()), |acc, (i, a)| acc + (a * z) * p[i])
        };
        let speed = model.rho_generator(&z0).norm();
        let steps = ((t_end.abs() * speed / 0.004).ceil() as usize).max(1);
        let h = t_end / steps as f64;
        let mut traj = Trajectory {
            times: vec![0.0],
            points: vec![z0.clone()],
            momenta: vec![model.momenta(&z0)],
        };
        let mut z = z0;
        for i in 1..=steps {
            let k1 = field(&z);
            let k2 = field(&(&z + &k1 * (h / 2.0)));
            let k3 = field(&(&z + &k2 * (h / 2.0)));
            let k4 = field(&(&z + &k3 * h));
            z += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
            let t = h * i as f64;
            let pm = model.momenta(&z);
            if pm.norm() >= self.r {
                return Err(Error::LeftChart(t));
            }
            traj.times.push(t);
            traj.points.push(z.clone());
            traj.momenta.push(pm);
        }
        Ok(traj)
    }
}

/// Models shipped with the tool.
pub fn shipped_models() -> Vec<CoisotropicModel> {
    vec![
        CoisotropicModel::split_torus(&[1.0, 2.0]).expect("valid model"),
        CoisotropicModel::flat_torus(3, &[0.6, 0.9]).expect("valid model"),
        CoisotropicModel::ellipsoid(&[1.0, 1.7]).expect("valid model"),
    ]
}
