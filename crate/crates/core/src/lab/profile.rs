//! Radial test Hamiltonians `H(|p|)` on the normal-form neighbourhood.

use serde::{Deserialize, Serialize};

use crate::models::{CoisotropicModel, ModelKind};
use crate::{Error, Result};

/// `H ≡ C` on `[0, ε]`, a concave cap on `[ε, 2ε]`, linear from `C − ε`
/// to `ε` on `[2ε, r − ε]`, a convex cap on `[r − ε, r]` and `H ≡ 0` on
/// `[r, R]`.
///
/// The caps are power laws `C − ε·u^q` and `ε·(1 − v)^q` in the rescaled
/// variables `u, v ∈ [0, 1]`, with `q` equal to the slope so that `H` is
/// `C¹` at every knot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TestHamiltonianProfile {
    #[serde(rename = "C")]
    pub c: f64,
    pub eps: f64,
    pub r_param: f64,
    #[serde(rename = "R")]
    pub big_r: f64,
    /// `−H′` on the linear part, `(C − 2ε)/(r − 3ε)`.
    pub slope: f64,
    pub cap: String,
    pub cap_exponent: f64,
    pub knots: Vec<f64>,
}

/// Which cap an orbit level lies in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Band {
    Inner,
    Outer,
}

pub fn build_profile(c: f64, eps: f64, r_param: f64, big_r: f64, e_u: f64) -> Result<TestHamiltonianProfile> {
    let bad = |s: String| Err(Error::BadParameters(s));
    if ![c, eps, r_param, big_r, e_u].iter().all(|x| x.is_finite()) {
        return bad("parameters must be finite".into());
    }
    if !(eps > 0.0 && eps < r_param / 4.0) {
        return bad(format!("need 0 < eps < r/4, got eps = {eps}, r = {r_param}"));
    }
    if !(r_param < big_r) {
        return bad(format!("need r < R, got r = {r_param}, R = {big_r}"));
    }
    if !(c > e_u) {
        return bad(format!("need C > e(U) = {e_u}, got C = {c}"));
    }
    let slope = (c - 2.0 * eps) / (r_param - 3.0 * eps);
    if !(slope > 1.0) {
        return bad(format!("slope {slope} must exceed 1 for C¹ concave/convex caps"));
    }
    Ok(TestHamiltonianProfile {
        c,
        eps,
        r_param,
        big_r,
        slope,
        cap: "power".into(),
        cap_exponent: slope,
        knots: vec![0.0, eps, 2.0 * eps, r_param - eps, r_param, big_r],
    })
}

/// Neighbourhood displacement energy `e(U_r)` used by the harness.
///
/// This is a configured constant, scaled from the model's `e(M)` by the
/// growth of the smallest circle (tori) or of the ellipsoid at `|p| = r`.
pub fn neighbourhood_energy(model: &CoisotropicModel, r_param: f64) -> f64 {
    let e = model.displacement_energy;
    match model.kind {
        ModelKind::EllipsoidHypersurface => e * (1.0 + 2.0 * r_param),
        _ => {
            let rmin = model.radii.iter().copied().fold(f64::INFINITY, f64::min);
            e * (1.0 + 2.0 * r_param / rmin)
        }
    }
}

impl TestHamiltonianProfile {
    fn q(&self) -> f64 {
        self.cap_exponent
    }

    pub fn h(&self, s: f64) -> f64 {
        let (e, r, q) = (self.eps, self.r_param, self.q());
        if s <= e {
            self.c
        } else if s <= 2.0 * e {
            self.c - e * ((s - e) / e).clamp(0.0, 1.0).powf(q)
        } else if s <= r - e {
            self.c - e - self.slope * (s - 2.0 * e)
        } else if s <= r {
            e * (1.0 - (s - (r - e)) / e).max(0.0).powf(q)
        } else {
            0.0
        }
    }

    pub fn dh(&self, s: f64) -> f64 {
        let (e, r, q) = (self.eps, self.r_param, self.q());
        if s <= e {
            0.0
        } else if s <= 2.0 * e {
            -q * ((s - e) / e).clamp(0.0, 1.0).powf(q - 1.0)
        } else if s <= r - e {
            -self.slope
        } else if s <= r {
            -q * (1.0 - (s - (r - e)) / e).max(0.0).powf(q - 1.0)
        } else {
            0.0
        }
    }

    pub fn d2h(&self, s: f64) -> f64 {
        let (e, r, q) = (self.eps, self.r_param, self.q());
        if s < e || (s > 2.0 * e && s < r - e) || s > r {
            0.0
        } else if s <= 2.0 * e {
            -q * (q - 1.0) * ((s - e) / e).clamp(0.0, 1.0).powf(q - 2.0) / e
        } else {
            q * (q - 1.0) * (1.0 - (s - (r - e)) / e).max(0.0).powf(q - 2.0) / e
        }
    }

    /// Band containing the level `s`, if it lies in one of the caps.
    pub fn band(&self, s: f64) -> Option<Band> {
        let (e, r) = (self.eps, self.r_param);
        if s >= e && s <= 2.0 * e {
            Some(Band::Inner)
        } else if s >= r - e && s <= r {
            Some(Band::Outer)
        } else {
            None
        }
    }

    /// All levels `s ∈ [0, R]` with `H′(s) = −ℓ`, located by a sign scan of
    /// `H′ + ℓ` followed by bisection.
    pub fn levels_with_slope(&self, ell: f64) -> Vec<f64> {
        const CELLS: usize = 20_000;
        let f = |s: f64| self.dh(s) + ell;
        let h = self.big_r / CELLS as f64;
        let mut out = Vec::new();
        let mut a = 0.0;
        let mut fa = f(a);
        for i in 1..=CELLS {
            let b = if i == CELLS { self.big_r } else { h * i as f64 };
            let fb = f(b);
            if fa == 0.0 {
                out.push(a);
            } else if fa * fb < 0.0 {
                let (mut lo, mut hi, mut flo) = (a, b, fa);
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if mid <= lo || mid >= hi {
                        break;
                    }
                    let fm = f(mid);
                    if fm == 0.0 {
                        lo = mid;
                        hi = mid;
                        break;
                    }
                    if (fm > 0.0) == (flo > 0.0) {
                        lo = mid;
                        flo = fm;
                    } else {
                        hi = mid;
                    }
                }
                out.push(0.5 * (lo + hi));
            }
            a = b;
            fa = fb;
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> TestHamiltonianProfile {
        build_profile(6.0, 0.02, 0.3, 0.4, 5.0).unwrap()
    }

    #[test]
    fn knot_values() {
        let p = sample();
        assert_eq!(p.h(0.0), 6.0);
        assert_eq!(p.h(0.4), 0.0);
        assert!((p.h(0.04) - 5.98).abs() < 1e-12);
        assert!((p.h(0.28) - 0.02).abs() < 1e-12);
        assert!((p.slope - 5.96 / 0.24).abs() < 1e-12);
    }

    #[test]
    fn c1_at_knots() {
        let p = sample();
        for &k in &p.knots[1..5] {
            let (l, r) = (p.dh(k - 1e-12), p.dh(k + 1e-12));
            assert!((l - r).abs() < 1e-6 * p.slope, "knot {k}: {l} vs {r}");
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(build_profile(6.0, 0.08, 0.3, 0.4, 5.0).is_err());
        assert!(build_profile(6.0, 0.02, 0.4, 0.4, 5.0).is_err());
        assert!(build_profile(4.0, 0.02, 0.3, 0.4, 5.0).is_err());
        assert!(build_profile(0.2, 0.02, 0.3, 0.4, 0.1).is_err());
    }

    #[test]
    fn levels_lie_in_caps() {
        let p = sample();
        let lv = p.levels_with_slope(10.0);
        assert_eq!(lv.len(), 2);
        assert_eq!(p.band(lv[0]), Some(Band::Inner));
        assert_eq!(p.band(lv[1]), Some(Band::Outer));
        for s in lv {
            assert!((p.dh(s) + 10.0).abs() < 1e-9);
        }
        assert!(p.levels_with_slope(p.slope + 1.0).is_empty());
    }
}
