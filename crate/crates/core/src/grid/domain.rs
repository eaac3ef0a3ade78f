use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Boundary profile `ξ(x′)` of an axis-aligned hypograph.
///
/// In one dimension `x′` is empty and every profile reduces to `level`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Profile {
    Flat { level: f64 },
    Affine { level: f64, slope: f64 },
    Sine { level: f64, amplitude: f64, frequency: f64 },
}

impl Profile {
    pub fn eval(&self, xp: &[f64]) -> f64 {
        let t = xp.first().copied();
        match (*self, t) {
            (Profile::Flat { level }, _) | (Profile::Affine { level, .. }, None) => level,
            (Profile::Sine { level, .. }, None) => level,
            (Profile::Affine { level, slope }, Some(t)) => level + slope * t,
            (Profile::Sine { level, amplitude, frequency }, Some(t)) => {
                level + amplitude * (frequency * t).sin()
            }
        }
    }

    fn params(&self) -> Vec<f64> {
        match *self {
            Profile::Flat { level } => vec![level],
            Profile::Affine { level, slope } => vec![level, slope],
            Profile::Sine { level, amplitude, frequency } => vec![level, amplitude, frequency],
        }
    }
}

/// A region of `ℝ^N`, `N ∈ {1, 2}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Domain {
    /// `{x : x_N < ξ(x′)}`.
    Hypograph { dim: usize, profile: Profile },
    /// Open box `∏ (lo_a, hi_a)`.
    Box { lo: Vec<f64>, hi: Vec<f64> },
    /// Open ball.
    Ball { center: Vec<f64>, radius: f64 },
    FullSpace { dim: usize },
}

impl Domain {
    /// The half-space `{x_N < level}`.
    pub fn half_space(dim: usize, level: f64) -> Self {
        Domain::Hypograph { dim, profile: Profile::Flat { level } }
    }

    pub fn dim(&self) -> usize {
        match self {
            Domain::Hypograph { dim, .. } | Domain::FullSpace { dim } => *dim,
            Domain::Box { lo, .. } => lo.len(),
            Domain::Ball { center, .. } => center.len(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let dim = self.dim();
        if dim == 0 || dim > 2 {
            return Err(Error::Domain(format!("domain dimension must be 1 or 2, got {dim}")));
        }
        match self {
            Domain::Hypograph { profile, .. } => {
                if profile.params().iter().any(|v| !v.is_finite()) {
                    return Err(Error::Domain("profile parameters must be finite".into()));
                }
            }
            Domain::Box { lo, hi } => {
                if hi.len() != lo.len() || lo.iter().zip(hi).any(|(a, b)| !(a < b)) {
                    return Err(Error::Domain("box needs lo < hi on every axis".into()));
                }
            }
            Domain::Ball { center, radius } => {
                if !(*radius > 0.0 && radius.is_finite()) || center.iter().any(|c| !c.is_finite()) {
                    return Err(Error::Domain(format!("ball radius must be positive, got {radius}")));
                }
            }
            Domain::FullSpace { .. } => {}
        }
        Ok(())
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            Domain::Hypograph { profile, .. } => {
                let n = x.len();
                x[n - 1] < profile.eval(&x[..n - 1])
            }
            Domain::Box { lo, hi } => x.iter().zip(lo.iter().zip(hi)).all(|(v, (a, b))| a < v && v < b),
            Domain::Ball { center, radius } => dist(x, center) < *radius,
            Domain::FullSpace { .. } => true,
        }
    }

    /// Profile height `ξ(x′)` for hypographs.
    pub fn profile_at(&self, xp: &[f64]) -> Option<f64> {
        match self {
            Domain::Hypograph { profile, .. } => Some(profile.eval(xp)),
            _ => None,
        }
    }

    /// Distance from `x` to the boundary of the domain (`∞` for the full space).
    pub fn boundary_distance(&self, x: &[f64]) -> f64 {
        match self {
            Domain::FullSpace { .. } => f64::INFINITY,
            Domain::Ball { center, radius } => (dist(x, center) - radius).abs(),
            Domain::Box { lo, hi } => {
                if self.contains(x) {
                    x.iter()
                        .zip(lo.iter().zip(hi))
                        .map(|(v, (a, b))| (v - a).min(b - v))
                        .fold(f64::INFINITY, f64::min)
                } else {
                    let d2: f64 = x
                        .iter()
                        .zip(lo.iter().zip(hi))
                        .map(|(v, (a, b))| {
                            let e = (a - v).max(0.0).max(v - b);
                            e * e
                        })
                        .sum();
                    d2.sqrt()
                }
            }
            Domain::Hypograph { profile, .. } => {
                let n = x.len();
                let gap = (profile.eval(&x[..n - 1]) - x[n - 1]).abs();
                match (*profile, n) {
                    (_, 1) | (Profile::Flat { .. }, _) => gap,
                    (Profile::Affine { slope, .. }, _) => gap / (1.0 + slope * slope).sqrt(),
                    (Profile::Sine { .. }, _) => {
                        // The nearest graph point lies within `gap` of x′.
                        let steps = 4000;
                        let mut best = gap;
                        for k in 0..=steps {
                            let t = x[0] - gap + 2.0 * gap * k as f64 / steps as f64;
                            let q = [t, profile.eval(&[t])];
                            best = best.min(dist(x, &q));
                        }
                        best
                    }
                }
            }
        }
    }
}

pub(crate) fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hypograph_membership_is_strict() {
        let d = Domain::half_space(1, 0.0);
        assert!(d.contains(&[-1e-12]));
        assert!(!d.contains(&[0.0]));
        let wavy = Domain::Hypograph {
            dim: 2,
            profile: Profile::Sine { level: 1.0, amplitude: 0.5, frequency: 2.0 },
        };
        assert!(wavy.contains(&[0.0, 0.99]));
        assert!(!wavy.contains(&[0.0, 1.0]));
    }

    #[test]
    fn boundary_distances() {
        let flat = Domain::half_space(2, 0.0);
        assert_eq!(flat.boundary_distance(&[3.0, -1.5]), 1.5);
        let tilted = Domain::Hypograph { dim: 2, profile: Profile::Affine { level: 0.0, slope: 1.0 } };
        assert!((tilted.boundary_distance(&[0.0, -1.0]) - 1.0 / 2f64.sqrt()).abs() < 1e-15);
        let b = Domain::Box { lo: vec![-1.0, -1.0], hi: vec![1.0, 1.0] };
        assert_eq!(b.boundary_distance(&[0.5, 0.0]), 0.5);
        assert_eq!(b.boundary_distance(&[2.0, 1.0]), 1.0);
        let ball = Domain::Ball { center: vec![0.0], radius: 2.0 };
        assert_eq!(ball.boundary_distance(&[0.5]), 1.5);
        let sine = Domain::Hypograph {
            dim: 2,
            profile: Profile::Sine { level: 0.0, amplitude: 0.0, frequency: 1.0 },
        };
        assert!((sine.boundary_distance(&[0.3, -0.7]) - 0.7).abs() < 1e-12);
    }

    #[test]
    fn validation_and_json() {
        assert!(Domain::Ball { center: vec![0.0], radius: 0.0 }.validate().is_err());
        assert!(Domain::Box { lo: vec![1.0], hi: vec![0.0] }.validate().is_err());
        let d: Domain = serde_json::from_str(
            r#"{"kind":"hypograph","dim":1,"profile":{"kind":"flat","level":0}}"#,
        )
        .unwrap();
        assert_eq!(d, Domain::half_space(1, 0.0));
        assert!(serde_json::from_str::<Domain>(r#"{"kind":"torus","dim":1}"#).is_err());
    }
}
