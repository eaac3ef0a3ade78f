use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::conjugate::{conjugate_frozen, conjugate_relaxation};
use super::{Frozen, IndexBounds, NFunction};
use crate::error::{Error, Result};

/// Where and how densely the structural checks sample `G`.
///
/// `t` is log-spaced over `[t_min, t_max]`. Spatial pairs come from a
/// `lattice × lattice` product of points spread over `[box_lo, box_hi]`
/// (along the box diagonal in 2-D), plus `random_pairs` seeded uniform pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplingSpec {
    pub t_min: f64,
    pub t_max: f64,
    pub t_points: usize,
    pub lattice: usize,
    pub box_lo: f64,
    pub box_hi: f64,
    pub random_pairs: usize,
    pub seed: u64,
}

impl Default for SamplingSpec {
    fn default() -> Self {
        SamplingSpec {
            t_min: 1e-6,
            t_max: 1e6,
            t_points: 64,
            lattice: 8,
            box_lo: -2.0,
            box_hi: 2.0,
            random_pairs: 0,
            seed: 0,
        }
    }
}

impl SamplingSpec {
    /// The same ranges with the `t` and lattice spacings halved, so the
    /// refined samples contain the current ones.
    pub fn refined(&self) -> Self {
        SamplingSpec {
            t_points: self.t_points * 2 - 1,
            lattice: (self.lattice * 2).max(2) - 1,
            random_pairs: self.random_pairs * 2,
            ..self.clone()
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = self.t_min > 0.0
            && self.t_max > self.t_min
            && self.t_max.is_finite()
            && self.t_points >= 2
            && self.lattice >= 1
            && self.box_lo.is_finite()
            && self.box_hi.is_finite()
            && self.box_lo <= self.box_hi;
        if ok {
            Ok(())
        } else {
            Err(Error::Parameter(format!("bad sampling spec {self:?}")))
        }
    }

    pub fn t_values(&self) -> Vec<f64> {
        let (a, b) = (self.t_min.ln(), self.t_max.ln());
        let m = (self.t_points - 1) as f64;
        (0..self.t_points).map(|k| (a + (b - a) * k as f64 / m).exp()).collect()
    }

    pub fn pairs(&self, dim: usize) -> Vec<(Vec<f64>, Vec<f64>)> {
        let n = self.lattice;
        let coord = |i: usize| {
            if n == 1 {
                0.5 * (self.box_lo + self.box_hi)
            } else {
                self.box_lo + (self.box_hi - self.box_lo) * i as f64 / (n - 1) as f64
            }
        };
        let mut out = Vec::with_capacity(n * n + self.random_pairs);
        for i in 0..n {
            for j in 0..n {
                out.push((vec![coord(i); dim], vec![coord(j); dim]));
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        for _ in 0..self.random_pairs {
            let mut draw = || -> Vec<f64> {
                (0..dim).map(|_| rng.gen_range(self.box_lo..=self.box_hi)).collect()
            };
            let x = draw();
            let y = draw();
            out.push((x, y));
        }
        out
    }

    /// Number of `(x, y, t)` samples the checks visit.
    pub fn sample_count(&self) -> usize {
        (self.lattice * self.lattice + self.random_pairs) * self.t_points
    }
}

/// A sampled point `(x, y, t)`; `aux` holds the scaling factor δ or the
/// conjugate argument τ for checks that need one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplePoint {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub t: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub aux: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub id: String,
    pub point: SamplePoint,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NFunctionReport {
    pub g_minus_est: f64,
    pub g_plus_est: f64,
    #[serde(rename = "delta2_K")]
    pub delta2_k: f64,
    #[serde(rename = "bf_C1")]
    pub bf_c1: f64,
    #[serde(rename = "bf_C2")]
    pub bf_c2: f64,
    pub violations: Vec<Violation>,
}

impl NFunctionReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

const SCALING_DELTAS: [f64; 6] = [0.1, 0.5, 0.9, 1.1, 2.0, 10.0];

/// Min and max of `g(x,y,t)·t / G(x,y,t)` over the sampling spec.
pub fn estimate_g_bounds(nf: &dyn NFunction, sample: &SamplingSpec) -> Result<(f64, f64)> {
    sample.validate()?;
    let ts = sample.t_values();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for (x, y) in sample.pairs(nf.dim()) {
        let fr = nf.freeze(&x, &y);
        for &t in &ts {
            let big = nf.eval_frozen(fr, t);
            if !(big > 0.0) {
                return Err(Error::InvalidNFunction(format!(
                    "G vanishes at t = {t} for x = {x:?}, y = {y:?}"
                )));
            }
            let r = nf.deriv_frozen(fr, t) * t / big;
            lo = lo.min(r);
            hi = hi.max(r);
        }
    }
    Ok((lo, hi))
}

struct PairOutcome {
    ratio_lo: f64,
    ratio_hi: f64,
    delta2: f64,
    at_one: f64,
    violations: Vec<Violation>,
}

/// Relative excess of `lhs` over `rhs`; positive means `lhs > rhs`.
fn excess(lhs: f64, rhs: f64) -> f64 {
    let scale = lhs.abs().max(rhs.abs()).max(f64::MIN_POSITIVE);
    (lhs - rhs) / scale
}

fn check_pair(
    nf: &dyn NFunction,
    bounds: IndexBounds,
    x: &[f64],
    y: &[f64],
    ts: &[f64],
    tol: f64,
) -> PairOutcome {
    let fr: Frozen = nf.freeze(x, y);
    let mut out = PairOutcome {
        ratio_lo: f64::INFINITY,
        ratio_hi: f64::NEG_INFINITY,
        delta2: 1.0,
        at_one: nf.eval_frozen(fr, 1.0),
        violations: Vec::new(),
    };
    let point = |t: f64, aux: Option<f64>| SamplePoint { x: x.to_vec(), y: y.to_vec(), t, aux };
    let flag = |out: &mut PairOutcome, id: &str, t: f64, aux: Option<f64>, residual: f64| {
        if residual > tol || residual.is_nan() {
            out.violations.push(Violation { id: id.into(), point: point(t, aux), residual });
        }
    };

    let zero = nf.eval_frozen(fr, 0.0);
    flag(&mut out, "zero_at_origin", 0.0, None, zero.abs());
    if !(out.at_one.is_finite() && out.at_one > 0.0) {
        flag(&mut out, "fractional_boundedness", 1.0, None, f64::INFINITY);
    }

    let values: Vec<f64> = ts.iter().map(|&t| nf.eval_frozen(fr, t)).collect();
    for (k, (&t, &big)) in ts.iter().zip(&values).enumerate() {
        if !(big > 0.0) {
            flag(&mut out, "positive", t, None, f64::INFINITY);
            continue;
        }
        let r = nf.deriv_frozen(fr, t) * t / big;
        out.ratio_lo = out.ratio_lo.min(r);
        out.ratio_hi = out.ratio_hi.max(r);
        flag(&mut out, "index_lower", t, None, excess(bounds.lower, r));
        flag(&mut out, "index_upper", t, None, excess(r, bounds.upper));

        for &d in &SCALING_DELTAS {
            let scaled = nf.eval_frozen(fr, d * t);
            let (small, large) = if d > 1.0 {
                (d.powf(bounds.lower), d.powf(bounds.upper))
            } else {
                (d.powf(bounds.upper), d.powf(bounds.lower))
            };
            let (lo_id, hi_id) = if d > 1.0 {
                ("scaling_lower_delta_gt_1", "scaling_upper_delta_gt_1")
            } else {
                ("scaling_lower_delta_lt_1", "scaling_upper_delta_lt_1")
            };
            flag(&mut out, lo_id, t, Some(d), excess(small * big, scaled));
            flag(&mut out, hi_id, t, Some(d), excess(scaled, large * big));
        }

        let k2 = nf.eval_frozen(fr, 2.0 * t) / big;
        out.delta2 = out.delta2.max(k2);
        flag(&mut out, "delta2", t, None, excess(k2, 2f64.powf(bounds.upper)));

        if k + 1 < ts.len() {
            let next = values[k + 1];
            flag(&mut out, "monotone", t, None, excess(big, next));
            if k + 2 < ts.len() {
                let s0 = (next - big) / (ts[k + 1] - t);
                let s1 = (values[k + 2] - next) / (ts[k + 2] - ts[k + 1]);
                flag(&mut out, "convex", t, None, excess(s0, s1));
            }
        }
    }

    // Young's inequality στ ≤ G(σ) + G̃(τ) for σ, τ over the whole t grid, with
    // τ = g(t') so that the equality case σ = t' is among the samples.
    let taus: Vec<f64> = ts.iter().map(|&t| nf.deriv_frozen(fr, t)).collect();
    for &tau in &taus {
        let conj = conjugate_frozen(nf, fr, tau);
        let eta = conjugate_relaxation(conj);
        for (&sigma, &big) in ts.iter().zip(&values) {
            let rhs = big + conj + eta;
            flag(&mut out, "young", sigma, Some(tau), excess(sigma * tau, rhs));
        }
    }
    out
}

/// Runs every sampled structural check and collects violations above `tol`.
///
/// Scaling, Δ2 and index checks use the family's declared bounds. The report
/// also carries the sampled estimates of those bounds, of `K` and of the range
/// of `G_{x,y}(1)`.
pub fn check_structure(nf: &dyn NFunction, sample: &SamplingSpec, tol: f64) -> NFunctionReport {
    let bounds = nf.index_bounds();
    let mut violations = Vec::new();
    if !(bounds.lower > 1.0) {
        violations.push(Violation {
            id: "g_minus_gt_one".into(),
            point: SamplePoint { x: vec![], y: vec![], t: 0.0, aux: Some(bounds.lower) },
            residual: 1.0 - bounds.lower,
        });
    }
    if !(bounds.upper >= bounds.lower && bounds.upper.is_finite()) {
        violations.push(Violation {
            id: "g_plus_finite".into(),
            point: SamplePoint { x: vec![], y: vec![], t: 0.0, aux: Some(bounds.upper) },
            residual: f64::INFINITY,
        });
    }
    if sample.validate().is_err() {
        return NFunctionReport {
            g_minus_est: f64::NAN,
            g_plus_est: f64::NAN,
            delta2_k: 1.0,
            bf_c1: f64::NAN,
            bf_c2: f64::NAN,
            violations,
        };
    }

    let ts = sample.t_values();
    let pairs = sample.pairs(nf.dim());
    let outcomes: Vec<PairOutcome> = pairs
        .par_iter()
        .map(|(x, y)| check_pair(nf, bounds, x, y, &ts, tol))
        .collect();

    let mut report = NFunctionReport {
        g_minus_est: f64::INFINITY,
        g_plus_est: f64::NEG_INFINITY,
        delta2_k: 1.0,
        bf_c1: f64::INFINITY,
        bf_c2: f64::NEG_INFINITY,
        violations,
    };
    for o in outcomes {
        report.g_minus_est = report.g_minus_est.min(o.ratio_lo);
        report.g_plus_est = report.g_plus_est.max(o.ratio_hi);
        report.delta2_k = report.delta2_k.max(o.delta2);
        report.bf_c1 = report.bf_c1.min(o.at_one);
        report.bf_c2 = report.bf_c2.max(o.at_one);
        report.violations.extend(o.violations);
    }
    if report.g_minus_est <= 1.0 {
        report.violations.push(Violation {
            id: "g_minus_gt_one".into(),
            point: SamplePoint { x: vec![], y: vec![], t: 0.0, aux: Some(report.g_minus_est) },
            residual: 1.0 - report.g_minus_est,
        });
    }
    report
}
