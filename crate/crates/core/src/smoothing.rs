//! Translation, cut-off and Friedrichs mollification on grid functions, with
//! the support arithmetic used to keep approximants inside a hypograph.

use std::collections::BTreeMap;
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Domain, GridFunction, GridSpec, Point, Region};

/// Parameters of the translate, cut-off, mollify chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoothingParams {
    pub delta: f64,
    pub j: u32,
    pub epsilon: f64,
    pub sigma: f64,
}

/// `(T_h u)(x) = u(x + h)` when `x` and `x + h` lie in `dom`, else 0.
///
/// Every component of `h` must be a whole number of grid steps. A shifted node
/// that falls off the grid reads 0 when `u` vanishes outside the box and is
/// an error otherwise.
pub fn translate(gf: &GridFunction, h: &[f64], dom: &Domain) -> Result<GridFunction> {
    let spec = gf.spec();
    let dim = spec.dim();
    if h.len() != dim || dom.dim() != dim {
        return Err(Error::Domain(format!(
            "shift has dimension {}, domain {}, grid {dim}",
            h.len(),
            dom.dim()
        )));
    }
    let mut steps = [0i64; 2];
    for k in 0..dim {
        steps[k] = spec
            .steps(h[k])
            .ok_or_else(|| Error::Alignment { shift: h.to_vec(), spacing: spec.h() })?;
    }
    let u = gf.values();
    let values = (0..spec.len())
        .map(|i| {
            let x = spec.point(i);
            let mut xh = [0.0; 2];
            for k in 0..dim {
                xh[k] = x[k] + h[k];
            }
            if !(dom.contains(&x[..dim]) && dom.contains(&xh[..dim])) {
                return Ok(0.0);
            }
            match spec.offset(spec.unravel(i), steps) {
                Some(j) => Ok(u[j]),
                None if gf.zero_outside() => Ok(0.0),
                None => Err(Error::Precondition(format!(
                    "x + h = {:?} leaves the box and u is not known to vanish there",
                    &xh[..dim]
                ))),
            }
        })
        .collect::<Result<Vec<f64>>>()?;
    GridFunction::new(spec.clone(), values, gf.zero_outside())
}

fn smooth_step_part(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else {
        (-1.0 / t).exp()
    }
}

/// `ψ(t)`: 1 for `t ≤ 0`, 0 for `t ≥ 1`, `C^∞` and decreasing in between.
pub fn cutoff_profile(t: f64) -> f64 {
    if t <= 0.0 {
        1.0
    } else if t >= 1.0 {
        0.0
    } else {
        let a = smooth_step_part(1.0 - t);
        a / (a + smooth_step_part(t))
    }
}

/// `τ_j(x) = ψ(|x| − j)` on the grid.
pub fn cutoff(j: u32, spec: &GridSpec) -> Result<GridFunction> {
    if j == 0 {
        return Err(Error::Parameter("cut-off index must be positive".into()));
    }
    let r = j as f64 + 1.0;
    if !spec.contains_ball(r) {
        return Err(Error::Domain(format!("box does not contain the ball of radius {r}")));
    }
    GridFunction::from_fn(spec.clone(), true, |x| {
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        cutoff_profile(norm - j as f64)
    })
}

/// `τ_j u`.
pub fn apply_cutoff(u: &GridFunction, j: u32) -> Result<GridFunction> {
    let tau = cutoff(j, u.spec())?;
    let mut out = u.mul(&tau)?;
    if !u.zero_outside() {
        out = GridFunction::new(out.spec().clone(), out.into_values(), true)?;
    }
    Ok(out)
}

/// Largest forward-difference slope of `f` along any axis.
pub fn cutoff_slope(f: &GridFunction) -> f64 {
    let spec = f.spec();
    let v = f.values();
    let mut best: f64 = 0.0;
    for i in 0..spec.len() {
        let m = spec.unravel(i);
        for a in 0..spec.dim() {
            let mut o = [0i64; 2];
            o[a] = 1;
            if let Some(j) = spec.offset(m, o) {
                best = best.max((v[j] - v[i]).abs() / spec.h());
            }
        }
    }
    best
}

/// Friedrichs kernel `J(x) = exp(−1/(1 − |x|²))` inside the unit ball.
pub fn friedrichs(r2: f64) -> f64 {
    if r2 < 1.0 {
        (-1.0 / (1.0 - r2)).exp()
    } else {
        0.0
    }
}

/// Discrete `J_ε` weights on the offsets `|m|h < ε`, ascending, summing to 1.
pub fn mollifier_weights(spec: &GridSpec, epsilon: f64) -> Vec<([i64; 2], f64)> {
    let h = spec.h();
    let k = (epsilon / h).ceil() as i64;
    let range1 = if spec.dim() == 2 { -k..=k } else { 0..=0 };
    let mut out = Vec::new();
    for a in -k..=k {
        for b in range1.clone() {
            let r2 = ((a * a + b * b) as f64) * h * h / (epsilon * epsilon);
            let w = friedrichs(r2);
            if w > 0.0 {
                out.push(([a, b], w));
            }
        }
    }
    let total: f64 = out.iter().map(|(_, w)| w).sum();
    for (_, w) in &mut out {
        *w /= total;
    }
    out
}

/// `u * J_ε` at the nodes of `u`.
pub fn mollify(gf: &GridFunction, epsilon: f64) -> Result<GridFunction> {
    let spec = gf.spec();
    let h = spec.h();
    if !(epsilon.is_finite() && epsilon >= 2.0 * h * (1.0 - 1e-12)) {
        return Err(Error::Resolution { epsilon, spacing: h });
    }
    if !gf.zero_outside() {
        return Err(Error::Precondition("mollification needs data vanishing outside the box".into()));
    }
    let weights = mollifier_weights(spec, epsilon);
    let u = gf.values();
    let values: Vec<f64> = (0..spec.len())
        .into_par_iter()
        .map(|i| {
            let m = spec.unravel(i);
            let mut acc = 0.0;
            for (o, w) in &weights {
                if let Some(j) = spec.offset(m, *o) {
                    acc += w * u[j];
                }
            }
            acc
        })
        .collect();
    GridFunction::new(spec.clone(), values, true).map_err(|_| {
        Error::Precondition(format!("mollification with ε = {epsilon} reaches the box boundary"))
    })
}

/// Minkowski inflation of `region` by `r`.
pub fn inflate(region: &Region, r: f64) -> Result<Region> {
    region.inflated(r)
}

/// Points of `B̄_R` outside the hypograph that any point of a region inside it
/// must pass to reach the complement: the graph of the profile inside the
/// ball and the complement part of the sphere, sampled at `step`.
fn exit_points(dom: &Domain, radius: f64, step: f64) -> Vec<Point> {
    let dim = dom.dim();
    let xi = |xp: &[f64]| dom.profile_at(xp).expect("hypograph");
    let mut out = Vec::new();
    if dim == 1 {
        let g = xi(&[]);
        if g.abs() <= radius {
            out.push([g, 0.0]);
        }
        for e in [-radius, radius] {
            if e >= g {
                out.push([e, 0.0]);
            }
        }
        return out;
    }
    let m = (2.0 * radius / step).ceil() as usize;
    for k in 0..=m {
        let t = -radius + 2.0 * radius * k as f64 / m as f64;
        let g = xi(&[t]);
        if t * t + g * g <= radius * radius {
            out.push([t, g]);
        }
    }
    let arcs = (2.0 * std::f64::consts::PI * radius / step).ceil() as usize;
    for k in 0..arcs {
        let th = 2.0 * std::f64::consts::PI * k as f64 / arcs as f64;
        let p = [radius * th.cos(), radius * th.sin()];
        if p[1] >= xi(&p[..1]) {
            out.push(p);
        }
    }
    out
}

/// Largest `a ≤ R` with `B_R ∩ (region + B_a) ⊆ dom` for a hypograph `dom`.
///
/// Computed as the distance from the region to the points of `B̄_R` on or
/// above the graph, which are reached first through the graph itself or
/// through the sphere; both are sampled at half the grid spacing.
pub fn hypograph_margin(region: &Region, radius: f64, dom: &Domain) -> Result<f64> {
    if !matches!(dom, Domain::Hypograph { .. }) {
        return Err(Error::Precondition("the margin is defined for hypographs only".into()));
    }
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::Parameter(format!("radius must be positive, got {radius}")));
    }
    let spec = region.spec();
    if dom.dim() != spec.dim() {
        return Err(Error::Domain("region and domain dimensions differ".into()));
    }
    if region.is_empty() {
        return Ok(radius);
    }
    let tol = 1e-9 * spec.h();
    let inside = region.all_probes(|p| {
        let n = p.len();
        p[n - 1] <= dom.profile_at(&p[..n - 1]).expect("hypograph") + tol
    });
    if !inside {
        return Err(Error::Precondition("region is not contained in the closure of the domain".into()));
    }
    let points = exit_points(dom, radius, 0.5 * spec.h());
    Ok(region.min_distance(&points).min(radius))
}

/// An approximation operator `u ↦ op(u; param)` indexed by a scalar parameter.
pub trait ApproximationOperator: Send + Sync + fmt::Debug {
    fn name(&self) -> &'static str;

    /// Name of the swept parameter, used as a report label.
    fn parameter(&self) -> &'static str;

    fn apply(&self, u: &GridFunction, param: f64, dom: &Domain) -> Result<GridFunction>;
}

/// `u_δ = T_{δ e_N} u`, the shift into a hypograph; the domain restriction is
/// `ℝ^N`.
#[derive(Debug, Clone, Copy, Default)]
pub struct TranslateOp;

impl ApproximationOperator for TranslateOp {
    fn name(&self) -> &'static str {
        "translate"
    }

    fn parameter(&self) -> &'static str {
        "delta"
    }

    fn apply(&self, u: &GridFunction, delta: f64, _dom: &Domain) -> Result<GridFunction> {
        let dim = u.dim();
        let mut h = vec![0.0; dim];
        h[dim - 1] = delta;
        translate(u, &h, &Domain::FullSpace { dim })
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct CutoffOp;

impl ApproximationOperator for CutoffOp {
    fn name(&self) -> &'static str {
        "cutoff"
    }

    fn parameter(&self) -> &'static str {
        "j"
    }

    fn apply(&self, u: &GridFunction, j: f64, _dom: &Domain) -> Result<GridFunction> {
        if !(j >= 1.0 && j.fract() == 0.0 && j <= u32::MAX as f64) {
            return Err(Error::Parameter(format!("cut-off index must be a positive integer, got {j}")));
        }
        apply_cutoff(u, j as u32)
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct MollifyOp;

impl ApproximationOperator for MollifyOp {
    fn name(&self) -> &'static str {
        "mollify"
    }

    fn parameter(&self) -> &'static str {
        "epsilon"
    }

    fn apply(&self, u: &GridFunction, epsilon: f64, _dom: &Domain) -> Result<GridFunction> {
        mollify(u, epsilon)
    }
}

/// Approximation operators keyed by name.
#[derive(Debug)]
pub struct OperatorRegistry {
    ops: BTreeMap<String, Box<dyn ApproximationOperator>>,
}

impl Default for OperatorRegistry {
    fn default() -> Self {
        Self::with_builtin()
    }
}

impl OperatorRegistry {
    pub fn empty() -> Self {
        OperatorRegistry { ops: BTreeMap::new() }
    }

    pub fn with_builtin() -> Self {
        let mut reg = Self::empty();
        reg.register(Box::new(TranslateOp));
        reg.register(Box::new(CutoffOp));
        reg.register(Box::new(MollifyOp));
        reg
    }

    pub fn register(&mut self, op: Box<dyn ApproximationOperator>) {
        self.ops.insert(op.name().to_string(), op);
    }

    pub fn names(&self) -> Vec<&str> {
        self.ops.keys().map(String::as_str).collect()
    }

    pub fn get(&self, name: &str) -> Result<&dyn ApproximationOperator> {
        self.ops.get(name).map(|b| b.as_ref()).ok_or_else(|| Error::Config {
            path: "kind".into(),
            reason: format!("unknown operator `{name}`, known: {}", self.names().join(", ")),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{sample, support, Tent};

    fn tent(center: f64, n: usize) -> GridFunction {
        let spec = GridSpec::interval(-5.0, 5.0, n).unwrap();
        sample(&Tent::new(vec![center], 1.0, 1.0).unwrap(), &spec).unwrap()
    }

    #[test]
    fn zero_shift_is_identity() {
        let u = tent(-2.0, 41);
        assert_eq!(translate(&u, &[0.0], &Domain::FullSpace { dim: 1 }).unwrap(), u);
    }

    #[test]
    fn shift_moves_tent_into_half_line() {
        let u = tent(-2.0, 41);
        let v = translate(&u, &[0.5], &Domain::FullSpace { dim: 1 }).unwrap();
        assert_eq!(support(&v, 0.0).intervals(), vec![(-3.5, -1.5)]);
        assert!(matches!(
            translate(&u, &[0.3], &Domain::FullSpace { dim: 1 }),
            Err(Error::Alignment { .. })
        ));
    }

    #[test]
    fn translation_outside_domain_reads_zero() {
        let u = tent(-0.5, 41);
        let dom = Domain::half_space(1, 0.0);
        let v = translate(&u, &[-0.5], &dom).unwrap();
        // x = -0.25 lies in the half line, x + h = -0.75 too; x = 0.25 does not
        let at = |x: f64| v.values()[((x + 5.0) / 0.25).round() as usize];
        assert_eq!(at(-0.25), u.interpolate(&[-0.75]));
        assert_eq!(at(0.25), 0.0);
    }

    #[test]
    fn cutoff_levels_and_uniform_slope() {
        let spec = GridSpec::interval(-8.0, 8.0, 3201).unwrap();
        let slopes: Vec<f64> = (1..=6)
            .map(|j| {
                let t = cutoff(j, &spec).unwrap();
                for (i, &v) in t.values().iter().enumerate() {
                    let x = spec.point(i)[0].abs();
                    if x <= j as f64 {
                        assert_eq!(v, 1.0);
                    }
                    if x >= j as f64 + 1.0 {
                        assert_eq!(v, 0.0);
                    }
                }
                cutoff_slope(&t)
            })
            .collect();
        let (lo, hi) = slopes.iter().fold((f64::MAX, 0.0f64), |(a, b), &s| (a.min(s), b.max(s)));
        assert!(hi / lo - 1.0 < 0.01, "{slopes:?}");
        assert!(cutoff(7, &spec).is_ok());
        assert!(cutoff(8, &spec).is_err());
    }

    #[test]
    fn mollifier_keeps_constants_and_bounds_support() {
        let spec = GridSpec::interval(-5.0, 5.0, 401).unwrap();
        let c = GridFunction::from_fn(spec.clone(), true, |x| if x[0].abs() < 3.0 { 2.0 } else { 0.0 }).unwrap();
        let m = mollify(&c, 0.5).unwrap();
        for (i, v) in m.values().iter().enumerate() {
            if spec.point(i)[0].abs() < 2.4 {
                assert!((v - 2.0).abs() < 1e-14);
            }
        }
        let u = tent(-2.0, 401);
        let mu = mollify(&u, 0.5).unwrap();
        let sup = support(&mu, 0.0);
        let bound = inflate(&support(&u, 0.0), 0.5).unwrap();
        assert!(sup.subset_of(&bound).unwrap());
        assert!(sup.intervals()[0].0 >= -3.5 - 1e-12 && sup.intervals()[0].1 <= -0.5 + 1e-12);
        assert!(matches!(mollify(&u, 0.04), Err(Error::Resolution { .. })));
    }

    #[test]
    fn mollifier_matches_direct_sum() {
        let u = tent(-2.0, 401);
        let eps = 0.25;
        let m = mollify(&u, eps).unwrap();
        let h = u.spec().h();
        let k = (eps / h).ceil() as i64;
        let raw: Vec<f64> = (-k..=k).map(|a| friedrichs(((a * a) as f64) * h * h / (eps * eps))).collect();
        let total: f64 = raw.iter().filter(|w| **w > 0.0).sum();
        for i in 0..u.values().len() {
            let mut acc = 0.0;
            for (t, a) in (-k..=k).enumerate() {
                if raw[t] == 0.0 {
                    continue;
                }
                let j = i as i64 + a;
                if j >= 0 && (j as usize) < u.values().len() {
                    acc += (raw[t] / total) * u.values()[j as usize];
                }
            }
            assert_eq!(acc.to_bits(), m.values()[i].to_bits());
        }
    }

    #[test]
    fn margin_examples() {
        let spec = GridSpec::interval(-5.0, 5.0, 41).unwrap();
        let dom = Domain::half_space(1, 0.0);
        let shifted = translate(&tent(-2.0, 41), &[0.5], &Domain::FullSpace { dim: 1 }).unwrap();
        let a = hypograph_margin(&support(&shifted, 0.0), 10.0, &dom).unwrap();
        assert!((a - 1.5).abs() <= spec.h());
        let touching = tent(-1.0, 41);
        assert_eq!(hypograph_margin(&support(&touching, 0.0), 10.0, &dom).unwrap(), 0.0);
        assert_eq!(hypograph_margin(&Region::empty(spec), 10.0, &dom).unwrap(), 10.0);
        assert!(hypograph_margin(&support(&tent(0.5, 41), 0.0), 10.0, &dom).is_err());
    }

    #[test]
    fn margin_below_a_sloped_graph() {
        let spec = GridSpec::cube(-4.0, 4.0, 81, 2).unwrap();
        let dom = Domain::Hypograph { dim: 2, profile: crate::grid::Profile::Affine { level: 1.0, slope: 1.0 } };
        let u = GridFunction::from_fn(spec.clone(), true, |x| {
            let r2 = x[0] * x[0] + (x[1] + 1.0) * (x[1] + 1.0);
            if r2 < 0.25 { 1.0 } else { 0.0 }
        })
        .unwrap();
        let reg = support(&u, 0.0);
        let a = hypograph_margin(&reg, 3.5, &dom).unwrap();
        // the centre of the disc is this far from the line y = x + 1
        let centre_gap = (0.0 - (-1.0) + 1.0) / 2f64.sqrt();
        assert!(a > 0.0 && a < centre_gap);
    }

    #[test]
    fn registry_dispatches_by_name() {
        let reg = OperatorRegistry::with_builtin();
        assert_eq!(reg.names(), vec!["cutoff", "mollify", "translate"]);
        let u = tent(-2.0, 81);
        let dom = Domain::half_space(1, 0.0);
        let v = reg.get("translate").unwrap().apply(&u, 0.5, &dom).unwrap();
        assert_eq!(support(&v, 0.0).intervals(), vec![(-3.5, -1.5)]);
        assert!(reg.get("cutoff").unwrap().apply(&u, 1.5, &dom).is_err());
        assert!(reg.get("warp").is_err());
    }
}
