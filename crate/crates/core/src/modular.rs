//! Scalar and fractional Musielak modulars on grid data.
//!
//! The scalar modular `J(u) = ∫ Ĝ_x(|u(x)|) dx` uses node (trapezoid) weights.
//! The fractional modular
//! `J_{s,G}(u) = ∬ G_{x,y}(|u(x) − u(y)| / |x − y|^s) |x − y|^{−N} dx dy`
//! is split into three parts:
//!
//! * off-diagonal: the node double sum over `i ≠ j`, one row per node, rows
//!   reduced with [`pairwise_sum`];
//! * diagonal: each node's own cell paired with itself, refined dyadically with
//!   the innermost shell dropped, using the multilinear interpolant of `u`;
//! * exterior: for data vanishing outside the box, the pairs with one point
//!   outside the box, integrated analytically along rays.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GridFunction, GridSpec, Point};
use crate::nfunction::{Frozen, NFunction, Radial};
use crate::quadrature::{decaying_integral, gauss_legendre, pairwise_sum};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Level {
    pub n: usize,
    pub h: f64,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FractionalParts {
    pub off_diagonal: f64,
    pub diagonal: f64,
    pub exterior: f64,
}

impl FractionalParts {
    pub fn total(&self) -> f64 {
        self.off_diagonal + self.diagonal + self.exterior
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModularResult {
    pub value: f64,
    pub refinement_levels: Vec<Level>,
    pub error_estimate: f64,
    pub diverged: bool,
    /// Breakdown of the finest level of a fractional modular.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parts: Option<FractionalParts>,
}

impl ModularResult {
    /// Builds the result from a ladder of values at increasing resolution.
    pub fn from_levels(levels: Vec<Level>) -> Self {
        let diverged = detect_divergence(&levels.iter().map(|l| l.value).collect::<Vec<_>>());
        let finite: Vec<f64> = levels.iter().map(|l| l.value).filter(|v| v.is_finite()).collect();
        let value = finite.last().copied().unwrap_or(f64::INFINITY);
        let error_estimate = match finite.len() {
            0 => f64::INFINITY,
            1 => 0.0,
            k => (finite[k - 1] - finite[k - 2]).abs(),
        };
        ModularResult { value, refinement_levels: levels, error_estimate, diverged, parts: None }
    }

    /// Whether the ladder settles: successive differences shrink and the last
    /// one is at most `rel` of the value.
    pub fn is_cauchy(&self, rel: f64) -> bool {
        if self.diverged {
            return false;
        }
        let v: Vec<f64> = self.refinement_levels.iter().map(|l| l.value).collect();
        if v.iter().any(|x| !x.is_finite()) {
            return false;
        }
        let d: Vec<f64> = v.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
        let shrinking = d.windows(2).all(|w| w[1] <= w[0] * 1.05 + 1e-15);
        shrinking && self.error_estimate <= rel * self.value.abs() + 1e-14
    }
}

/// Growth-ratio threshold for the geometric divergence rule.
pub const GROWTH_FACTOR: f64 = 1.5;

/// Flags a refinement ladder as divergent.
///
/// Two rules, either of which suffices:
/// * geometric: three successive values each grow by at least
///   [`GROWTH_FACTOR`];
/// * logarithmic: the last four values increase with increments that do not
///   contract (each at least 0.9 of the previous) and the last increment is
///   not negligible (above `1e-3` of the value).
///
/// A convergent ladder with error `O(h^α)` has increments contracting by
/// `2^{−α}`, below 0.9 for `α > 0.152`. A non-finite value also counts as
/// divergence.
pub fn detect_divergence(values: &[f64]) -> bool {
    if values.iter().any(|v| !v.is_finite()) {
        return true;
    }
    let geometric = values
        .windows(3)
        .any(|w| w[0] > 0.0 && w[1] >= GROWTH_FACTOR * w[0] && w[2] >= GROWTH_FACTOR * w[1]);
    let logarithmic = values.len() >= 4 && {
        let tail = &values[values.len() - 4..];
        let d = [tail[1] - tail[0], tail[2] - tail[1], tail[3] - tail[2]];
        d.iter().all(|&x| x > 0.0)
            && d[1] >= 0.9 * d[0]
            && d[2] >= 0.9 * d[1]
            && d[2] >= 1e-3 * tail[3].abs()
    };
    geometric || logarithmic
}

fn check_dims(nf: &dyn NFunction, spec: &GridSpec) -> Result<()> {
    if nf.dim() != spec.dim() {
        return Err(Error::Domain(format!(
            "N-function is {}-dimensional, grid is {}-dimensional",
            nf.dim(),
            spec.dim()
        )));
    }
    Ok(())
}

fn check_s(s: f64) -> Result<()> {
    if s > 0.0 && s < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("fractional order must lie in (0, 1), got {s}")))
    }
}

fn check_levels(levels: usize) -> Result<()> {
    if levels == 0 {
        Err(Error::Parameter("need at least one refinement level".into()))
    } else {
        Ok(())
    }
}

/// `gf` restricted to grids with `2^{levels−1}, …, 2, 1` times its spacing.
pub fn coarsening_ladder(gf: &GridFunction, levels: usize) -> Result<Vec<GridFunction>> {
    check_levels(levels)?;
    (0..levels)
        .rev()
        .map(|k| if k == 0 { Ok(gf.clone()) } else { gf.coarsen(1 << k) })
        .collect()
}

/// `∫ Ĝ_x(|u(x)|) dx` over the box at the resolution of `gf`.
pub fn scalar_value(nf: &dyn NFunction, gf: &GridFunction) -> Result<f64> {
    check_dims(nf, gf.spec())?;
    let spec = gf.spec();
    let dim = spec.dim();
    let u = gf.values();
    let terms: Vec<f64> = (0..spec.len())
        .into_par_iter()
        .map(|i| {
            if u[i] == 0.0 {
                return 0.0;
            }
            let x = &spec.point(i)[..dim];
            spec.weight(i) * nf.value(x, x, u[i].abs())
        })
        .collect();
    Ok(pairwise_sum(&terms))
}

/// Scalar modular of each function of a refinement ladder.
pub fn modular_scalar_ladder(nf: &dyn NFunction, ladder: &[GridFunction]) -> Result<ModularResult> {
    check_levels(ladder.len())?;
    let levels = ladder
        .iter()
        .map(|g| Ok(Level { n: g.spec().n(), h: g.spec().h(), value: scalar_value(nf, g)? }))
        .collect::<Result<Vec<_>>>()?;
    Ok(ModularResult::from_levels(levels))
}

/// Scalar modular `J_Ĝ(u)` with `levels` resolutions ending at that of `gf`.
///
/// Without `zero_outside` the integral runs over the box only.
pub fn modular_scalar(nf: &dyn NFunction, gf: &GridFunction, levels: usize) -> Result<ModularResult> {
    modular_scalar_ladder(nf, &coarsening_ladder(gf, levels)?)
}

/// Tuning of the fractional quadrature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FractionalOptions {
    /// Dyadic subdivision depth of each diagonal cell.
    pub diagonal_levels: usize,
    /// Include pairs with one point outside the box (for `zero_outside` data).
    pub exterior: bool,
    /// Ray directions for the exterior part in two dimensions.
    pub exterior_angles: usize,
}

impl Default for FractionalOptions {
    fn default() -> Self {
        FractionalOptions { diagonal_levels: 4, exterior: true, exterior_angles: 64 }
    }
}

/// Per-offset kernel data for translation-invariant N-functions.
struct OffsetTable {
    width: usize,
    ks: Vec<f64>,
    kn: Vec<f64>,
    frozen: Vec<Frozen>,
}

impl OffsetTable {
    fn new(nf: &dyn NFunction, spec: &GridSpec, s: f64) -> Self {
        let n = spec.n() as i64;
        let dim = spec.dim();
        let width = (2 * n - 1) as usize;
        let count = width.pow(dim as u32);
        let h = spec.h();
        let zero = [0.0; 2];
        let mut ks = vec![0.0; count];
        let mut kn = vec![0.0; count];
        let mut frozen = vec![Frozen(0.0); count];
        for idx in 0..count {
            let (o0, o1) = if dim == 1 {
                (idx as i64 - (n - 1), 0)
            } else {
                ((idx / width) as i64 - (n - 1), (idx % width) as i64 - (n - 1))
            };
            if o0 == 0 && o1 == 0 {
                continue;
            }
            let d = if dim == 1 {
                o0.unsigned_abs() as f64 * h
            } else {
                h * ((o0 * o0 + o1 * o1) as f64).sqrt()
            };
            ks[idx] = d.powf(-s);
            kn[idx] = if dim == 1 { 1.0 / d } else { 1.0 / (d * d) };
            let off = [o0 as f64 * h, o1 as f64 * h];
            frozen[idx] = nf.freeze(&off[..dim], &zero[..dim]);
        }
        OffsetTable { width, ks, kn, frozen }
    }

    #[inline]
    fn index(&self, spec: &GridSpec, i: usize, j: usize) -> usize {
        let n = spec.n() as i64;
        let (a, b) = (spec.unravel(i), spec.unravel(j));
        let o0 = (a[0] as i64 - b[0] as i64 + n - 1) as usize;
        if spec.dim() == 1 {
            o0
        } else {
            let o1 = (a[1] as i64 - b[1] as i64 + n - 1) as usize;
            o0 * self.width + o1
        }
    }
}

/// Node double sum `Σ_{i≠j} w_i w_j G(|u_i − u_j| |x_i − x_j|^{−s}) |x_i − x_j|^{−N}`.
///
/// Row `i` accumulates `w_j·G(…)·|x_i − x_j|^{−N}` over ascending `j`, is then
/// multiplied by `w_i`, and the rows are combined with [`pairwise_sum`].
/// Pairs where both values vanish contribute exactly 0 and are skipped.
pub fn off_diagonal_sum(nf: &dyn NFunction, gf: &GridFunction, s: f64) -> Result<f64> {
    check_dims(nf, gf.spec())?;
    check_s(s)?;
    let spec = gf.spec();
    let dim = spec.dim();
    let u = gf.values();
    let nonzero: Vec<usize> = (0..u.len()).filter(|&j| u[j] != 0.0).collect();
    if nonzero.is_empty() {
        return Ok(0.0);
    }
    let weights: Vec<f64> = (0..u.len()).map(|j| spec.weight(j)).collect();
    let table = nf.translation_invariant().then(|| OffsetTable::new(nf, spec, s));

    let row = |i: usize, j: usize, acc: &mut f64| {
        if i == j {
            return;
        }
        let diff = (u[i] - u[j]).abs();
        let term = match &table {
            Some(t) => {
                let k = t.index(spec, i, j);
                nf.eval_frozen(t.frozen[k], diff * t.ks[k]) * t.kn[k]
            }
            None => {
                let (x, y) = (spec.point(i), spec.point(j));
                let d = crate::grid::dist(&x[..dim], &y[..dim]);
                let kn = if dim == 1 { 1.0 / d } else { 1.0 / (d * d) };
                nf.value(&x[..dim], &y[..dim], diff * d.powf(-s)) * kn
            }
        };
        *acc += weights[j] * term;
    };

    let rows: Vec<f64> = (0..u.len())
        .into_par_iter()
        .map(|i| {
            let mut acc = 0.0;
            if u[i] == 0.0 {
                for &j in &nonzero {
                    row(i, j, &mut acc);
                }
            } else {
                for j in 0..u.len() {
                    row(i, j, &mut acc);
                }
            }
            weights[i] * acc
        })
        .collect();
    Ok(pairwise_sum(&rows))
}

/// Contribution of the cell `[a, b]` paired with itself, refined `depth` times.
fn diagonal_cell(
    nf: &dyn NFunction,
    gf: &GridFunction,
    s: f64,
    a: Point,
    b: Point,
    depth: usize,
) -> f64 {
    if depth == 0 {
        return 0.0;
    }
    let dim = gf.dim();
    let mid = [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])];
    let mut children: Vec<(Point, Point)> = Vec::with_capacity(4);
    if dim == 1 {
        children.push((a, [mid[0], 0.0]));
        children.push(([mid[0], 0.0], b));
    } else {
        for (lo0, hi0) in [(a[0], mid[0]), (mid[0], b[0])] {
            for (lo1, hi1) in [(a[1], mid[1]), (mid[1], b[1])] {
                children.push(([lo0, lo1], [hi0, hi1]));
            }
        }
    }
    let centre = |c: &(Point, Point)| [0.5 * (c.0[0] + c.1[0]), 0.5 * (c.0[1] + c.1[1])];
    let volume = |c: &(Point, Point)| (0..dim).map(|k| c.1[k] - c.0[k]).product::<f64>();
    let centres: Vec<Point> = children.iter().map(centre).collect();
    let values: Vec<f64> = centres.iter().map(|p| gf.interpolate(&p[..dim])).collect();
    let mut total = 0.0;
    for p in 0..children.len() {
        for q in 0..children.len() {
            if p == q {
                continue;
            }
            let diff = (values[p] - values[q]).abs();
            if diff == 0.0 {
                continue;
            }
            let (x, y) = (&centres[p][..dim], &centres[q][..dim]);
            let d = crate::grid::dist(x, y);
            let kn = if dim == 1 { 1.0 / d } else { 1.0 / (d * d) };
            total += volume(&children[p]) * volume(&children[q]) * nf.value(x, y, diff * d.powf(-s)) * kn;
        }
    }
    for c in &children {
        total += diagonal_cell(nf, gf, s, c.0, c.1, depth - 1);
    }
    total
}

/// Diagonal part: every node's dual cell paired with itself.
pub fn diagonal_sum(nf: &dyn NFunction, gf: &GridFunction, s: f64, depth: usize) -> Result<f64> {
    check_dims(nf, gf.spec())?;
    check_s(s)?;
    let spec = gf.spec();
    let u = gf.values();
    let dim = spec.dim();
    let terms: Vec<f64> = (0..spec.len())
        .into_par_iter()
        .map(|i| {
            // The interpolant on the dual cell only sees the node and its neighbours.
            let m = spec.unravel(i);
            let mut flat = true;
            for o0 in -1..=1i64 {
                for o1 in if dim == 2 { -1..=1i64 } else { 0..=0 } {
                    if let Some(j) = spec.offset(m, [o0, o1]) {
                        flat &= u[j] == u[i];
                    }
                }
            }
            if flat {
                return 0.0;
            }
            let (a, b) = spec.dual_cell(i);
            diagonal_cell(nf, gf, s, a, b, depth)
        })
        .collect();
    Ok(pairwise_sum(&terms))
}

/// `∫_a^∞ G(c r^{−s}, y(r)) dr / r` along one ray from `x` in direction `dir`.
fn ray_integral(nf: &dyn NFunction, x: &[f64], dir: &[f64], c: f64, a: f64, s: f64) -> f64 {
    let dim = x.len();
    let g_minus = nf.index_bounds().lower.max(1e-3);
    let far_len = 40.0 / g_minus;
    let at = |r: f64| -> [f64; 2] {
        let mut y = [0.0; 2];
        for k in 0..dim {
            y[k] = x[k] + r * dir[k];
        }
        y
    };
    if nf.translation_invariant() && nf.radial() == Radial::Constant {
        let fr = nf.freeze(x, x);
        let t0 = c * a.powf(-s);
        return decaying_integral(far_len, |v| nf.eval_frozen(fr, t0 * (-v).exp())) / s;
    }
    let period = match nf.radial() {
        Radial::Periodic { period } => period,
        Radial::Constant => 1.0,
    };
    // Near field in w = ln(r/a), with panels short enough to resolve one
    // period of the spatial dependence.
    let r1 = a + 16.0 * period;
    let w1 = (r1 / a).ln();
    let integrand = |w: f64| {
        let r = a * w.exp();
        let y = at(r);
        nf.value(x, &y[..dim], c * r.powf(-s))
    };
    let mut near = 0.0;
    let mut w = 0.0;
    while w < w1 {
        let step = 0.5f64.min(period / (4.0 * a * w.exp()));
        let next = (w + step).min(w1);
        near += gauss_legendre(w, next, integrand);
        w = next;
    }
    // Far field: average the spatial dependence over one period.
    const PHASES: usize = 8;
    let t1 = c * r1.powf(-s);
    let ys: Vec<[f64; 2]> = (0..PHASES).map(|k| at(r1 + period * k as f64 / PHASES as f64)).collect();
    let far = decaying_integral(far_len, |v| {
        let t = t1 * (-v).exp();
        ys.iter().map(|y| nf.value(x, &y[..dim], t)).sum::<f64>() / PHASES as f64
    }) / s;
    near + far
}

/// Pairs with one point in the box and the other outside it, for data that
/// vanish outside the box.
pub fn exterior_sum(nf: &dyn NFunction, gf: &GridFunction, s: f64, angles: usize) -> Result<f64> {
    check_dims(nf, gf.spec())?;
    check_s(s)?;
    if !gf.zero_outside() {
        return Ok(0.0);
    }
    let spec = gf.spec();
    let dim = spec.dim();
    let u = gf.values();
    let (lo, hi) = (spec.lo(), spec.hi());
    let rays: Vec<([f64; 2], f64)> = if dim == 1 {
        vec![([-1.0, 0.0], 1.0), ([1.0, 0.0], 1.0)]
    } else {
        let m = angles.max(4);
        let dth = 2.0 * std::f64::consts::PI / m as f64;
        (0..m).map(|k| {
            let th = (k as f64 + 0.5) * dth;
            ([th.cos(), th.sin()], dth)
        })
        .collect()
    };
    let terms: Vec<f64> = (0..spec.len())
        .into_par_iter()
        .map(|i| {
            if u[i] == 0.0 {
                return 0.0;
            }
            let x = spec.point(i);
            let mut acc = 0.0;
            for (dir, omega) in &rays {
                // Distance along `dir` to the box boundary.
                let mut a = f64::INFINITY;
                for k in 0..dim {
                    if dir[k] > 0.0 {
                        a = a.min((hi[k] - x[k]) / dir[k]);
                    } else if dir[k] < 0.0 {
                        a = a.min((lo[k] - x[k]) / dir[k]);
                    }
                }
                acc += omega * ray_integral(nf, &x[..dim], &dir[..dim], u[i].abs(), a, s);
            }
            2.0 * spec.weight(i) * acc
        })
        .collect();
    Ok(pairwise_sum(&terms))
}

/// All three parts of the fractional modular at the resolution of `gf`.
pub fn fractional_parts(
    nf: &dyn NFunction,
    gf: &GridFunction,
    s: f64,
    opts: &FractionalOptions,
) -> Result<FractionalParts> {
    let off_diagonal = off_diagonal_sum(nf, gf, s)?;
    let diagonal = diagonal_sum(nf, gf, s, opts.diagonal_levels)?;
    let exterior = if opts.exterior { exterior_sum(nf, gf, s, opts.exterior_angles)? } else { 0.0 };
    Ok(FractionalParts { off_diagonal, diagonal, exterior })
}

/// Fractional modular at the resolution of `gf` with default options.
pub fn fractional_value(nf: &dyn NFunction, gf: &GridFunction, s: f64) -> Result<f64> {
    Ok(fractional_parts(nf, gf, s, &FractionalOptions::default())?.total())
}

/// Fractional modular of each function of a refinement ladder.
pub fn modular_fractional_ladder(
    nf: &dyn NFunction,
    ladder: &[GridFunction],
    s: f64,
    opts: &FractionalOptions,
) -> Result<ModularResult> {
    check_levels(ladder.len())?;
    check_s(s)?;
    let mut levels = Vec::with_capacity(ladder.len());
    let mut last = FractionalParts::default();
    for g in ladder {
        last = fractional_parts(nf, g, s, opts)?;
        levels.push(Level { n: g.spec().n(), h: g.spec().h(), value: last.total() });
    }
    let mut res = ModularResult::from_levels(levels);
    res.parts = Some(last);
    Ok(res)
}

/// Fractional modular `J_{s,G}(u)` with `levels` resolutions ending at that of `gf`.
///
/// Data with `zero_outside` are integrated over `ℝ^N × ℝ^N`; other data over
/// the box squared.
pub fn modular_fractional(
    nf: &dyn NFunction,
    gf: &GridFunction,
    s: f64,
    levels: usize,
) -> Result<ModularResult> {
    check_s(s)?;
    modular_fractional_ladder(nf, &coarsening_ladder(gf, levels)?, s, &FractionalOptions::default())
}

/// A function of `(x, y)` sampled on the node pairs of a grid, stored row-major
/// by `x`. Entries with `x = y` are ignored.
#[derive(Debug, Clone, PartialEq)]
pub struct PairFunction {
    spec: GridSpec,
    values: Vec<f64>,
}

impl PairFunction {
    pub fn from_fn<F>(spec: GridSpec, f: F) -> Result<Self>
    where
        F: Fn(&[f64], &[f64]) -> f64 + Sync,
    {
        let len = spec.len();
        let dim = spec.dim();
        let values: Vec<f64> = (0..len * len)
            .into_par_iter()
            .map(|k| {
                let (i, j) = (k / len, k % len);
                if i == j {
                    0.0
                } else {
                    f(&spec.point(i)[..dim], &spec.point(j)[..dim])
                }
            })
            .collect();
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Sampling {
                node: spec.point(k / len)[..dim].to_vec(),
                reason: format!("non-finite pair value {}", values[k]),
            });
        }
        Ok(PairFunction { spec, values })
    }

    /// `D_s u(x, y) = |u(x) − u(y)| / |x − y|^s` on the node pairs.
    pub fn difference_quotient(gf: &GridFunction, s: f64) -> Result<Self> {
        check_s(s)?;
        let u = gf.values();
        let spec = gf.spec().clone();
        let len = spec.len();
        let dim = spec.dim();
        let values = (0..len * len)
            .into_par_iter()
            .map(|k| {
                let (i, j) = (k / len, k % len);
                if i == j {
                    return 0.0;
                }
                let d = crate::grid::dist(&spec.point(i)[..dim], &spec.point(j)[..dim]);
                (u[i] - u[j]).abs() * d.powf(-s)
            })
            .collect();
        Ok(PairFunction { spec, values })
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn clamp(&self, k: f64) -> Result<Self> {
        if !(k > 0.0) {
            return Err(Error::Parameter(format!("clamp level must be positive, got {k}")));
        }
        Ok(PairFunction { spec: self.spec.clone(), values: self.values.iter().map(|v| v.clamp(-k, k)).collect() })
    }

    pub fn sub(&self, other: &PairFunction) -> Result<Self> {
        if self.spec != other.spec {
            return Err(Error::Parameter("pair functions live on different grids".into()));
        }
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect();
        Ok(PairFunction { spec: self.spec.clone(), values })
    }

    pub fn coarsen(&self, factor: usize) -> Result<Self> {
        let spec = self.spec.coarsen(factor)?;
        let (len, old) = (spec.len(), self.spec.len());
        let map = |i: usize| {
            let m = spec.unravel(i);
            self.spec.ravel([m[0] * factor, m[1] * factor])
        };
        let values = (0..len * len).map(|k| self.values[map(k / len) * old + map(k % len)]).collect();
        Ok(PairFunction { spec, values })
    }
}

/// `Σ_{i≠j} w_i w_j G_{x_i,x_j}(|v_ij|) |x_i − x_j|^{−N}` at one resolution.
pub fn pair_value(nf: &dyn NFunction, v: &PairFunction) -> Result<f64> {
    check_dims(nf, &v.spec)?;
    let spec = &v.spec;
    let len = spec.len();
    let dim = spec.dim();
    let rows: Vec<f64> = (0..len)
        .into_par_iter()
        .map(|i| {
            let x = spec.point(i);
            let mut acc = 0.0;
            for j in 0..len {
                let t = v.values[i * len + j].abs();
                if i == j || t == 0.0 {
                    continue;
                }
                let y = spec.point(j);
                let d = crate::grid::dist(&x[..dim], &y[..dim]);
                let kn = if dim == 1 { 1.0 / d } else { 1.0 / (d * d) };
                acc += spec.weight(j) * nf.value(&x[..dim], &y[..dim], t) * kn;
            }
            spec.weight(i) * acc
        })
        .collect();
    Ok(pairwise_sum(&rows))
}

/// `∬ G_{x,y}(|v(x, y)|) dμ` over the box squared, for `v` vanishing outside it.
///
/// The diagonal `x = y` is excluded at every level.
pub fn modular_pair(nf: &dyn NFunction, v: &PairFunction, levels: usize) -> Result<ModularResult> {
    check_levels(levels)?;
    let levels = (0..levels)
        .rev()
        .map(|k| {
            let c = if k == 0 { v.clone() } else { v.coarsen(1 << k)? };
            Ok(Level { n: c.spec.n(), h: c.spec.h(), value: pair_value(nf, &c)? })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ModularResult::from_levels(levels))
}
