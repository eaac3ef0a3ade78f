use serde::{Deserialize, Serialize};

use super::function::GridFunction;
use super::spec::{GridSpec, Point};
use crate::error::{Error, Result};

/// Outer approximation of a support set: a union of closed grid cells,
/// Minkowski-inflated by a radius `r ≥ 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RegionData", into = "RegionData")]
pub struct Region {
    spec: GridSpec,
    cells: Vec<usize>,
    r: f64,
}

/// JSON form: linear cell indices compressed into inclusive ranges.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RegionData {
    spec: GridSpec,
    ranges: Vec<[usize; 2]>,
    r: f64,
}

impl TryFrom<RegionData> for Region {
    type Error = String;

    fn try_from(d: RegionData) -> std::result::Result<Self, String> {
        let mut cells = Vec::new();
        for [a, b] in d.ranges {
            if a > b || b >= d.spec.cell_count() {
                return Err(format!("bad cell range [{a}, {b}]"));
            }
            cells.extend(a..=b);
        }
        cells.sort_unstable();
        cells.dedup();
        Region::from_cells(d.spec, cells, d.r).map_err(|e| e.to_string())
    }
}

impl From<Region> for RegionData {
    fn from(g: Region) -> Self {
        let ranges = g.ranges();
        RegionData { spec: g.spec, ranges, r: g.r }
    }
}

/// Distance from `p` to the closed box `[a, b]`.
#[inline]
fn box_distance(p: &[f64], a: &Point, b: &Point) -> f64 {
    let mut d2 = 0.0;
    for k in 0..p.len() {
        let e = (a[k] - p[k]).max(0.0).max(p[k] - b[k]);
        d2 += e * e;
    }
    d2.sqrt()
}

impl Region {
    pub fn empty(spec: GridSpec) -> Self {
        Region { spec, cells: Vec::new(), r: 0.0 }
    }

    pub fn from_cells(spec: GridSpec, mut cells: Vec<usize>, r: f64) -> Result<Self> {
        if !(r >= 0.0 && r.is_finite()) {
            return Err(Error::Parameter(format!("inflation radius must be ≥ 0, got {r}")));
        }
        if cells.iter().any(|&c| c >= spec.cell_count()) {
            return Err(Error::Parameter("cell index out of range".into()));
        }
        cells.sort_unstable();
        cells.dedup();
        Ok(Region { spec, cells, r })
    }

    /// Union of the closed cells touching a node where `|u| > threshold`.
    pub fn support(gf: &GridFunction, threshold: f64) -> Region {
        let spec = gf.spec().clone();
        let dim = spec.dim();
        let n = spec.n();
        let mut cells = Vec::new();
        for (i, &v) in gf.values().iter().enumerate() {
            if v.abs() <= threshold {
                continue;
            }
            let m = spec.unravel(i);
            let range = |a: usize| m[a].saturating_sub(1)..=m[a].min(n - 2);
            if dim == 1 {
                cells.extend(range(0));
            } else {
                for k0 in range(0) {
                    for k1 in range(1) {
                        cells.push(spec.cell_ravel([k0, k1]));
                    }
                }
            }
        }
        cells.sort_unstable();
        cells.dedup();
        Region { spec, cells, r: 0.0 }
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn cells(&self) -> &[usize] {
        &self.cells
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// Minkowski inflation; radii add.
    pub fn inflated(&self, r: f64) -> Result<Region> {
        if !(r >= 0.0 && r.is_finite()) {
            return Err(Error::Parameter(format!("inflation radius must be ≥ 0, got {r}")));
        }
        Ok(Region { spec: self.spec.clone(), cells: self.cells.clone(), r: self.r + r })
    }

    pub fn ranges(&self) -> Vec<[usize; 2]> {
        let mut out: Vec<[usize; 2]> = Vec::new();
        for &c in &self.cells {
            match out.last_mut() {
                Some(last) if last[1] + 1 == c => last[1] = c,
                _ => out.push([c, c]),
            }
        }
        out
    }

    /// Merged intervals `[a − r, b + r]` of a 1-D region.
    pub fn intervals(&self) -> Vec<(f64, f64)> {
        debug_assert_eq!(self.spec.dim(), 1);
        self.ranges()
            .into_iter()
            .map(|[a, b]| (self.spec.coord(0, a) - self.r, self.spec.coord(0, b + 1) + self.r))
            .fold(Vec::new(), |mut acc: Vec<(f64, f64)>, (a, b)| {
                match acc.last_mut() {
                    Some(last) if a <= last.1 => last.1 = last.1.max(b),
                    _ => acc.push((a, b)),
                }
                acc
            })
    }

    /// Bounding box of the inflated region, `None` when empty.
    pub fn bounding_box(&self) -> Option<(Point, Point)> {
        let dim = self.spec.dim();
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for &c in &self.cells {
            let (a, b) = self.spec.cell_bounds(c);
            for k in 0..dim {
                lo[k] = lo[k].min(a[k] - self.r);
                hi[k] = hi[k].max(b[k] + self.r);
            }
        }
        if self.cells.is_empty() {
            None
        } else {
            Some((lo, hi))
        }
    }

    /// Cells with at least one face not shared with another cell of the region.
    fn boundary_cells(&self) -> Vec<usize> {
        let dim = self.spec.dim();
        let m = self.spec.cells_per_axis() as i64;
        let has = |k: [i64; 2]| {
            if (0..dim).any(|a| k[a] < 0 || k[a] >= m) {
                return false;
            }
            let c = self.spec.cell_ravel([k[0] as usize, k[1] as usize]);
            self.cells.binary_search(&c).is_ok()
        };
        self.cells
            .iter()
            .copied()
            .filter(|&c| {
                let k = self.spec.cell_unravel(c);
                let k = [k[0] as i64, k[1] as i64];
                (0..dim).any(|a| {
                    let mut lo = k;
                    let mut hi = k;
                    lo[a] -= 1;
                    hi[a] += 1;
                    !has(lo) || !has(hi)
                })
            })
            .collect()
    }

    /// Distance from `p` to the cell union (0 inside), ignoring the inflation radius.
    pub fn cell_distance(&self, p: &[f64]) -> f64 {
        self.cell_distance_among(p, &self.cells)
    }

    fn cell_distance_among(&self, p: &[f64], cells: &[usize]) -> f64 {
        let mut best = f64::INFINITY;
        for &c in cells {
            let (a, b) = self.spec.cell_bounds(c);
            best = best.min(box_distance(p, &a, &b));
            if best == 0.0 {
                break;
            }
        }
        best
    }

    /// Whether `p` lies in the (uninflated) cell union, by looking only at the
    /// cells around `p`.
    fn in_cells(&self, p: &[f64]) -> bool {
        let dim = self.spec.dim();
        let m = self.spec.cells_per_axis() as i64;
        let mut cand = [[0i64; 2]; 2];
        for a in 0..dim {
            let k = ((p[a] - self.spec.lo()[a]) / self.spec.h()).floor() as i64;
            cand[a] = [k - 1, k];
        }
        let pick = |a: usize, t: usize| if a < dim { cand[a][t] } else { 0 };
        for t0 in 0..2 {
            for t1 in 0..(if dim == 2 { 2 } else { 1 }) {
                let k = [pick(0, t0), pick(1, t1)];
                if (0..dim).any(|a| k[a] < 0 || k[a] >= m) {
                    continue;
                }
                let c = self.spec.cell_ravel([k[0] as usize, k[1] as usize]);
                if self.cells.binary_search(&c).is_ok() {
                    let (a, b) = self.spec.cell_bounds(c);
                    if box_distance(p, &a, &b) == 0.0 {
                        return true;
                    }
                }
            }
        }
        false
    }

    /// Minimum over `points` of the distance to the inflated region
    /// (0 for points inside it).
    pub fn min_distance(&self, points: &[Point]) -> f64 {
        if self.cells.is_empty() {
            return f64::INFINITY;
        }
        let border = self.boundary_cells();
        let dim = self.spec.dim();
        let mut best = f64::INFINITY;
        for p in points {
            let p = &p[..dim];
            // Outside the union the nearest cell is a boundary cell.
            let d = if self.in_cells(p) { 0.0 } else { self.cell_distance_among(p, &border) };
            best = best.min(d);
        }
        (best - self.r).max(0.0)
    }

    pub fn contains_point(&self, p: &[f64]) -> bool {
        let tol = 1e-9 * self.spec.h();
        self.cell_distance(p) <= self.r + tol
    }

    /// Points on the boundary of each inflated cell (corners, edge midpoints
    /// and, for `r > 0`, points along the rounded corners) plus the cell centre.
    fn probe_points(&self) -> Vec<Point> {
        let dim = self.spec.dim();
        let mut out = Vec::new();
        for &c in &self.cells {
            let (a, b) = self.spec.cell_bounds(c);
            if dim == 1 {
                out.push([a[0] - self.r, 0.0]);
                out.push([0.5 * (a[0] + b[0]), 0.0]);
                out.push([b[0] + self.r, 0.0]);
                continue;
            }
            let mid = [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])];
            out.push(mid);
            out.push([a[0] - self.r, mid[1]]);
            out.push([b[0] + self.r, mid[1]]);
            out.push([mid[0], a[1] - self.r]);
            out.push([mid[0], b[1] + self.r]);
            for (cx, cy, sx, sy) in [(a[0], a[1], -1.0, -1.0), (b[0], a[1], 1.0, -1.0), (a[0], b[1], -1.0, 1.0), (b[0], b[1], 1.0, 1.0)] {
                for k in 0..=4 {
                    let th = std::f64::consts::FRAC_PI_2 * k as f64 / 4.0;
                    out.push([cx + sx * self.r * th.cos(), cy + sy * self.r * th.sin()]);
                }
            }
        }
        out
    }

    /// `self ⊆ other`, both read as outer approximations on the same grid.
    ///
    /// Exact interval arithmetic in 1-D; in 2-D each inflated cell is probed at
    /// its centre and along its boundary.
    pub fn subset_of(&self, other: &Region) -> Result<bool> {
        if self.spec != other.spec {
            return Err(Error::Parameter("regions live on different grids".into()));
        }
        if self.cells.is_empty() {
            return Ok(true);
        }
        let tol = 1e-9 * self.spec.h();
        if self.spec.dim() == 1 {
            let theirs = other.intervals();
            return Ok(self.intervals().iter().all(|&(a, b)| {
                theirs.iter().any(|&(c, d)| c - tol <= a && b <= d + tol)
            }));
        }
        Ok(self.probe_points().iter().all(|p| other.contains_point(p)))
    }

    /// `self ⊆ B̄_radius(center)`.
    pub fn within_ball(&self, center: &[f64], radius: f64) -> bool {
        let dim = self.spec.dim();
        let tol = 1e-9 * self.spec.h();
        self.cells.iter().all(|&c| {
            let (a, b) = self.spec.cell_bounds(c);
            let far: f64 = (0..dim)
                .map(|k| {
                    let e = (a[k] - center[k]).abs().max((b[k] - center[k]).abs());
                    e * e
                })
                .sum::<f64>()
                .sqrt();
            far + self.r <= radius + tol
        })
    }

    /// Whether every probe point of the region satisfies `pred`.
    pub fn all_probes(&self, pred: impl Fn(&[f64]) -> bool) -> bool {
        let dim = self.spec.dim();
        self.probe_points().iter().all(|p| pred(&p[..dim]))
    }

    /// Cell-wise intersection of two uninflated regions on the same grid.
    pub fn intersect_cells(&self, other: &Region) -> Result<Region> {
        if self.spec != other.spec {
            return Err(Error::Parameter("regions live on different grids".into()));
        }
        let cells = self.cells.iter().copied().filter(|c| other.cells.binary_search(c).is_ok()).collect();
        Ok(Region { spec: self.spec.clone(), cells, r: self.r.min(other.r) })
    }
}
