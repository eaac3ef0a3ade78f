use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Coordinates of a grid point; only the first `dim` entries are meaningful.
pub type Point = [f64; 2];

/// Multi-index of a node; only the first `dim` entries are meaningful.
pub type Index = [usize; 2];

/// Uniform Cartesian grid over an axis-aligned truncation box, `n` nodes per
/// axis with the same spacing `h` on every axis.
///
/// Nodes are stored node-major with axis 0 varying slowest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridSpecConfig", into = "GridSpecConfig")]
pub struct GridSpec {
    lo: Vec<f64>,
    hi: Vec<f64>,
    n: usize,
    h: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridSpecConfig {
    lo: Vec<f64>,
    hi: Vec<f64>,
    n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    h: Option<f64>,
}

impl TryFrom<GridSpecConfig> for GridSpec {
    type Error = String;

    fn try_from(c: GridSpecConfig) -> std::result::Result<Self, String> {
        let spec = GridSpec::new(c.lo, c.hi, c.n).map_err(|e| e.to_string())?;
        match c.h {
            Some(h) if (h - spec.h).abs() > 1e-12 * spec.h => {
                Err(format!("declared spacing {h} disagrees with derived spacing {}", spec.h))
            }
            _ => Ok(spec),
        }
    }
}

impl From<GridSpec> for GridSpecConfig {
    fn from(s: GridSpec) -> Self {
        GridSpecConfig { lo: s.lo, hi: s.hi, n: s.n, h: Some(s.h) }
    }
}

impl GridSpec {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>, n: usize) -> Result<Self> {
        let dim = lo.len();
        if dim == 0 || dim > 2 || hi.len() != dim {
            return Err(Error::Domain(format!(
                "grid needs matching lo/hi of dimension 1 or 2, got {} and {}",
                lo.len(),
                hi.len()
            )));
        }
        if n < 2 {
            return Err(Error::Domain(format!("need at least 2 nodes per axis, got {n}")));
        }
        for a in 0..dim {
            if !(lo[a].is_finite() && hi[a].is_finite() && lo[a] < hi[a]) {
                return Err(Error::Domain(format!("bad box extent [{}, {}]", lo[a], hi[a])));
            }
        }
        let h = (hi[0] - lo[0]) / (n - 1) as f64;
        for a in 1..dim {
            let ha = (hi[a] - lo[a]) / (n - 1) as f64;
            if (ha - h).abs() > 1e-12 * h {
                return Err(Error::Domain(format!("spacing differs across axes: {h} vs {ha}")));
            }
        }
        Ok(GridSpec { lo, hi, n, h })
    }

    pub fn interval(lo: f64, hi: f64, n: usize) -> Result<Self> {
        Self::new(vec![lo], vec![hi], n)
    }

    /// `[lo, hi]^dim`.
    pub fn cube(lo: f64, hi: f64, n: usize, dim: usize) -> Result<Self> {
        Self::new(vec![lo; dim], vec![hi; dim], n)
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    /// Total number of nodes `n^dim`.
    pub fn len(&self) -> usize {
        self.n.pow(self.dim() as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn coord(&self, axis: usize, i: usize) -> f64 {
        self.lo[axis] + i as f64 * self.h
    }

    #[inline]
    pub fn unravel(&self, idx: usize) -> Index {
        if self.dim() == 1 {
            [idx, 0]
        } else {
            [idx / self.n, idx % self.n]
        }
    }

    #[inline]
    pub fn ravel(&self, m: Index) -> usize {
        if self.dim() == 1 {
            m[0]
        } else {
            m[0] * self.n + m[1]
        }
    }

    #[inline]
    pub fn point(&self, idx: usize) -> Point {
        let m = self.unravel(idx);
        let mut p = [0.0; 2];
        for a in 0..self.dim() {
            p[a] = self.coord(a, m[a]);
        }
        p
    }

    /// Index of the node at `m + offset`, if it lies on the grid.
    #[inline]
    pub fn offset(&self, m: Index, offset: [i64; 2]) -> Option<usize> {
        let mut out = [0usize; 2];
        for a in 0..self.dim() {
            let k = m[a] as i64 + offset[a];
            if k < 0 || k >= self.n as i64 {
                return None;
            }
            out[a] = k as usize;
        }
        Some(self.ravel(out))
    }

    pub fn is_boundary(&self, idx: usize) -> bool {
        let m = self.unravel(idx);
        (0..self.dim()).any(|a| m[a] == 0 || m[a] == self.n - 1)
    }

    /// Trapezoid weight of a node: `h` per axis, halved on the box faces.
    #[inline]
    pub fn weight(&self, idx: usize) -> f64 {
        let m = self.unravel(idx);
        let mut w = 1.0;
        for a in 0..self.dim() {
            w *= if m[a] == 0 || m[a] == self.n - 1 { 0.5 * self.h } else { self.h };
        }
        w
    }

    /// The part of `[x_i − h/2, x_i + h/2]^dim` inside the box.
    pub fn dual_cell(&self, idx: usize) -> (Point, Point) {
        let m = self.unravel(idx);
        let (mut a, mut b) = ([0.0; 2], [0.0; 2]);
        for ax in 0..self.dim() {
            let c = self.coord(ax, m[ax]);
            a[ax] = if m[ax] == 0 { c } else { c - 0.5 * self.h };
            b[ax] = if m[ax] == self.n - 1 { c } else { c + 0.5 * self.h };
        }
        (a, b)
    }

    pub fn measure(&self) -> f64 {
        (0..self.dim()).map(|a| self.hi[a] - self.lo[a]).product()
    }

    pub fn cells_per_axis(&self) -> usize {
        self.n - 1
    }

    pub fn cell_count(&self) -> usize {
        (self.n - 1).pow(self.dim() as u32)
    }

    pub fn cell_unravel(&self, c: usize) -> Index {
        let m = self.n - 1;
        if self.dim() == 1 {
            [c, 0]
        } else {
            [c / m, c % m]
        }
    }

    pub fn cell_ravel(&self, k: Index) -> usize {
        if self.dim() == 1 {
            k[0]
        } else {
            k[0] * (self.n - 1) + k[1]
        }
    }

    /// Closed cell `[x_k, x_{k+1}]` per axis.
    pub fn cell_bounds(&self, c: usize) -> (Point, Point) {
        let k = self.cell_unravel(c);
        let (mut a, mut b) = ([0.0; 2], [0.0; 2]);
        for ax in 0..self.dim() {
            a[ax] = self.coord(ax, k[ax]);
            b[ax] = self.coord(ax, k[ax] + 1);
        }
        (a, b)
    }

    /// Grid with `factor` times as many intervals per axis over the same box.
    pub fn refine(&self, factor: usize) -> Result<GridSpec> {
        if factor == 0 {
            return Err(Error::Parameter("refinement factor must be positive".into()));
        }
        GridSpec::new(self.lo.clone(), self.hi.clone(), (self.n - 1) * factor + 1)
    }

    /// Grid keeping every `factor`-th node.
    pub fn coarsen(&self, factor: usize) -> Result<GridSpec> {
        if factor == 0 || (self.n - 1) % factor != 0 || (self.n - 1) / factor < 1 {
            return Err(Error::Parameter(format!(
                "cannot coarsen {} intervals by a factor {factor}",
                self.n - 1
            )));
        }
        GridSpec::new(self.lo.clone(), self.hi.clone(), (self.n - 1) / factor + 1)
    }

    pub fn contains_point(&self, x: &[f64]) -> bool {
        (0..self.dim()).all(|a| self.lo[a] <= x[a] && x[a] <= self.hi[a])
    }

    /// Whether the box contains the closed ball `B̄_r(0)`.
    pub fn contains_ball(&self, r: f64) -> bool {
        (0..self.dim()).all(|a| self.lo[a] <= -r && r <= self.hi[a])
    }

    /// Largest distance from the origin to a point of the box.
    pub fn circumradius(&self) -> f64 {
        (0..self.dim())
            .map(|a| {
                let m = self.lo[a].abs().max(self.hi[a].abs());
                m * m
            })
            .sum::<f64>()
            .sqrt()
    }

    /// Round `x / h` to an integer when it is within `1e-9` of one.
    pub fn steps(&self, x: f64) -> Option<i64> {
        let q = x / self.h;
        let k = q.round();
        if (q - k).abs() <= 1e-9 * k.abs().max(1.0) {
            Some(k as i64)
        } else {
            None
        }
    }
}
