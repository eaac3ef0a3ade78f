use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::spec::{GridSpec, Point};
use crate::error::{Error, Result};

/// Node samples of a real function on a [`GridSpec`].
///
/// With `zero_outside` the function is known to vanish outside the box, so
/// integrals over `ℝ^N` reduce to the box; every boundary node is then 0.
/// Without it, the data only describe the function on the box itself.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridFunctionData", into = "GridFunctionData")]
pub struct GridFunction {
    spec: GridSpec,
    values: Vec<f64>,
    zero_outside: bool,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridFunctionData {
    spec: GridSpec,
    values: Vec<f64>,
    zero_outside: bool,
}

impl TryFrom<GridFunctionData> for GridFunction {
    type Error = String;

    fn try_from(d: GridFunctionData) -> std::result::Result<Self, String> {
        GridFunction::new(d.spec, d.values, d.zero_outside).map_err(|e| e.to_string())
    }
}

impl From<GridFunction> for GridFunctionData {
    fn from(g: GridFunction) -> Self {
        GridFunctionData { spec: g.spec, values: g.values, zero_outside: g.zero_outside }
    }
}

impl GridFunction {
    pub fn new(spec: GridSpec, values: Vec<f64>, zero_outside: bool) -> Result<Self> {
        if values.len() != spec.len() {
            return Err(Error::Parameter(format!(
                "expected {} values, got {}",
                spec.len(),
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Sampling {
                node: spec.point(i)[..spec.dim()].to_vec(),
                reason: format!("non-finite value {}", values[i]),
            });
        }
        if zero_outside {
            if let Some(i) = (0..values.len()).find(|&i| spec.is_boundary(i) && values[i] != 0.0) {
                return Err(Error::Sampling {
                    node: spec.point(i)[..spec.dim()].to_vec(),
                    reason: format!(
                        "boundary value {} for a function declared zero outside the box",
                        values[i]
                    ),
                });
            }
        }
        Ok(GridFunction { spec, values, zero_outside })
    }

    pub fn zeros(spec: GridSpec) -> Self {
        let values = vec![0.0; spec.len()];
        GridFunction { spec, values, zero_outside: true }
    }

    /// Evaluates `f` at every node.
    pub fn from_fn<F>(spec: GridSpec, zero_outside: bool, f: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> f64 + Sync,
    {
        let dim = spec.dim();
        let values: Vec<f64> = (0..spec.len())
            .into_par_iter()
            .map(|i| f(&spec.point(i)[..dim]))
            .collect();
        Self::new(spec, values, zero_outside)
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn zero_outside(&self) -> bool {
        self.zero_outside
    }

    pub fn dim(&self) -> usize {
        self.spec.dim()
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Same grid and flag, new values.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        Self::new(self.spec.clone(), values, self.zero_outside)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    pub fn scale(&self, c: f64) -> GridFunction {
        GridFunction {
            spec: self.spec.clone(),
            values: self.values.iter().map(|v| c * v).collect(),
            zero_outside: self.zero_outside,
        }
    }

    fn zip_with(&self, other: &GridFunction, f: impl Fn(f64, f64) -> f64) -> Result<GridFunction> {
        if self.spec != other.spec {
            return Err(Error::Parameter("grid functions live on different grids".into()));
        }
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        Ok(GridFunction {
            spec: self.spec.clone(),
            values,
            zero_outside: self.zero_outside && other.zero_outside,
        })
    }

    pub fn add(&self, other: &GridFunction) -> Result<GridFunction> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &GridFunction) -> Result<GridFunction> {
        self.zip_with(other, |a, b| a - b)
    }

    /// Pointwise product; vanishes outside the box if either factor does.
    pub fn mul(&self, other: &GridFunction) -> Result<GridFunction> {
        let mut out = self.zip_with(other, |a, b| a * b)?;
        out.zero_outside = self.zero_outside || other.zero_outside;
        Ok(out)
    }

    /// `u_n = max(−n, min(u, n))`.
    pub fn clamp(&self, n: f64) -> Result<GridFunction> {
        if !(n > 0.0) {
            return Err(Error::Parameter(format!("clamp level must be positive, got {n}")));
        }
        Ok(GridFunction {
            spec: self.spec.clone(),
            values: self.values.iter().map(|&v| v.clamp(-n, n)).collect(),
            zero_outside: self.zero_outside,
        })
    }

    /// Restriction to every `factor`-th node.
    pub fn coarsen(&self, factor: usize) -> Result<GridFunction> {
        let spec = self.spec.coarsen(factor)?;
        let values = (0..spec.len())
            .map(|i| {
                let m = spec.unravel(i);
                self.values[self.spec.ravel([m[0] * factor, m[1] * factor])]
            })
            .collect();
        Ok(GridFunction { spec, values, zero_outside: self.zero_outside })
    }

    /// Multilinear interpolation of the node data; points outside the box
    /// give 0 when the function vanishes there and the nearest face value otherwise.
    pub fn interpolate(&self, x: &[f64]) -> f64 {
        let dim = self.dim();
        let n = self.spec.n();
        let h = self.spec.h();
        let mut base = [0usize; 2];
        let mut frac = [0.0; 2];
        for a in 0..dim {
            let q = (x[a] - self.spec.lo()[a]) / h;
            if self.zero_outside && (q < 0.0 || q > (n - 1) as f64) {
                return 0.0;
            }
            let q = q.clamp(0.0, (n - 1) as f64);
            let k = (q.floor() as usize).min(n - 2);
            base[a] = k;
            frac[a] = q - k as f64;
        }
        if dim == 1 {
            let (a, b) = (self.values[base[0]], self.values[base[0] + 1]);
            a + frac[0] * (b - a)
        } else {
            let v = |i: usize, j: usize| self.values[self.spec.ravel([base[0] + i, base[1] + j])];
            let (fx, fy) = (frac[0], frac[1]);
            (1.0 - fx) * ((1.0 - fy) * v(0, 0) + fy * v(0, 1)) + fx * ((1.0 - fy) * v(1, 0) + fy * v(1, 1))
        }
    }

    pub fn point(&self, idx: usize) -> Point {
        self.spec.point(idx)
    }

    /// CSV with a `#` header line describing the grid, then one
    /// `x0[,x1],value` row per node in storage order.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let s = &self.spec;
        writeln!(
            w,
            "# dim={} lo={:?} hi={:?} n={} h={} zero_outside={}",
            s.dim(),
            s.lo(),
            s.hi(),
            s.n(),
            s.h(),
            self.zero_outside
        )?;
        let axes = ["x0", "x1"];
        writeln!(w, "{},value", axes[..s.dim()].join(","))?;
        for (i, v) in self.values.iter().enumerate() {
            let p = s.point(i);
            for c in &p[..s.dim()] {
                write!(w, "{c},")?;
            }
            writeln!(w, "{v}")?;
        }
        Ok(())
    }
}
