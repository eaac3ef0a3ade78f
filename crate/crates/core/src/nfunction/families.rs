use std::f64::consts::{E, PI};

use serde::{Deserialize, Serialize};

use super::{Frozen, IndexBounds, NFunction, Radial};
use crate::error::{Error, Result};

/// Translation-invariant exponent `p(x, y) = base + amplitude·cos(frequency·|x − y|)`.
///
/// Depending on `x − y` only makes `p((x, y) − (z, z)) = p(x, y)` hold by construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExponentMap {
    pub base: f64,
    #[serde(default)]
    pub amplitude: f64,
    #[serde(default = "default_frequency")]
    pub frequency: f64,
}

fn default_frequency() -> f64 {
    1.0
}

impl ExponentMap {
    pub fn constant(p: f64) -> Self {
        ExponentMap { base: p, amplitude: 0.0, frequency: 1.0 }
    }

    fn validate(&self) -> Result<()> {
        if !(self.base.is_finite() && self.amplitude.is_finite() && self.frequency.is_finite()) {
            return Err(Error::InvalidNFunction("exponent parameters must be finite".into()));
        }
        if self.min() <= 0.0 {
            return Err(Error::InvalidNFunction(format!(
                "exponent must stay positive, p⁻ = {}",
                self.min()
            )));
        }
        Ok(())
    }

    /// The exponent value when the map does not depend on `|x − y|`.
    pub fn constant_value(&self) -> Option<f64> {
        if self.amplitude == 0.0 {
            Some(self.base)
        } else if self.frequency == 0.0 {
            Some(self.base + self.amplitude)
        } else {
            None
        }
    }

    pub fn min(&self) -> f64 {
        self.constant_value().unwrap_or(self.base - self.amplitude.abs())
    }

    pub fn max(&self) -> f64 {
        self.constant_value().unwrap_or(self.base + self.amplitude.abs())
    }

    fn is_constant(&self) -> bool {
        self.constant_value().is_some()
    }

    #[inline]
    pub fn at(&self, x: &[f64], y: &[f64]) -> f64 {
        if let Some(p) = self.constant_value() {
            return p;
        }
        let r = match x.len() {
            1 => (x[0] - y[0]).abs(),
            _ => x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt(),
        };
        self.base + self.amplitude * (self.frequency * r).cos()
    }

    fn radial(&self) -> Radial {
        if self.is_constant() {
            Radial::Constant
        } else {
            Radial::Periodic { period: 2.0 * PI / self.frequency.abs() }
        }
    }
}

#[inline]
fn pow(t: f64, p: f64) -> f64 {
    if p == 2.0 {
        t * t
    } else {
        t.powf(p)
    }
}

fn check_dim(dim: usize) -> Result<()> {
    if dim == 1 || dim == 2 {
        Ok(())
    } else {
        Err(Error::InvalidNFunction(format!("dimension must be 1 or 2, got {dim}")))
    }
}

/// `G_{x,y}(t) = t^{p(x,y)}`.
#[derive(Debug, Clone, PartialEq)]
pub struct VariableExponent {
    exponent: ExponentMap,
    dim: usize,
}

impl VariableExponent {
    pub fn new(exponent: ExponentMap, dim: usize) -> Result<Self> {
        exponent.validate()?;
        check_dim(dim)?;
        Ok(VariableExponent { exponent, dim })
    }

    pub fn constant(p: f64, dim: usize) -> Result<Self> {
        Self::new(ExponentMap::constant(p), dim)
    }

    pub fn exponent(&self) -> &ExponentMap {
        &self.exponent
    }
}

impl NFunction for VariableExponent {
    fn family(&self) -> &'static str {
        "variable_exponent"
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn index_bounds(&self) -> IndexBounds {
        IndexBounds::new(self.exponent.min(), self.exponent.max())
    }

    fn freeze(&self, x: &[f64], y: &[f64]) -> Frozen {
        Frozen(self.exponent.at(x, y))
    }

    #[inline]
    fn eval_frozen(&self, frozen: Frozen, t: f64) -> f64 {
        pow(t, frozen.0)
    }

    fn deriv_frozen(&self, frozen: Frozen, t: f64) -> f64 {
        if t == 0.0 {
            return 0.0;
        }
        frozen.0 * t.powf(frozen.0 - 1.0)
    }

    fn power_law(&self) -> Option<f64> {
        self.exponent.constant_value()
    }

    fn radial(&self) -> Radial {
        self.exponent.radial()
    }

    fn spec(&self) -> serde_json::Value {
        serde_json::json!({
            "family": self.family(),
            "base": self.exponent.base,
            "amplitude": self.exponent.amplitude,
            "frequency": self.exponent.frequency,
            "dim": self.dim,
        })
    }
}

/// Closed forms for the scalar Orlicz case `G_{x,y}(t) = M(t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum OrliczKind {
    /// `M(t) = t^p`.
    Power { p: f64 },
    /// `M(t) = t^p·ln(1 + c·t)`; index ratio lies in `(p, p + 1)`.
    PowerLog { p: f64, c: f64 },
    /// `M(t) = t^p + t^q` with `p ≤ q`.
    PowerSum { p: f64, q: f64 },
}

/// `G_{x,y}(t) = M(t)` for a scalar N-function `M`.
#[derive(Debug, Clone, PartialEq)]
pub struct Orlicz {
    kind: OrliczKind,
    dim: usize,
}

impl Orlicz {
    pub fn new(kind: OrliczKind, dim: usize) -> Result<Self> {
        check_dim(dim)?;
        let ok = match kind {
            OrliczKind::Power { p } => p.is_finite() && p > 0.0,
            OrliczKind::PowerLog { p, c } => p.is_finite() && c.is_finite() && p > 0.0 && c > 0.0,
            OrliczKind::PowerSum { p, q } => p.is_finite() && q.is_finite() && 0.0 < p && p <= q,
        };
        if !ok {
            return Err(Error::InvalidNFunction(format!("bad Orlicz parameters {kind:?}")));
        }
        Ok(Orlicz { kind, dim })
    }

    /// The `t²·ln(1 + e·t)` family.
    pub fn square_log(dim: usize) -> Self {
        Orlicz { kind: OrliczKind::PowerLog { p: 2.0, c: E }, dim }
    }

    pub fn kind(&self) -> OrliczKind {
        self.kind
    }

    #[inline]
    fn m_value(&self, t: f64) -> f64 {
        match self.kind {
            OrliczKind::Power { p } => pow(t, p),
            OrliczKind::PowerLog { p, c } => pow(t, p) * (c * t).ln_1p(),
            OrliczKind::PowerSum { p, q } => pow(t, p) + pow(t, q),
        }
    }

    fn m_deriv(&self, t: f64) -> f64 {
        if t == 0.0 {
            return 0.0;
        }
        match self.kind {
            OrliczKind::Power { p } => p * t.powf(p - 1.0),
            OrliczKind::PowerLog { p, c } => {
                p * t.powf(p - 1.0) * (c * t).ln_1p() + t.powf(p) * c / (1.0 + c * t)
            }
            OrliczKind::PowerSum { p, q } => p * t.powf(p - 1.0) + q * t.powf(q - 1.0),
        }
    }
}

impl NFunction for Orlicz {
    fn family(&self) -> &'static str {
        "orlicz"
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn index_bounds(&self) -> IndexBounds {
        match self.kind {
            OrliczKind::Power { p } => IndexBounds::new(p, p),
            OrliczKind::PowerLog { p, .. } => IndexBounds::new(p, p + 1.0),
            OrliczKind::PowerSum { p, q } => IndexBounds::new(p, q),
        }
    }

    fn freeze(&self, _x: &[f64], _y: &[f64]) -> Frozen {
        Frozen(0.0)
    }

    #[inline]
    fn eval_frozen(&self, _frozen: Frozen, t: f64) -> f64 {
        self.m_value(t)
    }

    fn deriv_frozen(&self, _frozen: Frozen, t: f64) -> f64 {
        self.m_deriv(t)
    }

    fn power_law(&self) -> Option<f64> {
        match self.kind {
            OrliczKind::Power { p } => Some(p),
            _ => None,
        }
    }

    fn spec(&self) -> serde_json::Value {
        let mut v = serde_json::to_value(self.kind).expect("plain enum serializes");
        v["family"] = self.family().into();
        v["dim"] = self.dim.into();
        v
    }
}

/// Upper bound of `t·φ'(t)/φ(t)` for `φ(t) = ln(e + t)`; the supremum is ≈ 0.3178.
const LOG_FACTOR_INDEX: f64 = 1.0 / 3.0;

/// `G_{x,y}(t) = t^{p(x,y)}·ln(e + t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Product {
    exponent: ExponentMap,
    dim: usize,
}

impl Product {
    pub fn new(exponent: ExponentMap, dim: usize) -> Result<Self> {
        exponent.validate()?;
        check_dim(dim)?;
        Ok(Product { exponent, dim })
    }
}

impl NFunction for Product {
    fn family(&self) -> &'static str {
        "product"
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn index_bounds(&self) -> IndexBounds {
        IndexBounds::new(self.exponent.min(), self.exponent.max() + LOG_FACTOR_INDEX)
    }

    fn freeze(&self, x: &[f64], y: &[f64]) -> Frozen {
        Frozen(self.exponent.at(x, y))
    }

    #[inline]
    fn eval_frozen(&self, frozen: Frozen, t: f64) -> f64 {
        pow(t, frozen.0) * (E + t).ln()
    }

    fn deriv_frozen(&self, frozen: Frozen, t: f64) -> f64 {
        if t == 0.0 {
            return 0.0;
        }
        let p = frozen.0;
        p * t.powf(p - 1.0) * (E + t).ln() + t.powf(p) / (E + t)
    }

    fn radial(&self) -> Radial {
        self.exponent.radial()
    }

    fn spec(&self) -> serde_json::Value {
        serde_json::json!({
            "family": self.family(),
            "base": self.exponent.base,
            "amplitude": self.exponent.amplitude,
            "frequency": self.exponent.frequency,
            "dim": self.dim,
        })
    }
}

/// `Ĝ_x(t) = t^{p(x)}` with `p` jumping across the hyperplane `x_N = split`:
/// `right` on `x_N ≥ split`, `left` below.
///
/// Not translation invariant; meant for the scalar modular only (it is the
/// classical example of a bounded-exponent space where translation fails).
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseExponent {
    pub split: f64,
    pub left: f64,
    pub right: f64,
    dim: usize,
}

impl PiecewiseExponent {
    pub fn new(split: f64, left: f64, right: f64, dim: usize) -> Result<Self> {
        check_dim(dim)?;
        if !(split.is_finite() && left.is_finite() && right.is_finite() && left > 0.0 && right > 0.0)
        {
            return Err(Error::InvalidNFunction("piecewise exponents must be positive".into()));
        }
        Ok(PiecewiseExponent { split, left, right, dim })
    }

    fn exponent_at(&self, x: &[f64]) -> f64 {
        if x[x.len() - 1] >= self.split {
            self.right
        } else {
            self.left
        }
    }
}

impl NFunction for PiecewiseExponent {
    fn family(&self) -> &'static str {
        "piecewise_exponent"
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn index_bounds(&self) -> IndexBounds {
        IndexBounds::new(self.left.min(self.right), self.left.max(self.right))
    }

    fn freeze(&self, x: &[f64], _y: &[f64]) -> Frozen {
        Frozen(self.exponent_at(x))
    }

    fn eval_frozen(&self, frozen: Frozen, t: f64) -> f64 {
        pow(t, frozen.0)
    }

    fn deriv_frozen(&self, frozen: Frozen, t: f64) -> f64 {
        if t == 0.0 {
            return 0.0;
        }
        frozen.0 * t.powf(frozen.0 - 1.0)
    }

    fn translation_invariant(&self) -> bool {
        false
    }

    fn spec(&self) -> serde_json::Value {
        serde_json::json!({
            "family": self.family(),
            "split": self.split,
            "left": self.left,
            "right": self.right,
            "dim": self.dim,
        })
    }
}
