//! Generalized N-functions `G(x, y, t)`.
//!
//! Every family implements [`NFunction`]. Families are looked up by their tag
//! through [`NFunctionRegistry`], which is how experiment configs select them.

mod check;
mod conjugate;
mod families;
mod registry;

use std::fmt;

pub use check::{
    check_structure, estimate_g_bounds, NFunctionReport, SamplePoint, SamplingSpec, Violation,
};
pub use conjugate::{conjugate, conjugate_relaxation, CONJUGATE_REL_TOL};
pub use families::{ExponentMap, Orlicz, OrliczKind, PiecewiseExponent, Product, VariableExponent};
pub use registry::{NFunctionFactory, NFunctionRegistry};
pub(crate) use conjugate::conjugate_frozen;
pub(crate) use registry::parse as registry_parse;

use crate::error::{ensure_finite, Error, Result};

/// Spatial data of `G_{x,y}` frozen for one pair `(x, y)`.
///
/// For the exponent families this is the local exponent `p(x, y)`; families
/// without spatial dependence ignore it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Frozen(pub f64);

/// Declared index bounds `g⁻ ≤ g(x,y,t)·t / G(x,y,t) ≤ g⁺`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct IndexBounds {
    pub lower: f64,
    pub upper: f64,
}

impl IndexBounds {
    pub fn new(lower: f64, upper: f64) -> Self {
        IndexBounds { lower, upper }
    }

    /// Index bounds of the Young conjugate: `(g⁺/(g⁺−1), g⁻/(g⁻−1))`.
    ///
    /// An upper bound of `g⁻ ≤ 1` has no finite conjugate index and maps to infinity.
    pub fn conjugate(&self) -> IndexBounds {
        let dual = |g: f64| if g > 1.0 { g / (g - 1.0) } else { f64::INFINITY };
        IndexBounds { lower: dual(self.upper), upper: dual(self.lower) }
    }
}

/// How a translation-invariant family depends on the distance `|x − y|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Radial {
    /// `G_{x,y}` does not depend on `(x, y)` at all.
    Constant,
    /// `G_{x,y}` depends on `|x − y|` through a periodic function with this period.
    Periodic { period: f64 },
}

/// A generalized N-function.
///
/// Implementations must be convex and strictly increasing in `t` with
/// `G(x, y, 0) = 0`. The unchecked methods (`value`, `derivative`, the frozen
/// variants) are the quadrature hot path and do not validate their inputs; use
/// [`eval_value`] and [`eval_derivative`] at API boundaries.
pub trait NFunction: Send + Sync + fmt::Debug {
    /// Registry tag of the family.
    fn family(&self) -> &'static str;

    fn dim(&self) -> usize;

    fn index_bounds(&self) -> IndexBounds;

    fn freeze(&self, x: &[f64], y: &[f64]) -> Frozen;

    fn eval_frozen(&self, frozen: Frozen, t: f64) -> f64;

    fn deriv_frozen(&self, frozen: Frozen, t: f64) -> f64;

    fn value(&self, x: &[f64], y: &[f64], t: f64) -> f64 {
        self.eval_frozen(self.freeze(x, y), t)
    }

    fn derivative(&self, x: &[f64], y: &[f64], t: f64) -> f64 {
        self.deriv_frozen(self.freeze(x, y), t)
    }

    /// `Some(p)` when `G(x, y, t) = c·t^p` with the same `p` everywhere, so that
    /// modulars scale exactly as `J(u/λ) = λ^{-p} J(u)`.
    fn power_law(&self) -> Option<f64> {
        None
    }

    /// `true` when `G` depends on `(x, y)` only through `|x − y|`.
    fn translation_invariant(&self) -> bool {
        true
    }

    fn radial(&self) -> Radial {
        Radial::Constant
    }

    /// Parameters as they appear in a config file.
    fn spec(&self) -> serde_json::Value;
}

fn check_point(nf: &dyn NFunction, name: &str, p: &[f64]) -> Result<()> {
    if p.len() != nf.dim() {
        return Err(Error::Domain(format!(
            "{name} has dimension {}, N-function expects {}",
            p.len(),
            nf.dim()
        )));
    }
    for &c in p {
        ensure_finite(name, c)?;
    }
    Ok(())
}

fn check_args(nf: &dyn NFunction, x: &[f64], y: &[f64], t: f64) -> Result<()> {
    check_point(nf, "x", x)?;
    check_point(nf, "y", y)?;
    ensure_finite("t", t)?;
    if t < 0.0 {
        return Err(Error::Domain(format!("t must be nonnegative, got {t}")));
    }
    Ok(())
}

/// `G_{x,y}(t)`; at `y = x` this is the diagonal `Ĝ_x(t)`.
pub fn eval_value(nf: &dyn NFunction, x: &[f64], y: &[f64], t: f64) -> Result<f64> {
    check_args(nf, x, y, t)?;
    if t == 0.0 {
        return Ok(0.0);
    }
    Ok(nf.value(x, y, t))
}

/// `g(x, y, t) = ∂G/∂t`, with `g(x, y, 0) = 0`.
pub fn eval_derivative(nf: &dyn NFunction, x: &[f64], y: &[f64], t: f64) -> Result<f64> {
    check_args(nf, x, y, t)?;
    if t == 0.0 {
        return Ok(0.0);
    }
    Ok(nf.derivative(x, y, t))
}

/// Diagonal `Ĝ_x(t) = G(x, x, t)`.
pub fn eval_diagonal(nf: &dyn NFunction, x: &[f64], t: f64) -> Result<f64> {
    eval_value(nf, x, x, t)
}
