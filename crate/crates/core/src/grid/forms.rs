use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Deserialize;
use serde_json::Value;

use super::domain::dist;
use super::function::GridFunction;
use super::spec::GridSpec;
use crate::error::{Error, Result};
use crate::nfunction::registry_parse as parse;

/// Where a closed form can be nonzero.
#[derive(Debug, Clone, PartialEq)]
pub enum FormSupport {
    Empty,
    /// Contained in the closed box `[lo, hi]`.
    Compact { lo: Vec<f64>, hi: Vec<f64> },
    Unbounded,
}

/// A named function given by a formula, sampled onto grids by [`sample`].
pub trait ClosedForm: Send + Sync + fmt::Debug {
    fn name(&self) -> &'static str;

    fn dim(&self) -> usize;

    fn eval(&self, x: &[f64]) -> f64;

    /// Value used at grid node `x`; forms with point singularities override
    /// this to cap at a grid-dependent value.
    fn eval_on_grid(&self, x: &[f64], _spec: &GridSpec) -> f64 {
        self.eval(x)
    }

    fn support(&self) -> FormSupport;

    fn spec(&self) -> Value;
}

/// Samples `form` at every node of `spec`.
///
/// The result vanishes outside the box exactly when the form is declared
/// compactly supported inside the box.
pub fn sample(form: &dyn ClosedForm, spec: &GridSpec) -> Result<GridFunction> {
    if form.dim() != spec.dim() {
        return Err(Error::Domain(format!(
            "form `{}` is {}-dimensional, grid is {}-dimensional",
            form.name(),
            form.dim(),
            spec.dim()
        )));
    }
    let dim = spec.dim();
    let values: Vec<f64> = (0..spec.len())
        .into_par_iter()
        .map(|i| form.eval_on_grid(&spec.point(i)[..dim], spec))
        .collect();
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::Sampling {
            node: spec.point(i)[..dim].to_vec(),
            reason: format!("`{}` evaluated to {}", form.name(), values[i]),
        });
    }
    let zero_outside = match form.support() {
        FormSupport::Empty => true,
        FormSupport::Unbounded => false,
        FormSupport::Compact { lo, hi } => (0..dim).all(|a| spec.lo()[a] < lo[a] && hi[a] < spec.hi()[a]),
    };
    GridFunction::new(spec.clone(), values, zero_outside)
}

fn check_center(center: &[f64]) -> Result<usize> {
    if center.is_empty() || center.len() > 2 || center.iter().any(|c| !c.is_finite()) {
        return Err(Error::Parameter(format!("center must be a finite 1-D or 2-D point, got {center:?}")));
    }
    Ok(center.len())
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Parameter(format!("{name} must be positive, got {v}")))
    }
}

fn ball_support(center: &[f64], r: f64) -> FormSupport {
    FormSupport::Compact {
        lo: center.iter().map(|c| c - r).collect(),
        hi: center.iter().map(|c| c + r).collect(),
    }
}

/// `height·max(0, 1 − |x − center| / half_width)`.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tent {
    pub center: Vec<f64>,
    pub half_width: f64,
    #[serde(default = "one")]
    pub height: f64,
}

fn one() -> f64 {
    1.0
}

impl Tent {
    pub fn new(center: Vec<f64>, half_width: f64, height: f64) -> Result<Self> {
        check_center(&center)?;
        positive("half_width", half_width)?;
        if !height.is_finite() {
            return Err(Error::Parameter("height must be finite".into()));
        }
        Ok(Tent { center, half_width, height })
    }
}

impl ClosedForm for Tent {
    fn name(&self) -> &'static str {
        "tent"
    }

    fn dim(&self) -> usize {
        self.center.len()
    }

    fn eval(&self, x: &[f64]) -> f64 {
        self.height * (1.0 - dist(x, &self.center) / self.half_width).max(0.0)
    }

    fn support(&self) -> FormSupport {
        ball_support(&self.center, self.half_width)
    }

    fn spec(&self) -> Value {
        serde_json::json!({"form": "tent", "center": self.center, "half_width": self.half_width, "height": self.height})
    }
}

/// `height·exp(−1/(1 − |x − center|²/radius²))` inside the ball, 0 outside.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bump {
    pub center: Vec<f64>,
    #[serde(default = "one")]
    pub radius: f64,
    #[serde(default = "one")]
    pub height: f64,
}

impl Bump {
    pub fn new(center: Vec<f64>, radius: f64, height: f64) -> Result<Self> {
        check_center(&center)?;
        positive("radius", radius)?;
        if !height.is_finite() {
            return Err(Error::Parameter("height must be finite".into()));
        }
        Ok(Bump { center, radius, height })
    }

    /// The standard bump centred at the origin with unit radius and height.
    pub fn standard(dim: usize) -> Self {
        Bump { center: vec![0.0; dim], radius: 1.0, height: 1.0 }
    }
}

impl ClosedForm for Bump {
    fn name(&self) -> &'static str {
        "bump"
    }

    fn dim(&self) -> usize {
        self.center.len()
    }

    fn eval(&self, x: &[f64]) -> f64 {
        let q: f64 = x.iter().zip(&self.center).map(|(a, c)| (a - c) * (a - c)).sum::<f64>()
            / (self.radius * self.radius);
        if q < 1.0 {
            self.height * (-1.0 / (1.0 - q)).exp()
        } else {
            0.0
        }
    }

    fn support(&self) -> FormSupport {
        ball_support(&self.center, self.radius)
    }

    fn spec(&self) -> Value {
        serde_json::json!({"form": "bump", "center": self.center, "radius": self.radius, "height": self.height})
    }
}

/// `value` everywhere.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Constant {
    pub value: f64,
    #[serde(default = "one_usize")]
    pub dim: usize,
}

fn one_usize() -> usize {
    1
}

impl ClosedForm for Constant {
    fn name(&self) -> &'static str {
        "constant"
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, _x: &[f64]) -> f64 {
        self.value
    }

    fn support(&self) -> FormSupport {
        if self.value == 0.0 {
            FormSupport::Empty
        } else {
            FormSupport::Unbounded
        }
    }

    fn spec(&self) -> Value {
        serde_json::json!({"form": "constant", "value": self.value, "dim": self.dim})
    }
}

/// `value` on the closed box `[lo, hi]`, 0 elsewhere.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Window {
    pub value: f64,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl ClosedForm for Window {
    fn name(&self) -> &'static str {
        "window"
    }

    fn dim(&self) -> usize {
        self.lo.len()
    }

    fn eval(&self, x: &[f64]) -> f64 {
        let inside = x.iter().zip(self.lo.iter().zip(&self.hi)).all(|(v, (a, b))| a <= v && v <= b);
        if inside {
            self.value
        } else {
            0.0
        }
    }

    fn support(&self) -> FormSupport {
        FormSupport::Compact { lo: self.lo.clone(), hi: self.hi.clone() }
    }

    fn spec(&self) -> Value {
        serde_json::json!({"form": "window", "value": self.value, "lo": self.lo, "hi": self.hi})
    }
}

/// `x^{−1/d}` on `[0, 1)`, 0 elsewhere; on a grid the value at the origin is
/// capped at the value of the smallest positive node.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KovacikF {
    pub d: f64,
}

impl ClosedForm for KovacikF {
    fn name(&self) -> &'static str {
        "kovacik_f"
    }

    fn dim(&self) -> usize {
        1
    }

    fn eval(&self, x: &[f64]) -> f64 {
        if 0.0 <= x[0] && x[0] < 1.0 {
            x[0].powf(-1.0 / self.d)
        } else {
            0.0
        }
    }

    fn eval_on_grid(&self, x: &[f64], spec: &GridSpec) -> f64 {
        if x[0] == 0.0 {
            let lo = spec.lo()[0];
            let k = ((-lo) / spec.h()).floor() + 1.0;
            let first_positive = lo + k * spec.h();
            return first_positive.powf(-1.0 / self.d);
        }
        self.eval(x)
    }

    fn support(&self) -> FormSupport {
        FormSupport::Compact { lo: vec![0.0], hi: vec![1.0] }
    }

    fn spec(&self) -> Value {
        serde_json::json!({"form": "kovacik_f", "d": self.d})
    }
}

/// The zero function.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Zero {
    #[serde(default = "one_usize")]
    pub dim: usize,
}

impl ClosedForm for Zero {
    fn name(&self) -> &'static str {
        "zero"
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, _x: &[f64]) -> f64 {
        0.0
    }

    fn support(&self) -> FormSupport {
        FormSupport::Empty
    }

    fn spec(&self) -> Value {
        serde_json::json!({"form": "zero", "dim": self.dim})
    }
}

pub type FormFactory = Box<dyn Fn(&Value) -> Result<Arc<dyn ClosedForm>> + Send + Sync>;

/// Named closed forms, keyed by the `form` tag of a config object.
pub struct FormRegistry {
    factories: BTreeMap<String, FormFactory>,
}

impl fmt::Debug for FormRegistry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FormRegistry").field("forms", &self.names()).finish()
    }
}

impl Default for FormRegistry {
    fn default() -> Self {
        Self::with_builtin()
    }
}

fn check_dim(dim: usize) -> Result<()> {
    if dim == 1 || dim == 2 {
        Ok(())
    } else {
        Err(Error::Parameter(format!("dimension must be 1 or 2, got {dim}")))
    }
}

impl FormRegistry {
    pub fn empty() -> Self {
        FormRegistry { factories: BTreeMap::new() }
    }

    /// `tent`, `bump`, `constant`, `window`, `kovacik_f` and `zero`.
    pub fn with_builtin() -> Self {
        let mut reg = Self::empty();
        reg.register("tent", |v| {
            let t: Tent = parse(v, "function")?;
            Ok(Arc::new(Tent::new(t.center, t.half_width, t.height)?))
        });
        reg.register("bump", |v| {
            let b: Bump = parse(v, "function")?;
            Ok(Arc::new(Bump::new(b.center, b.radius, b.height)?))
        });
        reg.register("constant", |v| {
            let c: Constant = parse(v, "function")?;
            check_dim(c.dim)?;
            if !c.value.is_finite() {
                return Err(Error::Parameter("constant must be finite".into()));
            }
            Ok(Arc::new(c))
        });
        reg.register("window", |v| {
            let w: Window = parse(v, "function")?;
            check_dim(w.lo.len())?;
            if w.hi.len() != w.lo.len() || w.lo.iter().zip(&w.hi).any(|(a, b)| !(a < b)) || !w.value.is_finite() {
                return Err(Error::Parameter("window needs finite value and lo < hi".into()));
            }
            Ok(Arc::new(w))
        });
        reg.register("kovacik_f", |v| {
            let k: KovacikF = parse(v, "function")?;
            positive("d", k.d)?;
            Ok(Arc::new(k))
        });
        reg.register("zero", |v| {
            let z: Zero = parse(v, "function")?;
            check_dim(z.dim)?;
            Ok(Arc::new(z))
        });
        reg
    }

    pub fn register<F>(&mut self, name: &str, factory: F)
    where
        F: Fn(&Value) -> Result<Arc<dyn ClosedForm>> + Send + Sync + 'static,
    {
        self.factories.insert(name.to_string(), Box::new(factory));
    }

    pub fn names(&self) -> Vec<&str> {
        self.factories.keys().map(String::as_str).collect()
    }

    pub fn build(&self, spec: &Value) -> Result<Arc<dyn ClosedForm>> {
        let tag = spec.get("form").and_then(Value::as_str).ok_or_else(|| Error::Config {
            path: "function.form".into(),
            reason: "missing string tag".into(),
        })?;
        let factory = self.factories.get(tag).ok_or_else(|| Error::Config {
            path: "function.form".into(),
            reason: format!("unknown form `{tag}`, known: {}", self.names().join(", ")),
        })?;
        let mut params = spec.clone();
        params.as_object_mut().expect("has a tag, so is an object").remove("form");
        factory(&params)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn zero_form_samples_to_zero() {
        let spec = GridSpec::interval(-1.0, 1.0, 5).unwrap();
        let g = sample(&Zero { dim: 1 }, &spec).unwrap();
        assert!(g.is_zero() && g.zero_outside());
    }

    #[test]
    fn tent_on_coarse_grid() {
        let spec = GridSpec::interval(-5.0, 5.0, 11).unwrap();
        let g = sample(&Tent::new(vec![-2.0], 1.0, 1.0).unwrap(), &spec).unwrap();
        assert_eq!(g.values(), &[0., 0., 0., 1., 0., 0., 0., 0., 0., 0., 0.]);
        assert!(g.zero_outside());
    }

    #[test]
    fn bump_2d_matches_formula() {
        let spec = GridSpec::cube(-1.5, 1.5, 31, 2).unwrap();
        let g = sample(&Bump::standard(2), &spec).unwrap();
        for i in 0..spec.len() {
            let p = spec.point(i);
            let r2 = p[0] * p[0] + p[1] * p[1];
            let want = if r2 < 1.0 { (-1.0 / (1.0 - r2)).exp() } else { 0.0 };
            assert_eq!(g.values()[i], want);
        }
    }

    #[test]
    fn support_reaching_the_edge_is_not_zero_outside() {
        let spec = GridSpec::interval(-1.0, 1.0, 9).unwrap();
        let f = sample(&KovacikF { d: 3.0 }, &spec).unwrap();
        assert!(!f.zero_outside());
        assert_eq!(f.values()[4], 0.25f64.powf(-1.0 / 3.0));
        assert_eq!(f.values()[8], 0.0);
        assert_eq!(f.values()[3], 0.0);
    }

    #[test]
    fn registry_builds_forms_and_reports_paths() {
        let reg = FormRegistry::with_builtin();
        let t = reg.build(&json!({"form": "tent", "center": [-2.0], "half_width": 1.0})).unwrap();
        assert_eq!(t.eval(&[-2.5]), 0.5);
        let again = reg.build(&t.spec()).unwrap();
        assert_eq!(again.spec(), t.spec());
        match reg.build(&json!({"form": "bump", "center": "x"})).unwrap_err() {
            Error::Config { path, .. } => assert_eq!(path, "function.center"),
            e => panic!("{e}"),
        }
        assert!(reg.build(&json!({"form": "spline"})).is_err());
        assert!(reg.build(&json!({"form": "tent", "center": [0.0], "half_width": -1.0})).is_err());
    }

    #[test]
    fn non_finite_sample_is_reported() {
        let spec = GridSpec::interval(-1.0, 1.0, 5).unwrap();
        let err = sample(&KovacikF { d: 3.0 }, &spec).map(|_| ());
        assert!(err.is_ok());
        #[derive(Debug)]
        struct Pole;
        impl ClosedForm for Pole {
            fn name(&self) -> &'static str { "pole" }
            fn dim(&self) -> usize { 1 }
            fn eval(&self, x: &[f64]) -> f64 { 1.0 / x[0] }
            fn support(&self) -> FormSupport { FormSupport::Unbounded }
            fn spec(&self) -> Value { Value::Null }
        }
        match sample(&Pole, &spec) {
            Err(Error::Sampling { node, .. }) => assert_eq!(node, vec![0.0]),
            other => panic!("{other:?}"),
        }
    }
}
