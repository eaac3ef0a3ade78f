use std::collections::BTreeMap;
use std::sync::Arc;

use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::Value;

use super::{ExponentMap, NFunction, Orlicz, OrliczKind, PiecewiseExponent, Product, VariableExponent};
use crate::error::{Error, Result};

/// Builds an N-function from its config object (the `family` tag already removed).
pub type NFunctionFactory = Box<dyn Fn(&Value) -> Result<Arc<dyn NFunction>> + Send + Sync>;

/// Maps family tags to factories.
pub struct NFunctionRegistry {
    factories: BTreeMap<String, NFunctionFactory>,
}

impl std::fmt::Debug for NFunctionRegistry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("NFunctionRegistry").field("families", &self.names()).finish()
    }
}

pub(crate) fn parse<T: DeserializeOwned>(value: &Value, prefix: &str) -> Result<T> {
    serde_path_to_error::deserialize(value.clone()).map_err(|e| {
        let inner = e.path().to_string();
        let path = if inner == "." { prefix.to_string() } else { format!("{prefix}.{inner}") };
        Error::Config { path, reason: e.into_inner().to_string() }
    })
}

fn default_dim() -> usize {
    1
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ExponentParams {
    base: f64,
    #[serde(default)]
    amplitude: f64,
    #[serde(default = "one")]
    frequency: f64,
    #[serde(default = "default_dim")]
    dim: usize,
}

fn one() -> f64 {
    1.0
}

impl ExponentParams {
    fn map(&self) -> ExponentMap {
        ExponentMap {
            base: self.base,
            amplitude: self.amplitude,
            frequency: self.frequency,
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PiecewiseParams {
    split: f64,
    left: f64,
    right: f64,
    #[serde(default = "default_dim")]
    dim: usize,
}

impl Default for NFunctionRegistry {
    fn default() -> Self {
        Self::with_builtin()
    }
}

impl NFunctionRegistry {
    pub fn empty() -> Self {
        NFunctionRegistry { factories: BTreeMap::new() }
    }

    /// Registry holding `variable_exponent`, `orlicz`, `product` and `piecewise_exponent`.
    pub fn with_builtin() -> Self {
        let mut reg = Self::empty();
        reg.register("variable_exponent", |v| {
            let p: ExponentParams = parse(v, "nfunction")?;
            Ok(Arc::new(VariableExponent::new(p.map(), p.dim)?))
        });
        reg.register("product", |v| {
            let p: ExponentParams = parse(v, "nfunction")?;
            Ok(Arc::new(Product::new(p.map(), p.dim)?))
        });
        reg.register("orlicz", |v| {
            let mut v = v.clone();
            let dim = match v.as_object_mut().and_then(|o| o.remove("dim")) {
                None => 1,
                Some(d) => parse::<usize>(&d, "nfunction.dim")?,
            };
            let kind: OrliczKind = parse(&v, "nfunction")?;
            Ok(Arc::new(Orlicz::new(kind, dim)?))
        });
        reg.register("piecewise_exponent", |v| {
            let p: PiecewiseParams = parse(v, "nfunction")?;
            Ok(Arc::new(PiecewiseExponent::new(p.split, p.left, p.right, p.dim)?))
        });
        reg
    }

    pub fn register<F>(&mut self, family: &str, factory: F)
    where
        F: Fn(&Value) -> Result<Arc<dyn NFunction>> + Send + Sync + 'static,
    {
        self.factories.insert(family.to_string(), Box::new(factory));
    }

    pub fn names(&self) -> Vec<&str> {
        self.factories.keys().map(String::as_str).collect()
    }

    /// Builds from an object such as `{"family": "orlicz", "kind": "power", "p": 2}`.
    pub fn build(&self, spec: &Value) -> Result<Arc<dyn NFunction>> {
        let obj = spec.as_object().ok_or_else(|| Error::Config {
            path: "nfunction".into(),
            reason: "expected an object".into(),
        })?;
        let family = obj.get("family").and_then(Value::as_str).ok_or_else(|| Error::Config {
            path: "nfunction.family".into(),
            reason: "missing string tag".into(),
        })?;
        let factory = self.factories.get(family).ok_or_else(|| Error::Config {
            path: "nfunction.family".into(),
            reason: format!("unknown family `{family}`, known: {}", self.names().join(", ")),
        })?;
        let mut params = spec.clone();
        params.as_object_mut().expect("checked above").remove("family");
        factory(&params)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn builds_each_builtin_and_round_trips_spec() {
        let reg = NFunctionRegistry::with_builtin();
        let specs = [
            json!({"family": "variable_exponent", "base": 2.5, "amplitude": 0.5, "dim": 1}),
            json!({"family": "orlicz", "kind": "power_log", "p": 2.0, "c": 2.0, "dim": 2}),
            json!({"family": "product", "base": 2.0}),
            json!({"family": "piecewise_exponent", "split": 0.0, "left": 3.0, "right": 1.5}),
        ];
        for s in specs {
            let nf = reg.build(&s).unwrap();
            let again = reg.build(&nf.spec()).unwrap();
            assert_eq!(nf.spec(), again.spec());
            assert_eq!(nf.value(&vec![0.1; nf.dim()], &vec![0.3; nf.dim()], 1.7),
                again.value(&vec![0.1; nf.dim()], &vec![0.3; nf.dim()], 1.7));
        }
    }

    #[test]
    fn reports_field_paths() {
        let reg = NFunctionRegistry::with_builtin();
        let err = reg.build(&json!({"family": "variable_exponent", "base": "x"})).unwrap_err();
        match err {
            Error::Config { path, .. } => assert_eq!(path, "nfunction.base"),
            e => panic!("{e}"),
        }
        let err = reg.build(&json!({"family": "nope"})).unwrap_err();
        assert!(matches!(err, Error::Config { .. }));
        let err = reg.build(&json!({"family": "product", "base": 2.0, "extra": 1})).unwrap_err();
        assert!(matches!(err, Error::Config { .. }));
    }

    #[test]
    fn custom_factories_can_be_registered() {
        let mut reg = NFunctionRegistry::empty();
        reg.register("square", |_| Ok(Arc::new(VariableExponent::constant(2.0, 1)?)));
        let nf = reg.build(&json!({"family": "square"})).unwrap();
        assert_eq!(nf.value(&[0.0], &[0.0], 3.0), 9.0);
    }
}
