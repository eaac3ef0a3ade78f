//! Independent oracles for the numerical kernels and the command line.

use std::process::Command;

use musielak::grid::{sample, Bump, Domain, GridFunction, GridSpec, Tent};
use musielak::modular::{off_diagonal_sum, pair_value, PairFunction};
use musielak::nfunction::{eval_derivative, eval_value, ExponentMap, NFunction, VariableExponent};
use musielak::pipeline::{approximate, PipelineConfig};
use musielak::quadrature::pairwise_sum;

fn wavy() -> VariableExponent {
    VariableExponent::new(ExponentMap { base: 2.5, amplitude: 0.5, frequency: 1.0 }, 1).unwrap()
}

#[test]
fn off_diagonal_sum_matches_direct_double_sum_bit_for_bit() {
    let spec = GridSpec::interval(-4.0, 4.0, 1025).unwrap();
    let u = sample(&Tent::new(vec![-0.5], 1.5, 1.0).unwrap(), &spec).unwrap();
    let nf = wavy();
    let s = 0.375;
    let (h, n, v) = (spec.h(), spec.n(), u.values());
    let rows: Vec<f64> = (0..n)
        .map(|i| {
            let mut acc = 0.0;
            for j in 0..n {
                if i == j || (v[i] == 0.0 && v[j] == 0.0) {
                    continue;
                }
                let d = (i as i64 - j as i64).unsigned_abs() as f64 * h;
                let x = spec.coord(0, i);
                let y = spec.coord(0, j);
                acc += spec.weight(j) * (nf.value(&[x], &[y], (v[i] - v[j]).abs() * d.powf(-s)) * (1.0 / d));
            }
            spec.weight(i) * acc
        })
        .collect();
    let oracle = pairwise_sum(&rows);
    let got = off_diagonal_sum(&nf, &u, s).unwrap();
    assert_eq!(got.to_bits(), oracle.to_bits(), "{got} vs {oracle}");
}

#[test]
fn derivative_matches_finite_differences() {
    let nf = wavy();
    for &(x, y, t) in &[(0.3, -1.2, 0.7), (2.0, 0.5, 3.0), (-1.0, -1.0, 0.05)] {
        let step = 1e-6 * t;
        let fd = (nf.value(&[x], &[y], t + step) - nf.value(&[x], &[y], t - step)) / (2.0 * step);
        let g = nf.derivative(&[x], &[y], t);
        assert!((fd - g).abs() <= 1e-6 * g.abs(), "{fd} vs {g}");
    }
}

#[test]
fn variable_exponent_at_the_origin() {
    let nf = wavy();
    assert!((eval_value(&nf, &[0.0], &[0.0], 2.0).unwrap() - 8.0).abs() < 1e-12);
    assert!((eval_derivative(&nf, &[0.0], &[0.0], 2.0).unwrap() - 12.0).abs() < 1e-12);
    assert!(eval_value(&nf, &[0.0], &[0.0], -1.0).is_err());
}

#[test]
fn planar_bump_samples_the_closed_form_exactly() {
    let spec = GridSpec::cube(-2.0, 2.0, 41, 2).unwrap();
    let g = sample(&Bump::standard(2), &spec).unwrap();
    for (i, &v) in g.values().iter().enumerate() {
        let p = spec.point(i);
        let r2 = p[0] * p[0] + p[1] * p[1];
        let expect = if r2 < 1.0 { (-1.0 / (1.0 - r2)).exp() } else { 0.0 };
        assert_eq!(v, expect, "node {p:?}");
    }
}

#[test]
fn clamping_examples() {
    let spec = GridSpec::interval(-2.0, 2.0, 5).unwrap();
    let u = GridFunction::new(spec, vec![0.0, -3.0, 0.5, 2.0, 0.0], true).unwrap();
    assert_eq!(u.clamp(1.0).unwrap().values(), &[0.0, -1.0, 0.5, 1.0, 0.0]);
    assert_eq!(u.clamp(3.0).unwrap(), u);
    assert_eq!(u.clamp(1.0).unwrap().clamp(1.0).unwrap(), u.clamp(1.0).unwrap());
}

#[test]
fn pair_modular_of_difference_quotient_reproduces_off_diagonal_sum() {
    let spec = GridSpec::interval(-3.0, 3.0, 193).unwrap();
    let u = sample(&Tent::new(vec![0.0], 1.0, 2.0).unwrap(), &spec).unwrap();
    let nf = wavy();
    let v = PairFunction::difference_quotient(&u, 0.5).unwrap();
    let a = pair_value(&nf, &v).unwrap();
    let b = off_diagonal_sum(&nf, &u, 0.5).unwrap();
    assert!((a - b).abs() <= 1e-10 * b, "{a} vs {b}");
}

#[test]
fn pipeline_is_stable_on_its_own_output() {
    let spec = GridSpec::interval(-6.0, 6.0, 1201).unwrap();
    let u = sample(&Bump::new(vec![-3.0], 1.0, 1.0).unwrap(), &spec).unwrap();
    let dom = Domain::half_space(1, 0.0);
    let nf = VariableExponent::new(ExponentMap::constant(2.0), 1).unwrap();
    let cfg = PipelineConfig { delta_start: 0.01, j_start: 4, epsilon_start: 0.04, ..PipelineConfig::default() };
    let first = approximate(&u, &dom, &nf, 0.25, 1.0, &cfg).unwrap();
    assert!(first.success());
    let second = approximate(&first.rho, &dom, &nf, 0.25, 1.0, &cfg).unwrap();
    assert!(second.success());
    assert!(second.total_err <= 1.1 * first.total_err, "{} vs {}", second.total_err, first.total_err);
}

fn config_path(name: &str) -> String {
    format!("{}/../../configs/{name}.json", env!("CARGO_MANIFEST_DIR"))
}

fn musielak(args: &[&str]) -> std::process::Output {
    let out = tempfile::tempdir().unwrap();
    let mut argv: Vec<String> = args.iter().map(|s| s.to_string()).collect();
    argv.extend(["--out".to_string(), out.path().to_str().unwrap().to_string()]);
    Command::new(env!("CARGO_BIN_EXE_musielak")).args(&argv).output().unwrap()
}

#[test]
fn exit_codes() {
    let ok = musielak(&["check-nfunc", "--config", &config_path("check-nfunc")]);
    assert_eq!(ok.status.code(), Some(0), "{}", String::from_utf8_lossy(&ok.stderr));

    let unknown = musielak(&["frobnicate"]);
    assert_eq!(unknown.status.code(), Some(2));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"grid": {"lo": [0], "hi": [1], "n": "many"}}"#).unwrap();
    let malformed = musielak(&["norm", "--config", bad.to_str().unwrap()]);
    assert_eq!(malformed.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&malformed.stderr).contains("grid.n"));

    let tight = dir.path().join("tight.json");
    let text = std::fs::read_to_string(config_path("approximate-interior")).unwrap();
    let mut cfg: serde_json::Value = serde_json::from_str(&text).unwrap();
    cfg["sigma"] = serde_json::json!(1e-6);
    std::fs::write(&tight, cfg.to_string()).unwrap();
    let budget = musielak(&["approximate", "--config", tight.to_str().unwrap()]);
    assert_eq!(budget.status.code(), Some(3), "{}", String::from_utf8_lossy(&budget.stderr));
}
