//! One test per acceptance criterion; each prints a single PASS/FAIL line.

use std::path::PathBuf;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use musielak::cli;
use musielak::grid::{sample, Bump, Domain, GridFunction, GridSpec, Tent, Window};
use musielak::modular::{fractional_parts, modular_fractional, scalar_value, FractionalOptions};
use musielak::nfunction::{
    check_structure, conjugate, conjugate_relaxation, ExponentMap, NFunction, Orlicz, Product, SamplingSpec,
    VariableExponent,
};
use musielak::norms::{gagliardo_seminorm, luxemburg_norm, scalar_norm};
use musielak::pipeline::{approximate, convergence_experiment, counterexample_experiment, PipelineConfig};
use musielak::smoothing::{CutoffOp, MollifyOp, TranslateOp};

fn verdict(n: u32, pass: bool, detail: String) {
    println!("criterion {n}: {} | {detail}", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "criterion {n} failed: {detail}");
}

fn varexp(dim: usize) -> VariableExponent {
    VariableExponent::new(ExponentMap { base: 2.5, amplitude: 0.5, frequency: 1.0 }, dim).unwrap()
}

fn square() -> VariableExponent {
    VariableExponent::constant(2.0, 1).unwrap()
}

fn tent_on(lo: f64, hi: f64, n: usize, center: f64) -> GridFunction {
    let spec = GridSpec::interval(lo, hi, n).unwrap();
    sample(&Tent::new(vec![center], 1.0, 1.0).unwrap(), &spec).unwrap()
}

#[test]
fn criterion_1_structural_inequalities() {
    let start = Instant::now();
    let sampling = SamplingSpec { random_pairs: 16, seed: 1, ..SamplingSpec::default() };
    let families: Vec<(&str, Box<dyn NFunction>)> = vec![
        ("variable exponent, N=1", Box::new(varexp(1))),
        ("variable exponent, N=2", Box::new(varexp(2))),
        ("Orlicz t^2 ln(1+e t), N=1", Box::new(Orlicz::square_log(1))),
        ("Orlicz t^2 ln(1+e t), N=2", Box::new(Orlicz::square_log(2))),
    ];
    let mut worst = 0;
    let mut details = Vec::new();
    for (name, nf) in &families {
        let rep = check_structure(nf.as_ref(), &sampling, 1e-9);
        worst = worst.max(rep.violations.len());
        details.push(format!("{name}: {} violations", rep.violations.len()));
    }
    let secs = start.elapsed().as_secs_f64();
    let samples = sampling.sample_count();
    verdict(
        1,
        worst == 0 && samples >= 4096 && secs < 5.0,
        format!("{} ; {samples} samples per family ; {secs:.2}s", details.join(", ")),
    );
}

#[test]
fn criterion_2_conjugate_oracle_and_young() {
    let mut worst: f64 = 0.0;
    for p in [2.0, 3.0] {
        let nf = VariableExponent::constant(p, 1).unwrap();
        for k in 0..=1000 {
            let tau = 0.1 * k as f64;
            let got = conjugate(&nf, &[0.0], &[0.0], tau).unwrap();
            // sup_s τs − s^p is attained at s = (τ/p)^{1/(p−1)}
            let want = if tau == 0.0 { 0.0 } else { tau * (tau / p).powf(1.0 / (p - 1.0)) * (1.0 - 1.0 / p) };
            let rel = if want == 0.0 { got.abs() } else { ((got - want) / want).abs() };
            worst = worst.max(rel);
        }
    }
    let nf = varexp(1);
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut young_failures = 0;
    for _ in 0..10_000 {
        let x = [rng.gen_range(-3.0..3.0)];
        let y = [rng.gen_range(-3.0..3.0)];
        let sigma: f64 = 10f64.powf(rng.gen_range(-3.0..2.0));
        let tau: f64 = 10f64.powf(rng.gen_range(-3.0..2.0));
        let g = nf.value(&x, &y, sigma);
        let gt = conjugate(&nf, &x, &y, tau).unwrap();
        if sigma * tau > g + gt + conjugate_relaxation(gt) + 1e-12 * (sigma * tau) {
            young_failures += 1;
        }
    }
    verdict(
        2,
        worst < 1e-8 && young_failures == 0,
        format!("max relative Legendre error {worst:.2e}; Young failures {young_failures}/10000"),
    );
}

fn corpus() -> Vec<GridFunction> {
    let spec = GridSpec::interval(-4.0, 4.0, 257).unwrap();
    vec![
        sample(&Tent::new(vec![-2.0], 1.0, 1.0).unwrap(), &spec).unwrap(),
        sample(&Tent::new(vec![0.5], 2.0, 3.0).unwrap(), &spec).unwrap(),
        sample(&Bump::new(vec![1.0], 1.5, 0.2).unwrap(), &spec).unwrap(),
        sample(&Window { value: 5.0, lo: vec![-1.0], hi: vec![1.0] }, &spec).unwrap(),
    ]
}

#[test]
fn criterion_3_luxemburg_correctness() {
    let spec = GridSpec::interval(0.0, 2.0, 65).unwrap();
    let c = 1.7;
    let u = GridFunction::from_fn(spec, false, |_| c).unwrap();
    let mut const_err: f64 = 0.0;
    for p in [1.5, 2.0, 3.0] {
        let nf = VariableExponent::constant(p, 1).unwrap();
        let want = c * 2f64.powf(1.0 / p);
        // bisection without the power-law shortcut
        let r = luxemburg_norm(|l| scalar_value(&nf, &u.scale(1.0 / l)), nf.index_bounds(), None, 1e-10).unwrap();
        const_err = const_err.max(((r.value - want) / want).abs());
    }

    let nfs: Vec<Box<dyn NFunction>> = vec![
        Box::new(varexp(1)),
        Box::new(Orlicz::square_log(1)),
        Box::new(Product::new(ExponentMap { base: 2.0, amplitude: 0.3, frequency: 2.0 }, 1).unwrap()),
        Box::new(square()),
    ];
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut hlo, mut hhi) = (f64::INFINITY, f64::NEG_INFINITY);
    let opts = FractionalOptions::default();
    for nf in &nfs {
        for u in corpus() {
            let a = scalar_norm(nf.as_ref(), &u, 1e-8).unwrap();
            let m = scalar_value(nf.as_ref(), &u.scale(1.0 / a.value)).unwrap();
            let b = gagliardo_seminorm(nf.as_ref(), &u, 0.25, 1e-8).unwrap();
            let mf = fractional_parts(nf.as_ref(), &u.scale(1.0 / b.value), 0.25, &opts).unwrap().total();
            for v in [m, mf] {
                lo = lo.min(v);
                hi = hi.max(v);
            }
            let ratio = scalar_norm(nf.as_ref(), &u.scale(2.0), 1e-8).unwrap().value / a.value;
            hlo = hlo.min(ratio);
            hhi = hhi.max(ratio);
        }
    }
    verdict(
        3,
        const_err < 1e-6 && lo >= 0.999 && hi <= 1.001 && (hlo - 2.0).abs() <= 1e-5 && (hhi - 2.0).abs() <= 1e-5,
        format!(
            "constant-norm rel err {const_err:.2e}; J(u/|u|) in [{lo:.6}, {hi:.6}]; |2u|/|u| in [{hlo:.7}, {hhi:.7}]"
        ),
    );
}

/// `Σ_{i≠j} h² (u_i − u_j)² / |x_i − x_j|^{1+2s}` over the box, straight from the closed form.
fn brute_force_box(lo: f64, hi: f64, n: usize, s: f64, u: impl Fn(f64) -> f64) -> f64 {
    let h = (hi - lo) / (n - 1) as f64;
    let x: Vec<f64> = (0..n).map(|i| lo + i as f64 * h).collect();
    let w: Vec<f64> = (0..n).map(|i| if i == 0 || i == n - 1 { 0.5 * h } else { h }).collect();
    let v: Vec<f64> = x.iter().map(|&t| u(t)).collect();
    let mut total = 0.0;
    for i in 0..n {
        let mut row = 0.0;
        for j in 0..n {
            if i != j {
                let d = (x[i] - x[j]).abs();
                row += w[j] * (v[i] - v[j]).powi(2) / d.powf(1.0 + 2.0 * s);
            }
        }
        total += w[i] * row;
    }
    total
}

#[test]
fn criterion_4_fractional_modular_oracle() {
    let start = Instant::now();
    let s = 0.25;
    let u = tent_on(-4.0, 0.0, 513, -2.0);
    let opts = FractionalOptions { exterior: false, ..FractionalOptions::default() };
    let parts = fractional_parts(&square(), &u, s, &opts).unwrap();
    let oracle = brute_force_box(-4.0, 0.0, 8 * 512 + 1, s, |x| (1.0 - (x + 2.0).abs()).max(0.0));
    let rel = (parts.total() - oracle).abs() / oracle;
    let ladder = modular_fractional(&square(), &u, s, 4).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let cauchy = ladder.is_cauchy(0.01) && !ladder.diverged;
    verdict(
        4,
        rel < 0.02 && cauchy && secs < 30.0,
        format!(
            "tiled {:.6} vs brute force {oracle:.6} (rel {rel:.2e}); ladder {:?} Cauchy={cauchy}; {secs:.2}s",
            parts.total(),
            ladder.refinement_levels.iter().map(|l| l.value).collect::<Vec<_>>()
        ),
    );
}

#[test]
fn criterion_5_lemma_ladders() {
    let dom = Domain::half_space(1, 0.0);
    let s = 0.25;
    let mut ok = true;
    let mut details = Vec::new();
    let cases: Vec<(&dyn musielak::smoothing::ApproximationOperator, GridFunction, Vec<f64>)> = vec![
        (&TranslateOp, tent_on(-4.0, 4.0, 4001, -2.0), vec![0.128, 0.064, 0.032, 0.016, 0.008, 0.004, 0.002]),
        (&CutoffOp, tent_on(-8.0, 8.0, 1601, -2.0), vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]),
        (&MollifyOp, tent_on(-5.0, 5.0, 2001, -2.0), vec![0.8, 0.4, 0.2, 0.1, 0.05, 0.025]),
    ];
    for (op, u, ladder) in cases {
        let start = Instant::now();
        let rep = convergence_experiment(op, &u, &dom, &square(), s, &ladder, 0.05, 1e-8).unwrap();
        let secs = start.elapsed().as_secs_f64();
        let last = rep.rows.last().unwrap().norm;
        ok &= rep.verdict && last < 0.05 && secs < 60.0;
        details.push(format!("{} final {last:.4} verdict {} {secs:.1}s", rep.kind, rep.verdict));
    }
    verdict(5, ok, details.join("; "));
}

#[test]
fn criterion_6_theorem_end_to_end() {
    let start = Instant::now();
    let u = tent_on(-3.0, 3.0, 512, -1.0);
    let dom = Domain::half_space(1, 0.0);
    let res = approximate(&u, &dom, &square(), 0.25, 0.1, &PipelineConfig::default());
    let secs = start.elapsed().as_secs_f64();
    match res {
        Ok(rep) => verdict(
            6,
            rep.success() && rep.params.delta > 0.0 && secs < 120.0,
            format!(
                "n=512: total_err {:.4}, support_ok {}, vicinity_ok {}, chain_ok {}; {secs:.1}s",
                rep.total_err, rep.support_ok, rep.vicinity_ok, rep.chain_ok
            ),
        ),
        Err(e) => verdict(6, false, format!("n=512: {e}; {secs:.2}s")),
    }
}

#[test]
fn criterion_6_companion_at_fine_resolution() {
    let start = Instant::now();
    let u = tent_on(-3.5, 3.5, 14001, -1.0);
    let dom = Domain::half_space(1, 0.0);
    let rep = approximate(&u, &dom, &square(), 0.25, 0.1, &PipelineConfig::default()).unwrap();
    let secs = start.elapsed().as_secs_f64();
    // independent check of ‖ρ − u‖ for G = t²: L² part, box double sum and the
    // closed-form tails of pairs leaving the box
    let d: Vec<f64> = rep.rho.values().iter().zip(u.values()).map(|(a, b)| a - b).collect();
    let spec = u.spec();
    let (n, h, s) = (spec.n(), spec.h(), 0.25);
    let w = |i: usize| if i == 0 || i == n - 1 { 0.5 * h } else { h };
    let l2: f64 = (0..n).map(|i| w(i) * d[i] * d[i]).sum::<f64>().sqrt();
    let nz: Vec<usize> = (0..n).filter(|&i| d[i] != 0.0).collect();
    let mut pairs = 0.0;
    for i in 0..n {
        let mut row = 0.0;
        let js: Box<dyn Iterator<Item = usize>> = if d[i] == 0.0 { Box::new(nz.iter().copied()) } else { Box::new(0..n) };
        for j in js {
            if j != i {
                let r = (i as f64 - j as f64).abs() * h;
                row += w(j) * (d[i] - d[j]).powi(2) / r.powf(1.0 + 2.0 * s);
            }
        }
        pairs += w(i) * row;
    }
    let tails: f64 = (0..n)
        .map(|i| {
            let x = -3.5 + i as f64 * h;
            let (a, b) = (x + 3.5, 3.5 - x);
            if d[i] == 0.0 {
                0.0
            } else {
                2.0 * w(i) * d[i] * d[i] * (a.powf(-2.0 * s) + b.powf(-2.0 * s)) / (2.0 * s)
            }
        })
        .sum();
    let oracle = l2 + (pairs + tails).sqrt();
    let agree = (oracle - rep.total_err).abs() <= 0.02 * oracle;
    println!(
        "criterion 6 companion (n=14001): delta {} j {} epsilon {} total_err {:.4} oracle {oracle:.4} support_ok {} vicinity_ok {} chain_ok {} {secs:.1}s",
        rep.params.delta, rep.params.j, rep.params.epsilon, rep.total_err, rep.support_ok, rep.vicinity_ok, rep.chain_ok
    );
    assert!(rep.success() && rep.params.delta > 0.0 && agree);
    assert!(rep.rho.values().iter().enumerate().all(|(i, v)| *v == 0.0 || spec.point(i)[0] < 0.0));
}

#[test]
fn criterion_7_counterexample() {
    let rep = counterexample_experiment(1.5, 3.0, 0.25, &[1025, 2049, 4097, 8193]).unwrap();
    let f_levels: Vec<f64> = rep.f.refinement_levels.iter().map(|l| l.value).collect();
    let within = f_levels.iter().all(|v| (v - 2.0).abs() <= 0.05 * 2.0);
    let shifted: Vec<f64> = rep.shifted.refinement_levels.iter().map(|l| l.value).collect();
    verdict(
        7,
        within && !rep.f.diverged && rep.shifted.diverged && shifted.len() == 4,
        format!("J(f) ladder {f_levels:?} (closed form 2); J(T_h f) ladder {shifted:?} diverged={}", rep.shifted.diverged),
    );
}

fn configs() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

#[test]
fn criterion_8_determinism_across_thread_counts() {
    let cases = [
        ("check-nfunc", "check-nfunc"),
        ("norm", "norm"),
        ("modular", "modular"),
        ("approximate", "approximate-interior"),
        ("converge", "converge-mollify"),
        ("counterexample", "counterexample"),
        ("finiteness", "finiteness"),
    ];
    let mut mismatches = Vec::new();
    for (sub, cfg) in cases {
        let path = configs().join(format!("{cfg}.json"));
        let mut outputs = Vec::new();
        for threads in ["1", "4"] {
            let dir = tempfile::tempdir().unwrap();
            let argv = ["musielak", sub, "--config", path.to_str().unwrap(), "--out", dir.path().to_str().unwrap(), "--threads", threads];
            let code = cli::run(argv.iter().map(|s| s.to_string()).collect());
            assert_eq!(code, 0, "{sub} exited with {code}");
            outputs.push(std::fs::read(dir.path().join(format!("{sub}.csv"))).unwrap());
        }
        if outputs[0] != outputs[1] {
            mismatches.push(sub);
        }
    }
    verdict(8, mismatches.is_empty(), format!("7 subcommands, 1 vs 4 threads; differing CSVs: {mismatches:?}"));
}
