//! Command-line front end.
//!
//! Every subcommand reads a JSON config, writes `<subcommand>.json` and
//! `<subcommand>.csv` into the output directory and prints one verdict line.
//!
//! Exit codes: 0 success, 1 verdict false, 2 usage, config or evaluation
//! error, 3 infeasible error budget.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::grid::{sample, Domain, FormRegistry, GridFunction, GridSpec};
use crate::modular::{modular_fractional_ladder, modular_scalar_ladder, coarsening_ladder, FractionalOptions};
use crate::nfunction::{check_structure, NFunction, NFunctionRegistry, SamplingSpec};
use crate::norms::{gagliardo_seminorm_with, scalar_norm, NormResult, DEFAULT_REL_TOL};
use crate::pipeline::{
    approximate, convergence_experiment, counterexample_experiment, finiteness_experiment, write_rows_csv,
    PipelineConfig,
};
use crate::smoothing::OperatorRegistry;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERDICT_FALSE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_BUDGET: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "musielak", version, about = "Fractional Musielak-Sobolev toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON experiment config.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (created if missing).
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Seed for the random pairs of `check-nfunc`.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
enum Command {
    /// Structural inequalities of an N-function.
    CheckNfunc,
    /// Luxemburg norm, Gagliardo seminorm and W^{s,G} norm of a function.
    Norm,
    /// Scalar and fractional modulars with a refinement ladder.
    Modular,
    /// Translate, cut off and mollify a function into a hypograph.
    Approximate,
    /// Sweep one approximation operator along a parameter ladder.
    Converge,
    /// Shift instability of a variable-exponent space.
    Counterexample,
    /// Refinement ladder of a fractional modular.
    Finiteness,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::CheckNfunc => "check-nfunc",
            Command::Norm => "norm",
            Command::Modular => "modular",
            Command::Approximate => "approximate",
            Command::Converge => "converge",
            Command::Counterexample => "counterexample",
            Command::Finiteness => "finiteness",
        }
    }
}

fn default_tol() -> f64 {
    1e-9
}

fn default_rel_tol() -> f64 {
    DEFAULT_REL_TOL
}

fn default_levels() -> usize {
    3
}

fn default_target() -> f64 {
    0.05
}

fn default_shift() -> f64 {
    0.25
}

fn default_cauchy() -> f64 {
    0.05
}

/// Union of the fields the subcommands read; each one checks for what it needs.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub nfunction: Option<Value>,
    #[serde(default)]
    pub function: Option<Value>,
    #[serde(default)]
    pub domain: Option<Domain>,
    #[serde(default)]
    pub grid: Option<GridSpec>,
    #[serde(default)]
    pub s: Option<f64>,
    #[serde(default)]
    pub sigma: Option<f64>,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_rel_tol")]
    pub rel_tol: f64,
    #[serde(default = "default_levels")]
    pub levels: usize,
    #[serde(default)]
    pub sampling: SamplingSpec,
    #[serde(default)]
    pub pipeline: PipelineConfig,
    #[serde(default)]
    pub quadrature: FractionalOptions,
    /// Operator swept by `converge`.
    #[serde(default)]
    pub kind: Option<String>,
    #[serde(default)]
    pub ladder: Vec<f64>,
    #[serde(default = "default_target")]
    pub target: f64,
    /// Node counts per axis for `counterexample` and `finiteness`.
    #[serde(default)]
    pub grid_ladder: Vec<usize>,
    #[serde(default)]
    pub r: Option<f64>,
    #[serde(default)]
    pub d: Option<f64>,
    #[serde(default = "default_shift")]
    pub shift: f64,
    #[serde(default = "default_cauchy")]
    pub cauchy_rel: f64,
}

fn missing(path: &str) -> Error {
    Error::Config { path: path.into(), reason: "required by this subcommand".into() }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| Error::Config {
            path: e.path().to_string(),
            reason: e.into_inner().to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        for (path, v) in [("tol", self.tol), ("rel_tol", self.rel_tol), ("target", self.target), ("cauchy_rel", self.cauchy_rel)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config { path: path.into(), reason: format!("must be positive, got {v}") });
            }
        }
        if let Some(sigma) = self.sigma {
            if !(sigma > 0.0 && sigma.is_finite()) {
                return Err(Error::Config { path: "sigma".into(), reason: format!("must be positive, got {sigma}") });
            }
        }
        if let Some(s) = self.s {
            if !(s > 0.0 && s < 1.0) {
                return Err(Error::Config { path: "s".into(), reason: format!("must lie in (0, 1), got {s}") });
            }
        }
        if let Some(dom) = &self.domain {
            dom.validate().map_err(|e| Error::Config { path: "domain".into(), reason: e.to_string() })?;
        }
        if let Some(f) = &self.function {
            FormRegistry::with_builtin().build(f)?;
        }
        if let Some(nf) = &self.nfunction {
            NFunctionRegistry::with_builtin().build(nf)?;
        }
        if let Some(kind) = &self.kind {
            OperatorRegistry::with_builtin().get(kind).map_err(|e| Error::Config {
                path: "kind".into(),
                reason: e.to_string(),
            })?;
        }
        Ok(())
    }

    fn nfunction(&self) -> Result<std::sync::Arc<dyn NFunction>> {
        NFunctionRegistry::with_builtin().build(self.nfunction.as_ref().ok_or_else(|| missing("nfunction"))?)
    }

    fn grid(&self) -> Result<&GridSpec> {
        self.grid.as_ref().ok_or_else(|| missing("grid"))
    }

    fn s(&self) -> Result<f64> {
        self.s.ok_or_else(|| missing("s"))
    }

    fn domain(&self) -> Result<&Domain> {
        self.domain.as_ref().ok_or_else(|| missing("domain"))
    }

    fn sample_on(&self, spec: &GridSpec) -> Result<GridFunction> {
        let form = FormRegistry::with_builtin().build(self.function.as_ref().ok_or_else(|| missing("function"))?)?;
        sample(form.as_ref(), spec)
    }
}

struct Outcome {
    verdict: bool,
    summary: String,
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    std::io::Write::write_all(&mut w, b"\n")?;
    Ok(())
}

fn norm_csv_row(name: &str, r: &NormResult) -> String {
    format!(
        "{name},{},{},{},{},{}\n",
        r.value, r.lambda_bracket.0, r.lambda_bracket.1, r.modular_at_norm, r.iterations
    )
}

fn dispatch(cmd: Command, cfg: &ExperimentConfig, seed: Option<u64>, out: &Path) -> Result<Outcome> {
    let json_path = out.join(format!("{}.json", cmd.name()));
    let csv_path = out.join(format!("{}.csv", cmd.name()));
    match cmd {
        Command::CheckNfunc => {
            let nf = cfg.nfunction()?;
            let mut sampling = cfg.sampling.clone();
            if let Some(seed) = seed {
                sampling.seed = seed;
            }
            let report = check_structure(nf.as_ref(), &sampling, cfg.tol);
            write_json(&json_path, &report)?;
            let mut csv = String::from("quantity,value\n");
            for (k, v) in [
                ("g_minus_est", report.g_minus_est),
                ("g_plus_est", report.g_plus_est),
                ("delta2_K", report.delta2_k),
                ("bf_C1", report.bf_c1),
                ("bf_C2", report.bf_c2),
                ("samples", sampling.sample_count() as f64),
                ("violations", report.violations.len() as f64),
            ] {
                csv.push_str(&format!("{k},{v}\n"));
            }
            fs::write(&csv_path, csv)?;
            Ok(Outcome {
                verdict: report.passed(),
                summary: format!(
                    "g in [{}, {}], K = {}, violations = {}",
                    report.g_minus_est,
                    report.g_plus_est,
                    report.delta2_k,
                    report.violations.len()
                ),
            })
        }
        Command::Norm => {
            let nf = cfg.nfunction()?;
            let u = cfg.sample_on(cfg.grid()?)?;
            let scalar = scalar_norm(nf.as_ref(), &u, cfg.rel_tol)?;
            let semi = gagliardo_seminorm_with(nf.as_ref(), &u, cfg.s()?, &cfg.quadrature, cfg.rel_tol)?;
            let total = scalar.value + semi.value;
            write_json(&json_path, &serde_json::json!({ "scalar": scalar, "seminorm": semi, "sobolev": total }))?;
            let mut csv = String::from("norm,value,lambda_lo,lambda_hi,modular_at_norm,iterations\n");
            csv.push_str(&norm_csv_row("scalar", &scalar));
            csv.push_str(&norm_csv_row("seminorm", &semi));
            csv.push_str(&format!("sobolev,{total},,,,\n"));
            fs::write(&csv_path, csv)?;
            Ok(Outcome {
                verdict: true,
                summary: format!(
                    "norm = {} in [{}, {}], modular at norm = {}; seminorm = {}; W norm = {total}",
                    scalar.value, scalar.lambda_bracket.0, scalar.lambda_bracket.1, scalar.modular_at_norm, semi.value
                ),
            })
        }
        Command::Modular => {
            let nf = cfg.nfunction()?;
            let u = cfg.sample_on(cfg.grid()?)?;
            let ladder = coarsening_ladder(&u, cfg.levels)?;
            let scalar = modular_scalar_ladder(nf.as_ref(), &ladder)?;
            let fractional = match cfg.s {
                Some(s) => Some(modular_fractional_ladder(nf.as_ref(), &ladder, s, &cfg.quadrature)?),
                None => None,
            };
            write_json(&json_path, &serde_json::json!({ "scalar": scalar, "fractional": fractional }))?;
            let mut csv = String::from("series,n,h,value\n");
            for (name, res) in [("scalar", Some(&scalar)), ("fractional", fractional.as_ref())] {
                for l in res.map(|r| r.refinement_levels.as_slice()).unwrap_or(&[]) {
                    csv.push_str(&format!("{name},{},{},{}\n", l.n, l.h, l.value));
                }
            }
            fs::write(&csv_path, csv)?;
            let diverged = scalar.diverged || fractional.as_ref().is_some_and(|f| f.diverged);
            Ok(Outcome {
                verdict: !diverged,
                summary: format!(
                    "scalar = {} (±{}), fractional = {}",
                    scalar.value,
                    scalar.error_estimate,
                    fractional.map_or("n/a".into(), |f| format!("{} (±{})", f.value, f.error_estimate))
                ),
            })
        }
        Command::Approximate => {
            let nf = cfg.nfunction()?;
            let u = cfg.sample_on(cfg.grid()?)?;
            let sigma = cfg.sigma.ok_or_else(|| missing("sigma"))?;
            let rep = approximate(&u, cfg.domain()?, nf.as_ref(), cfg.s()?, sigma, &cfg.pipeline)?;
            write_json(&json_path, &rep)?;
            write_rows_csv(&rep.attempts, BufWriter::new(File::create(&csv_path)?))?;
            Ok(Outcome {
                verdict: rep.success(),
                summary: format!(
                    "delta = {}, j = {}, epsilon = {}, total_err = {} (sigma {sigma}), support_ok = {}, vicinity_ok = {}, chain_ok = {}",
                    rep.params.delta, rep.params.j, rep.params.epsilon, rep.total_err, rep.support_ok, rep.vicinity_ok, rep.chain_ok
                ),
            })
        }
        Command::Converge => {
            let nf = cfg.nfunction()?;
            let u = cfg.sample_on(cfg.grid()?)?;
            let ops = OperatorRegistry::with_builtin();
            let op = ops.get(cfg.kind.as_deref().ok_or_else(|| missing("kind"))?)?;
            let rep = convergence_experiment(op, &u, cfg.domain()?, nf.as_ref(), cfg.s()?, &cfg.ladder, cfg.target, cfg.rel_tol)?;
            write_json(&json_path, &rep)?;
            rep.write_csv(BufWriter::new(File::create(&csv_path)?))?;
            Ok(Outcome {
                verdict: rep.verdict,
                summary: format!("{} final error = {}", rep.kind, rep.rows.last().map_or(f64::NAN, |r| r.norm)),
            })
        }
        Command::Counterexample => {
            let r = cfg.r.ok_or_else(|| missing("r"))?;
            let d = cfg.d.ok_or_else(|| missing("d"))?;
            let rep = counterexample_experiment(r, d, cfg.shift, &cfg.grid_ladder)?;
            write_json(&json_path, &rep)?;
            rep.report.write_csv(BufWriter::new(File::create(&csv_path)?))?;
            Ok(Outcome {
                verdict: rep.report.verdict,
                summary: format!(
                    "J(f) = {} (closed form {}), shifted diverged = {}",
                    rep.f.value, rep.closed_form, rep.shifted.diverged
                ),
            })
        }
        Command::Finiteness => {
            let nf = cfg.nfunction()?;
            let base = cfg.grid()?;
            if cfg.grid_ladder.is_empty() {
                return Err(missing("grid_ladder"));
            }
            let ladder = cfg
                .grid_ladder
                .iter()
                .map(|&n| cfg.sample_on(&GridSpec::new(base.lo().to_vec(), base.hi().to_vec(), n)?))
                .collect::<Result<Vec<_>>>()?;
            let rep = finiteness_experiment(nf.as_ref(), &ladder, cfg.s()?, cfg.cauchy_rel, cfg.rel_tol)?;
            write_json(&json_path, &rep)?;
            rep.report.write_csv(BufWriter::new(File::create(&csv_path)?))?;
            Ok(Outcome {
                verdict: rep.report.verdict,
                summary: format!("J = {} (±{})", rep.modular.value, rep.modular.error_estimate),
            })
        }
    }
}

/// Exit code for an error.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::BudgetInfeasible { .. } => EXIT_BUDGET,
        _ => EXIT_USAGE,
    }
}

/// Runs the command line `argv` (program name first) and returns the exit code.
pub fn run(argv: Vec<String>) -> i32 {
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let name = cli.command.name();
    let result = (|| -> Result<Outcome> {
        let path = cli.config.as_ref().ok_or_else(|| missing("--config"))?;
        let text = fs::read_to_string(path)?;
        let cfg = ExperimentConfig::from_json(&text)?;
        fs::create_dir_all(&cli.out)?;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads.unwrap_or(0))
            .build()
            .map_err(|e| Error::Parameter(e.to_string()))?;
        pool.install(|| dispatch(cli.command, &cfg, cli.seed, &cli.out))
    })();
    match result {
        Ok(o) => {
            println!("{name}: verdict={} {}", o.verdict, o.summary);
            if o.verdict {
                EXIT_OK
            } else {
                EXIT_VERDICT_FALSE
            }
        }
        Err(e) => {
            eprintln!("{name}: error: {e}");
            exit_code(&e)
        }
    }
}
