//! The translate, cut-off, mollify approximation of a function vanishing
//! outside a hypograph, and the convergence experiments built on the same
//! operators.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, Stage};
use crate::grid::{sample, support, vanishes_outside, Domain, GridFunction, GridSpec, KovacikF, Region};
use crate::modular::{
    fractional_parts, modular_fractional_ladder, modular_scalar_ladder, scalar_value, FractionalOptions,
    ModularResult,
};
use crate::nfunction::{NFunction, PiecewiseExponent};
use crate::norms::{gagliardo_seminorm_with, scalar_norm, sobolev_norm_with, DEFAULT_REL_TOL};
use crate::smoothing::{
    apply_cutoff, cutoff, cutoff_slope, hypograph_margin, mollify, translate, ApproximationOperator,
    SmoothingParams,
};

/// Search settings of [`approximate`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// First translation tried; rounded to whole grid steps, then halved.
    pub delta_start: f64,
    /// First cut-off index; doubled up to the largest index the box allows.
    pub j_start: u32,
    /// First mollifier radius; halved down to twice the spacing.
    pub epsilon_start: f64,
    pub rel_tol: f64,
    pub quadrature: FractionalOptions,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            delta_start: 0.5,
            j_start: 1,
            epsilon_start: 0.5,
            rel_tol: DEFAULT_REL_TOL,
            quadrature: FractionalOptions::default(),
        }
    }
}

/// One evaluated rung of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub series: String,
    pub param: f64,
    pub modular: f64,
    pub norm: f64,
    pub error_estimate: f64,
}

pub const CSV_HEADER: &str = "series,param,modular,norm,error_estimate";

/// Writes rows as CSV with a `series` column in front of the parameter.
pub fn write_rows_csv<W: Write>(rows: &[ConvergenceRow], mut w: W) -> Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for r in rows {
        writeln!(w, "{},{},{},{},{}", r.series, r.param, r.modular, r.norm, r.error_estimate)?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApproximationReport {
    pub params: SmoothingParams,
    pub err_translate: f64,
    pub err_cutoff: f64,
    pub err_mollify: f64,
    /// `‖ρ − u‖_{W^{s,G}}` computed directly.
    pub total_err: f64,
    /// `ρ` vanishes outside the domain and its support lies strictly inside it.
    pub support_ok: bool,
    /// `Supp ρ ⊆ Supp u + B_γ` with `γ = 2(ε + δ)`.
    pub vicinity_ok: bool,
    /// `Supp ρ ⊆ B_{j+2} ∩ (Supp u_δ + B_{2ε})`.
    pub chain_ok: bool,
    pub gamma: f64,
    /// Hypograph margin of `Supp u_δ` in `B_{j+2}`.
    pub margin: f64,
    /// Measured slope of the cut-off `τ_j` on the grid.
    pub cutoff_slope: f64,
    /// Every parameter tried, in order, with the resulting stage error.
    pub attempts: Vec<ConvergenceRow>,
    pub rho: GridFunction,
}

impl ApproximationReport {
    pub fn success(&self) -> bool {
        self.total_err < self.params.sigma && self.support_ok && self.vicinity_ok && self.chain_ok
    }
}

struct Evaluator<'a> {
    nf: &'a dyn NFunction,
    s: f64,
    opts: FractionalOptions,
    rel_tol: f64,
}

impl Evaluator<'_> {
    /// Modular and norm of `a − b` in `W^{s,G}`.
    fn distance(&self, a: &GridFunction, b: &GridFunction) -> Result<(f64, f64)> {
        let diff = a.sub(b)?;
        let modular = scalar_value(self.nf, &diff)? + fractional_parts(self.nf, &diff, self.s, &self.opts)?.total();
        let norm = sobolev_norm_with(self.nf, &diff, self.s, &self.opts, self.rel_tol)?.value;
        Ok((modular, norm))
    }
}

fn halving_ladder(start: f64, floor: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut v = start.max(floor);
    while v >= floor * (1.0 - 1e-12) {
        out.push(v);
        v *= 0.5;
    }
    if out.last().is_some_and(|&l| l > floor * (1.0 + 1e-12)) {
        out.push(floor);
    }
    out
}

fn delta_steps(start: f64, h: f64) -> Vec<usize> {
    let mut k = ((start / h).round() as usize).max(1);
    let mut out = Vec::new();
    while k >= 1 {
        out.push(k);
        k /= 2;
    }
    out
}

fn shift_up(u: &GridFunction, delta: f64) -> Result<GridFunction> {
    let dim = u.dim();
    let mut h = vec![0.0; dim];
    h[dim - 1] = delta;
    translate(u, &h, &Domain::FullSpace { dim })
}

/// Largest cut-off index whose outer ball fits in the box.
pub fn max_cutoff_index(spec: &GridSpec) -> u32 {
    let mut j = 0u32;
    while spec.contains_ball(j as f64 + 2.0) {
        j += 1;
    }
    j
}

/// Searches `δ`, then `j`, then `ε` so that each stage costs less than `σ/3`
/// in `W^{s,G}` and `2ε` stays below the hypograph margin, and returns
/// `ρ = (τ_j u_δ) * J_ε`.
pub fn approximate(
    u: &GridFunction,
    dom: &Domain,
    nf: &dyn NFunction,
    s: f64,
    sigma: f64,
    cfg: &PipelineConfig,
) -> Result<ApproximationReport> {
    if !matches!(dom, Domain::Hypograph { .. }) {
        return Err(Error::Precondition("approximate needs a hypograph domain".into()));
    }
    dom.validate()?;
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::Parameter(format!("sigma must be positive, got {sigma}")));
    }
    if !u.zero_outside() {
        return Err(Error::Precondition("u must vanish outside the box".into()));
    }
    if !vanishes_outside(u, dom, 0.0) {
        return Err(Error::Precondition("u does not vanish outside the domain".into()));
    }
    let spec = u.spec();
    let h = spec.h();
    let budget = sigma / 3.0;
    let eval = Evaluator { nf, s, opts: cfg.quadrature, rel_tol: cfg.rel_tol };
    let mut attempts = Vec::new();
    let mut record = |series: &str, param: f64, (modular, norm): (f64, f64)| {
        attempts.push(ConvergenceRow { series: series.into(), param, modular, norm, error_estimate: 0.0 });
        norm
    };

    // Halve the shift until it meets the budget, then bisect back up to the
    // largest passing whole-step shift: a larger shift leaves a wider margin
    // for the mollifier.
    let mut chosen = None;
    let mut failed: Option<usize> = None;
    for k in delta_steps(cfg.delta_start, h) {
        let delta = k as f64 * h;
        let ud = shift_up(u, delta)?;
        let err = record("translate", delta, eval.distance(&ud, u)?);
        if err < budget {
            chosen = Some((k, ud, err));
            break;
        }
        failed = Some(k);
    }
    let (mut k, mut ud, mut err_translate) = chosen.ok_or_else(|| Error::BudgetInfeasible {
        stage: Stage::Translate,
        reason: format!("no shift down to δ = {h} meets σ/3 = {budget}"),
    })?;
    if let Some(mut bad) = failed {
        while bad - k > 1 {
            let mid = k + (bad - k) / 2;
            let cand = shift_up(u, mid as f64 * h)?;
            let err = record("translate", mid as f64 * h, eval.distance(&cand, u)?);
            if err < budget {
                (k, ud, err_translate) = (mid, cand, err);
            } else {
                bad = mid;
            }
        }
    }
    let delta = k as f64 * h;

    let j_max = max_cutoff_index(spec);
    let mut js = Vec::new();
    let mut j = cfg.j_start.max(1);
    while j < j_max {
        js.push(j);
        j = j.saturating_mul(2);
    }
    if j_max >= 1 {
        js.push(j_max);
    }
    let mut chosen = None;
    for &j in &js {
        let cut = apply_cutoff(&ud, j)?;
        let err = record("cutoff", j as f64, eval.distance(&cut, &ud)?);
        if err < budget {
            chosen = Some((j, cut, err));
            break;
        }
    }
    let (j, cut, err_cutoff) = chosen.ok_or_else(|| Error::BudgetInfeasible {
        stage: Stage::Cutoff,
        reason: format!("no cut-off index up to {j_max} meets σ/3 = {budget}"),
    })?;

    let support_ud = support(&ud, 0.0);
    let margin = hypograph_margin(&support_ud, j as f64 + 2.0, dom)?;
    let mut chosen = None;
    for eps in halving_ladder(cfg.epsilon_start, 2.0 * h) {
        if 2.0 * eps >= margin {
            continue;
        }
        let rho = mollify(&cut, eps)?;
        let err = record("mollify", eps, eval.distance(&rho, &cut)?);
        if err < budget {
            chosen = Some((eps, rho, err));
            break;
        }
    }
    let (epsilon, rho, err_mollify) = chosen.ok_or_else(|| Error::BudgetInfeasible {
        stage: Stage::Mollify,
        reason: format!(
            "no ε in [2h, {}] with 2ε < margin {margin} meets σ/3 = {budget}",
            cfg.epsilon_start
        ),
    })?;

    let gamma = 2.0 * (epsilon + delta);
    let reach = support(u, 0.0).inflated(gamma + 1.0)?;
    if let Some((lo, hi)) = reach.bounding_box() {
        let fits = (0..spec.dim()).all(|a| spec.lo()[a] <= lo[a] && hi[a] <= spec.hi()[a]);
        if !fits {
            return Err(Error::Precondition(format!(
                "the box must contain Supp u inflated by 2(ε + δ) + 1 = {}",
                gamma + 1.0
            )));
        }
    }
    let total_err = eval.distance(&rho, u)?.1;
    let rho_support = support(&rho, 0.0);
    let support_ok = vanishes_outside(&rho, dom, 0.0) && rho_support.all_probes(|p| dom.contains(p));
    let vicinity_ok = rho_support.subset_of(&support(u, 0.0).inflated(gamma)?)?;
    let origin = vec![0.0; spec.dim()];
    let chain_ok = rho_support.within_ball(&origin, j as f64 + 2.0)
        && rho_support.subset_of(&support_ud.inflated(2.0 * epsilon)?)?;
    Ok(ApproximationReport {
        params: SmoothingParams { delta, j, epsilon, sigma },
        err_translate,
        err_cutoff,
        err_mollify,
        total_err,
        support_ok,
        vicinity_ok,
        chain_ok,
        gamma,
        margin,
        cutoff_slope: cutoff_slope(&cutoff(j, spec)?),
        attempts,
        rho,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub kind: String,
    pub rows: Vec<ConvergenceRow>,
    pub verdict: bool,
}

impl ConvergenceReport {
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        write_rows_csv(&self.rows, w)
    }
}

/// Allowed relative increase between successive rungs of a decreasing sweep.
pub const RUNG_SLACK: f64 = 0.10;

/// Final norm below `target` and no rung more than [`RUNG_SLACK`] above the previous one.
pub fn decreasing_verdict(norms: &[f64], target: f64) -> bool {
    !norms.is_empty()
        && norms.last().is_some_and(|&v| v < target)
        && norms.windows(2).all(|w| w[1] <= w[0] * (1.0 + RUNG_SLACK) + 1e-12)
}

fn two_level(nf: &dyn NFunction, diff: &GridFunction, s: f64, opts: &FractionalOptions) -> Result<(f64, f64)> {
    let n = diff.spec().n();
    let ladder = if (n - 1) % 2 == 0 && n > 3 { vec![diff.coarsen(2)?, diff.clone()] } else { vec![diff.clone()] };
    let scalar = modular_scalar_ladder(nf, &ladder)?;
    let frac = modular_fractional_ladder(nf, &ladder, s, opts)?;
    Ok((scalar.value + frac.value, scalar.error_estimate + frac.error_estimate))
}

/// `‖op(u; p) − u‖_{W^{s,G}}` along a ladder of parameters.
///
/// Each row also carries the modular of the difference and the change of that
/// modular between the working grid and the grid with twice the spacing.
#[allow(clippy::too_many_arguments)]
pub fn convergence_experiment(
    op: &dyn ApproximationOperator,
    u: &GridFunction,
    dom: &Domain,
    nf: &dyn NFunction,
    s: f64,
    ladder: &[f64],
    target: f64,
    rel_tol: f64,
) -> Result<ConvergenceReport> {
    if ladder.is_empty() {
        return Err(Error::Parameter("empty parameter ladder".into()));
    }
    let opts = FractionalOptions::default();
    let mut rows = Vec::with_capacity(ladder.len());
    for &p in ladder {
        let v = op.apply(u, p, dom)?;
        let diff = v.sub(u)?;
        let (modular, error_estimate) = two_level(nf, &diff, s, &opts)?;
        let norm = sobolev_norm_with(nf, &diff, s, &opts, rel_tol)?.value;
        rows.push(ConvergenceRow { series: op.name().into(), param: p, modular, norm, error_estimate });
    }
    let norms: Vec<f64> = rows.iter().map(|r| r.norm).collect();
    Ok(ConvergenceReport { kind: op.name().into(), verdict: decreasing_verdict(&norms, target), rows })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleReport {
    pub r: f64,
    pub d: f64,
    pub shift: f64,
    pub closed_form: f64,
    pub f: ModularResult,
    pub shifted: ModularResult,
    pub report: ConvergenceReport,
}

/// The shift-instability example on `Ω = (−1, 1)`: `p = d` on `(−1, 0)`,
/// `p = r` on `[0, 1)`, `f(x) = x^{−1/d}` on `[0, 1)`.
///
/// `J(f) = d/(d − r)` is finite while `J(T_h f)` behaves like `∫ (x + h)^{−1}`
/// near `−h`, so its ladder grows logarithmically. The verdict holds when the
/// shifted ladder is flagged divergent and the ladder of `f` is not.
pub fn counterexample_experiment(r: f64, d: f64, shift: f64, grid_ladder: &[usize]) -> Result<CounterexampleReport> {
    if !(r >= 1.0 && d > r && d.is_finite()) {
        return Err(Error::Parameter(format!("need 1 ≤ r < d, got r = {r}, d = {d}")));
    }
    if grid_ladder.is_empty() {
        return Err(Error::Parameter("empty grid ladder".into()));
    }
    let nf = PiecewiseExponent::new(0.0, d, r, 1)?;
    let dom = Domain::Box { lo: vec![-1.0], hi: vec![1.0] };
    let form = KovacikF { d };
    let mut fs = Vec::new();
    let mut shifted = Vec::new();
    for &n in grid_ladder {
        let spec = GridSpec::interval(-1.0, 1.0, n)?;
        let f = sample(&form, &spec)?;
        shifted.push(translate(&f, &[shift], &dom)?);
        fs.push(f);
    }
    let f_res = modular_scalar_ladder(&nf, &fs)?;
    let shifted_res = modular_scalar_ladder(&nf, &shifted)?;
    let mut rows = Vec::new();
    for (series, res, gfs) in [("f", &f_res, &fs), ("shifted", &shifted_res, &shifted)] {
        let mut prev: Option<f64> = None;
        for (level, g) in res.refinement_levels.iter().zip(gfs) {
            rows.push(ConvergenceRow {
                series: series.into(),
                param: level.n as f64,
                modular: level.value,
                norm: scalar_norm(&nf, g, DEFAULT_REL_TOL)?.value,
                error_estimate: prev.map_or(0.0, |p| (level.value - p).abs()),
            });
            prev = Some(level.value);
        }
    }
    let verdict = shifted_res.diverged && !f_res.diverged;
    Ok(CounterexampleReport {
        r,
        d,
        shift,
        closed_form: d / (d - r),
        f: f_res,
        shifted: shifted_res,
        report: ConvergenceReport { kind: "counterexample".into(), rows, verdict },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinitenessReport {
    pub modular: ModularResult,
    pub report: ConvergenceReport,
}

/// Fractional modular of a ladder of samples of one function; the verdict is
/// that the ladder settles (see [`ModularResult::is_cauchy`]) within `rel`.
pub fn finiteness_experiment(
    nf: &dyn NFunction,
    ladder: &[GridFunction],
    s: f64,
    rel: f64,
    rel_tol: f64,
) -> Result<FinitenessReport> {
    let opts = FractionalOptions::default();
    let modular = modular_fractional_ladder(nf, ladder, s, &opts)?;
    let mut rows = Vec::new();
    let mut prev: Option<f64> = None;
    for (level, g) in modular.refinement_levels.iter().zip(ladder) {
        rows.push(ConvergenceRow {
            series: "fractional".into(),
            param: level.n as f64,
            modular: level.value,
            norm: gagliardo_seminorm_with(nf, g, s, &opts, rel_tol)?.value,
            error_estimate: prev.map_or(0.0, |p| (level.value - p).abs()),
        });
        prev = Some(level.value);
    }
    let verdict = modular.is_cauchy(rel);
    Ok(FinitenessReport { report: ConvergenceReport { kind: "finiteness".into(), rows, verdict }, modular })
}

/// Cells of `region` lying within `tol` of the boundary of `dom`.
pub fn near_boundary(region: &Region, dom: &Domain, tol: f64) -> bool {
    !region.all_probes(|p| dom.boundary_distance(p) >= tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Bump, Tent};
    use crate::nfunction::VariableExponent;
    use crate::smoothing::{CutoffOp, MollifyOp, TranslateOp};

    fn square() -> VariableExponent {
        VariableExponent::constant(2.0, 1).unwrap()
    }

    #[test]
    fn ladders() {
        assert_eq!(halving_ladder(0.5, 0.1), vec![0.5, 0.25, 0.125, 0.1]);
        assert_eq!(halving_ladder(0.4, 0.1), vec![0.4, 0.2, 0.1]);
        assert_eq!(delta_steps(0.5, 0.1), vec![5, 2, 1]);
        let spec = GridSpec::interval(-4.0, 4.0, 9).unwrap();
        assert_eq!(max_cutoff_index(&spec), 3);
    }

    #[test]
    fn interior_smooth_data_succeeds_at_first_triple() {
        let spec = GridSpec::interval(-6.0, 6.0, 1201).unwrap();
        let u = sample(&Bump::new(vec![-3.0], 1.0, 1.0).unwrap(), &spec).unwrap();
        let dom = Domain::half_space(1, 0.0);
        let cfg = PipelineConfig { delta_start: 0.01, j_start: 4, epsilon_start: 0.04, ..Default::default() };
        let rep = approximate(&u, &dom, &square(), 0.25, 1.0, &cfg).unwrap();
        assert!(rep.success(), "{:?}", (rep.total_err, rep.support_ok, rep.vicinity_ok, rep.chain_ok));
        assert_eq!(rep.attempts.len(), 3);
        assert!(rep.total_err <= rep.err_translate + rep.err_cutoff + rep.err_mollify + 3e-8);
    }

    #[test]
    fn infeasible_budget_names_the_stage() {
        let spec = GridSpec::interval(-4.0, 4.0, 81).unwrap();
        let u = sample(&Tent::new(vec![-1.0], 1.0, 1.0).unwrap(), &spec).unwrap();
        let dom = Domain::half_space(1, 0.0);
        let err = approximate(&u, &dom, &square(), 0.25, 1e-3, &PipelineConfig::default()).unwrap_err();
        assert!(matches!(err, Error::BudgetInfeasible { stage: Stage::Translate, .. }), "{err}");
    }

    #[test]
    fn cutoff_sweep_reaches_zero() {
        let spec = GridSpec::interval(-8.0, 8.0, 321).unwrap();
        let u = sample(&Tent::new(vec![-1.5], 1.0, 1.0).unwrap(), &spec).unwrap();
        let dom = Domain::half_space(1, 0.0);
        let ladder: Vec<f64> = (1..=6).map(f64::from).collect();
        let rep = convergence_experiment(&CutoffOp, &u, &dom, &square(), 0.25, &ladder, 0.05, 1e-8).unwrap();
        assert!(rep.verdict);
        assert!(rep.rows[2..].iter().all(|r| r.norm == 0.0));
        assert!(rep.rows[0].norm > 0.0);
    }

    #[test]
    fn identity_rungs_vanish() {
        let spec = GridSpec::interval(-4.0, 4.0, 161).unwrap();
        let u = sample(&Tent::new(vec![-2.0], 1.0, 1.0).unwrap(), &spec).unwrap();
        let dom = Domain::half_space(1, 0.0);
        let rep = convergence_experiment(&TranslateOp, &u, &dom, &square(), 0.25, &[0.0], 0.05, 1e-8).unwrap();
        assert!(rep.verdict && rep.rows[0].norm == 0.0);
    }

    #[test]
    fn mollify_sweep_decreases() {
        let spec = GridSpec::interval(-5.0, 5.0, 1001).unwrap();
        let u = sample(&Tent::new(vec![-2.0], 1.0, 1.0).unwrap(), &spec).unwrap();
        let dom = Domain::half_space(1, 0.0);
        let rep =
            convergence_experiment(&MollifyOp, &u, &dom, &square(), 0.25, &[0.8, 0.4, 0.2, 0.1], 1.0, 1e-8).unwrap();
        assert!(rep.rows.windows(2).all(|w| w[1].norm < w[0].norm));
    }

    #[test]
    fn counterexample_separates_f_from_its_shift() {
        let rep = counterexample_experiment(1.5, 3.0, 0.25, &[257, 513, 1025, 2049]).unwrap();
        assert!(rep.report.verdict, "{:?}", rep.report.rows);
        assert!((rep.f.value - 2.0).abs() < 0.1);
        assert!(counterexample_experiment(3.0, 3.0, 0.25, &[257]).is_err());
    }

    #[test]
    fn finiteness_of_bump() {
        let ladder: Vec<GridFunction> = [129, 257, 513]
            .iter()
            .map(|&n| sample(&Bump::standard(1), &GridSpec::interval(-2.0, 2.0, n).unwrap()).unwrap())
            .collect();
        let rep = finiteness_experiment(&square(), &ladder, 0.5, 0.05, 1e-8).unwrap();
        assert!(rep.report.verdict, "{:?}", rep.report.rows);
        let zeros: Vec<GridFunction> = ladder.iter().map(|g| GridFunction::zeros(g.spec().clone())).collect();
        let rep = finiteness_experiment(&square(), &zeros, 0.5, 0.05, 1e-8).unwrap();
        assert!(rep.report.verdict && rep.report.rows.iter().all(|r| r.modular == 0.0));
    }
}
