//! Luxemburg norms, the fractional seminorm and the Hölder pairing.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::GridFunction;
use crate::modular::{fractional_parts, scalar_value, FractionalOptions};
use crate::nfunction::{conjugate_frozen, Frozen, IndexBounds, NFunction};
use crate::quadrature::pairwise_sum;

/// Default relative width at which bisection stops.
pub const DEFAULT_REL_TOL: f64 = 1e-8;

/// Bracket expansions tried before giving up on a modular that never drops to 1.
const MAX_EXPANSIONS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormResult {
    pub value: f64,
    pub lambda_bracket: (f64, f64),
    /// Bracket the bisection started from.
    pub initial_bracket: (f64, f64),
    pub modular_at_norm: f64,
    pub iterations: usize,
}

impl NormResult {
    fn zero() -> Self {
        NormResult {
            value: 0.0,
            lambda_bracket: (0.0, 0.0),
            initial_bracket: (0.0, 0.0),
            modular_at_norm: 0.0,
            iterations: 0,
        }
    }
}

/// `inf{λ > 0 : J(u/λ) ≤ 1}` for the evaluator `modular(λ) = J(u/λ)`.
///
/// With `m = J(u)`, the index bounds give `λ* ∈ [min(m^{1/g⁺}, m^{1/g⁻}),
/// max(m^{1/g⁺}, m^{1/g⁻})]`, which is the starting bracket. When `power_law`
/// is `Some(p)` the modular scales exactly and the norm is `m^{1/p}`.
pub fn luxemburg_norm<F>(
    mut modular: F,
    bounds: IndexBounds,
    power_law: Option<f64>,
    rel_tol: f64,
) -> Result<NormResult>
where
    F: FnMut(f64) -> Result<f64>,
{
    if !(rel_tol > 0.0) {
        return Err(Error::Parameter(format!("rel_tol must be positive, got {rel_tol}")));
    }
    let mut m = modular(1.0)?;
    let mut scale = 1.0;
    // An infinite modular at λ = 1 may still become finite further out.
    while !m.is_finite() {
        scale *= 2.0;
        if scale > 1e150 {
            return Err(Error::NotInSpace("the modular is infinite at every tested λ".into()));
        }
        m = modular(scale)?;
    }
    if m < 0.0 {
        return Err(Error::Precondition(format!("modular evaluated to {m}")));
    }
    if m == 0.0 {
        return Ok(NormResult::zero());
    }
    if let Some(p) = power_law {
        let value = scale * m.powf(1.0 / p);
        return Ok(NormResult {
            value,
            lambda_bracket: (value, value),
            initial_bracket: (value, value),
            modular_at_norm: m * (scale / value).powf(p),
            iterations: 0,
        });
    }
    let (a, b) = (m.powf(1.0 / bounds.upper), m.powf(1.0 / bounds.lower));
    let (mut lo, mut hi) = (scale * a.min(b), scale * a.max(b));

    // Guard against rounding in the bound exponents.
    let mut at_hi = modular(hi)?;
    let mut k = 0;
    while !(at_hi <= 1.0) {
        lo = hi;
        hi *= 2.0;
        at_hi = modular(hi)?;
        k += 1;
        if k > MAX_EXPANSIONS {
            return Err(Error::NotInSpace("J(u/λ) never drops to 1".into()));
        }
    }
    k = 0;
    while modular(lo)? <= 1.0 {
        hi = lo;
        lo *= 0.5;
        k += 1;
        if k > MAX_EXPANSIONS {
            return Ok(NormResult::zero());
        }
    }
    let initial = (lo, hi);
    at_hi = modular(hi)?;
    let mut iterations = 0;
    while hi - lo > rel_tol * hi {
        let mid = 0.5 * (lo + hi);
        let v = modular(mid)?;
        if v <= 1.0 {
            hi = mid;
            at_hi = v;
        } else {
            lo = mid;
        }
        iterations += 1;
    }
    Ok(NormResult {
        value: hi,
        lambda_bracket: (lo, hi),
        initial_bracket: initial,
        modular_at_norm: at_hi,
        iterations,
    })
}

/// `‖u‖_{L^Ĝ}` over the box at the resolution of `u`.
pub fn scalar_norm(nf: &dyn NFunction, u: &GridFunction, rel_tol: f64) -> Result<NormResult> {
    luxemburg_norm(
        |lambda| scalar_value(nf, &u.scale(1.0 / lambda)),
        nf.index_bounds(),
        nf.power_law(),
        rel_tol,
    )
}

/// `[u]_{s,G}` with the given quadrature options.
pub fn gagliardo_seminorm_with(
    nf: &dyn NFunction,
    u: &GridFunction,
    s: f64,
    opts: &FractionalOptions,
    rel_tol: f64,
) -> Result<NormResult> {
    luxemburg_norm(
        |lambda| Ok(fractional_parts(nf, &u.scale(1.0 / lambda), s, opts)?.total()),
        nf.index_bounds(),
        nf.power_law(),
        rel_tol,
    )
}

/// `[u]_{s,G}` with default quadrature options.
pub fn gagliardo_seminorm(nf: &dyn NFunction, u: &GridFunction, s: f64, rel_tol: f64) -> Result<NormResult> {
    gagliardo_seminorm_with(nf, u, s, &FractionalOptions::default(), rel_tol)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SobolevNorm {
    pub value: f64,
    pub scalar: NormResult,
    pub seminorm: NormResult,
}

/// `‖u‖_{W^{s,G}} = ‖u‖_{L^Ĝ} + [u]_{s,G}`.
pub fn sobolev_norm(nf: &dyn NFunction, u: &GridFunction, s: f64, rel_tol: f64) -> Result<SobolevNorm> {
    sobolev_norm_with(nf, u, s, &FractionalOptions::default(), rel_tol)
}

pub fn sobolev_norm_with(
    nf: &dyn NFunction,
    u: &GridFunction,
    s: f64,
    opts: &FractionalOptions,
    rel_tol: f64,
) -> Result<SobolevNorm> {
    let scalar = scalar_norm(nf, u, rel_tol)?;
    let seminorm = gagliardo_seminorm_with(nf, u, s, opts, rel_tol)?;
    Ok(SobolevNorm { value: scalar.value + seminorm.value, scalar, seminorm })
}

/// The Young conjugate `G̃` of another N-function, evaluated numerically.
#[derive(Debug, Clone)]
pub struct ConjugateNFunction<'a> {
    inner: &'a dyn NFunction,
}

impl<'a> ConjugateNFunction<'a> {
    pub fn new(inner: &'a dyn NFunction) -> Self {
        ConjugateNFunction { inner }
    }
}

impl NFunction for ConjugateNFunction<'_> {
    fn family(&self) -> &'static str {
        "conjugate"
    }

    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn index_bounds(&self) -> IndexBounds {
        self.inner.index_bounds().conjugate()
    }

    fn freeze(&self, x: &[f64], y: &[f64]) -> Frozen {
        self.inner.freeze(x, y)
    }

    fn eval_frozen(&self, frozen: Frozen, t: f64) -> f64 {
        conjugate_frozen(self.inner, frozen, t)
    }

    /// `G̃'(τ)` is the point where `g` reaches `τ`.
    fn deriv_frozen(&self, frozen: Frozen, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        let g = |s: f64| self.inner.deriv_frozen(frozen, s);
        let mut hi = 1.0;
        while g(hi) < t {
            hi *= 2.0;
            if hi > 1e300 {
                return f64::INFINITY;
            }
        }
        let mut lo = 0.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if g(mid) < t {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-15 * hi {
                break;
            }
        }
        0.5 * (lo + hi)
    }

    fn power_law(&self) -> Option<f64> {
        self.inner.power_law().filter(|&p| p > 1.0).map(|p| p / (p - 1.0))
    }

    fn translation_invariant(&self) -> bool {
        self.inner.translation_invariant()
    }

    fn radial(&self) -> crate::nfunction::Radial {
        self.inner.radial()
    }

    fn spec(&self) -> serde_json::Value {
        serde_json::json!({ "family": "conjugate", "of": self.inner.spec() })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HolderResult {
    pub lhs: f64,
    pub rhs: f64,
    pub ok: bool,
}

/// Relative slack on the right-hand side of the Hölder check.
pub const HOLDER_RELAXATION: f64 = 1e-6;

/// `|∫ u v| ≤ 2 ‖u‖_{L^Ĝ} ‖v‖_{L^{G̃̂}}`, with the conjugate norm computed from
/// the numerical conjugate.
pub fn holder_pairing(nf: &dyn NFunction, u: &GridFunction, v: &GridFunction, rel_tol: f64) -> Result<HolderResult> {
    if u.spec() != v.spec() {
        return Err(Error::Precondition("u and v live on different grids".into()));
    }
    let spec = u.spec();
    let terms: Vec<f64> = (0..spec.len()).map(|i| spec.weight(i) * u.values()[i] * v.values()[i]).collect();
    let lhs = pairwise_sum(&terms).abs();
    let nu = scalar_norm(nf, u, rel_tol)?.value;
    let conj = ConjugateNFunction::new(nf);
    let nv = scalar_norm(&conj, v, rel_tol)?.value;
    if !nv.is_finite() {
        return Err(Error::NotInSpace("conjugate norm is infinite".into()));
    }
    let rhs = 2.0 * nu * nv;
    Ok(HolderResult { lhs, rhs, ok: lhs <= rhs * (1.0 + HOLDER_RELAXATION) })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceRow {
    pub index: usize,
    pub scalar_norm: f64,
    pub seminorm: f64,
    pub scalar_modular: f64,
    pub fractional_modular: f64,
}

impl EquivalenceRow {
    pub fn norm(&self) -> f64 {
        self.scalar_norm + self.seminorm
    }

    pub fn modular(&self) -> f64 {
        self.scalar_modular + self.fractional_modular
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceReport {
    pub rows: Vec<EquivalenceRow>,
    pub co_vanishing: bool,
}

/// Below this a quantity counts as vanished.
pub const VANISH_LOW: f64 = 1e-6;
/// Above this a quantity counts as not vanished.
pub const VANISH_HIGH: f64 = 1e-2;

fn co_vanish(a: f64, b: f64) -> bool {
    !((a < VANISH_LOW && b > VANISH_HIGH) || (b < VANISH_LOW && a > VANISH_HIGH))
}

/// Norms and modulars of `u_n − u` along `seq`, and whether they vanish together.
pub fn norm_modular_equivalence(
    nf: &dyn NFunction,
    seq: &[GridFunction],
    u: &GridFunction,
    s: f64,
    rel_tol: f64,
) -> Result<EquivalenceReport> {
    let opts = FractionalOptions::default();
    let mut rows = Vec::with_capacity(seq.len());
    for (index, un) in seq.iter().enumerate() {
        let diff = un.sub(u)?;
        let norm = sobolev_norm_with(nf, &diff, s, &opts, rel_tol)?;
        rows.push(EquivalenceRow {
            index,
            scalar_norm: norm.scalar.value,
            seminorm: norm.seminorm.value,
            scalar_modular: scalar_value(nf, &diff)?,
            fractional_modular: fractional_parts(nf, &diff, s, &opts)?.total(),
        });
    }
    let co_vanishing = rows.iter().all(|r| {
        co_vanish(r.norm(), r.modular())
            && co_vanish(r.scalar_norm, r.scalar_modular)
            && co_vanish(r.seminorm, r.fractional_modular)
    });
    Ok(EquivalenceReport { rows, co_vanishing })
}
