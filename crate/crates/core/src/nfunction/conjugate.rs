use super::{check_args, Frozen, NFunction};
use crate::error::{ensure_finite, Result};

/// Relative accuracy the golden-section search targets for `G̃`.
pub const CONJUGATE_REL_TOL: f64 = 1e-10;

/// Largest search bound tried before the supremum is declared infinite.
const S_MAX_LIMIT: f64 = 1e300;

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// One-sided slack to add when comparing against a numerical conjugate value.
///
/// The search can only under-approximate the supremum; this is the documented
/// bound on that gap.
pub fn conjugate_relaxation(value: f64) -> f64 {
    CONJUGATE_REL_TOL * value.abs().max(1.0)
}

/// Young conjugate `G̃_{x,y}(τ) = sup_{s ≥ 0} (τ s − G_{x,y}(s))`.
///
/// Returns `f64::INFINITY` when `G` grows at most linearly and the supremum is unbounded.
pub fn conjugate(nf: &dyn NFunction, x: &[f64], y: &[f64], tau: f64) -> Result<f64> {
    ensure_finite("tau", tau)?;
    check_args(nf, x, y, tau)?;
    Ok(conjugate_frozen(nf, nf.freeze(x, y), tau))
}

/// Unchecked conjugate for a frozen pair.
pub(crate) fn conjugate_frozen(nf: &dyn NFunction, frozen: Frozen, tau: f64) -> f64 {
    if tau == 0.0 {
        return 0.0;
    }
    let g = |s: f64| nf.deriv_frozen(frozen, s);
    let objective = |s: f64| tau * s - nf.eval_frozen(frozen, s);

    // Bracket the maximiser: g(s_hi) > τ and, when possible, g(s_hi / 2) ≤ τ.
    let mut s_hi = 1.0_f64;
    if g(s_hi) > tau {
        while s_hi > f64::MIN_POSITIVE * 4.0 && g(s_hi * 0.5) > tau {
            s_hi *= 0.5;
        }
    } else {
        while g(s_hi) <= tau {
            s_hi *= 2.0;
            if !(s_hi < S_MAX_LIMIT) {
                return f64::INFINITY;
            }
        }
    }

    // τs − G(s) is concave, so golden-section on [0, s_hi] converges to the maximum.
    let (mut a, mut b) = (0.0_f64, s_hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (objective(c), objective(d));
    let stop = 1e-13 * s_hi;
    while b - a > stop {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = objective(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = objective(d);
        }
    }
    let best = fc.max(fd).max(objective(0.5 * (a + b)));
    best.max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nfunction::{Orlicz, OrliczKind, VariableExponent};

    fn legendre_power(p: f64, tau: f64) -> f64 {
        // sup_s τs − s^p at s = (τ/p)^{1/(p−1)}
        let s = (tau / p).powf(1.0 / (p - 1.0));
        tau * s * (1.0 - 1.0 / p)
    }

    #[test]
    fn closed_form_examples() {
        let sq = VariableExponent::constant(2.0, 1).unwrap();
        let cube = VariableExponent::constant(3.0, 1).unwrap();
        assert_eq!(conjugate(&sq, &[0.0], &[0.0], 0.0).unwrap(), 0.0);
        assert!((conjugate(&sq, &[0.0], &[0.0], 2.0).unwrap() - 1.0).abs() < 1e-12);
        assert!((conjugate(&cube, &[0.0], &[0.0], 3.0).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn matches_legendre_transform_over_a_range() {
        for p in [1.5, 2.0, 3.0, 4.5] {
            let nf = VariableExponent::constant(p, 1).unwrap();
            for k in 1..=200 {
                let tau = k as f64 * 0.5;
                let got = conjugate(&nf, &[0.0], &[0.0], tau).unwrap();
                let want = legendre_power(p, tau);
                assert!(((got - want) / want).abs() < 1e-9, "p={p} tau={tau}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn tiny_and_huge_tau() {
        let nf = VariableExponent::constant(3.0, 1).unwrap();
        for tau in [1e-12, 1e-6, 1e6, 1e12] {
            let got = conjugate(&nf, &[0.0], &[0.0], tau).unwrap();
            let want = legendre_power(3.0, tau);
            assert!(((got - want) / want).abs() < 1e-9, "tau={tau}");
        }
    }

    #[test]
    fn linear_growth_gives_infinite_conjugate() {
        let nf = VariableExponent::constant(1.0, 1).unwrap();
        assert_eq!(conjugate(&nf, &[0.0], &[0.0], 2.0).unwrap(), f64::INFINITY);
        // below the slope the supremum is at s = 0
        assert_eq!(conjugate(&nf, &[0.0], &[0.0], 0.5).unwrap(), 0.0);
    }

    #[test]
    fn nonfinite_tau_is_a_domain_error() {
        let nf = Orlicz::new(OrliczKind::Power { p: 2.0 }, 1).unwrap();
        assert!(conjugate(&nf, &[0.0], &[0.0], f64::NAN).is_err());
        assert!(conjugate(&nf, &[0.0], &[0.0], -1.0).is_err());
    }
}
