//! Reduction and one-dimensional quadrature primitives shared by the modulars.

/// Sum with a fixed binary-tree shape: the slice is split at `len / 2` and the
/// halves are summed recursively.
///
/// The shape depends only on the length, so the result is reproducible no
/// matter how the terms were produced.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => 0.0,
        1 => xs[0],
        2 => xs[0] + xs[1],
        n => {
            let (a, b) = xs.split_at(n / 2);
            pairwise_sum(a) + pairwise_sum(b)
        }
    }
}

/// Nodes and weights of the 8-point Gauss–Legendre rule on `[−1, 1]`.
const GL8: [(f64, f64); 8] = [
    (-0.960_289_856_497_536_3, 0.101_228_536_290_376_26),
    (-0.796_666_477_413_626_7, 0.222_381_034_453_374_47),
    (-0.525_532_409_916_329_0, 0.313_706_645_877_887_3),
    (-0.183_434_642_495_649_8, 0.362_683_783_378_362_0),
    (0.183_434_642_495_649_8, 0.362_683_783_378_362_0),
    (0.525_532_409_916_329_0, 0.313_706_645_877_887_3),
    (0.796_666_477_413_626_7, 0.222_381_034_453_374_47),
    (0.960_289_856_497_536_3, 0.101_228_536_290_376_26),
];

/// 8-point Gauss–Legendre approximation of `∫_a^b f`.
pub fn gauss_legendre(a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    half * GL8.iter().map(|&(x, w)| w * f(mid + half * x)).sum::<f64>()
}

/// `∫_0^end f` over unit panels up to 8, then panels doubling in width.
pub fn decaying_integral(end: f64, f: impl Fn(f64) -> f64) -> f64 {
    let mut total = 0.0;
    let mut a = 0.0;
    let mut width = 1.0;
    while a < end {
        let b = (a + width).min(end);
        total += gauss_legendre(a, b, &f);
        a = b;
        if a >= 8.0 {
            width *= 2.0;
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairwise_matches_tree_shape() {
        let xs = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(pairwise_sum(&xs), (1.0 + 2.0) + (3.0 + (4.0 + 5.0)));
        assert_eq!(pairwise_sum(&[]), 0.0);
    }

    #[test]
    fn gauss_legendre_is_exact_for_degree_fifteen() {
        let got = gauss_legendre(-1.0, 2.0, |x| x.powi(15) - 3.0 * x.powi(4));
        let want = (2f64.powi(16) - 1.0) / 16.0 - 3.0 * (32.0 + 1.0) / 5.0;
        assert!((got - want).abs() < 1e-9 * want.abs());
    }

    #[test]
    fn decaying_exponential() {
        let got = decaying_integral(40.0, |v| (-2.0 * v).exp());
        assert!((got - 0.5).abs() < 1e-12);
    }
}
