//! Upper-tail probabilities of the reference distributions.

use statrs::function::erf::erfc;
use statrs::function::gamma::gamma_ur;

/// `P(χ²_df > x)` through the regularized upper incomplete gamma function.
pub fn chi_square_sf(x: f64, df: u64) -> f64 {
    assert!(df >= 1, "chi-square needs at least one degree of freedom");
    if x <= 0.0 {
        return 1.0;
    }
    if x.is_infinite() {
        return 0.0;
    }
    gamma_ur(df as f64 / 2.0, x / 2.0).clamp(0.0, 1.0)
}

/// `P(Z > x)` for a standard normal `Z`.
pub fn normal_sf(x: f64) -> f64 {
    0.5 * erfc(x / std::f64::consts::SQRT_2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::adaptive_simpson;

    #[test]
    fn simple_values() {
        assert_eq!(normal_sf(0.0), 0.5);
        assert!((normal_sf(1.6448536269514722) - 0.05).abs() < 1e-10);
        assert!((normal_sf(-1.959963984540054) - 0.975).abs() < 1e-10);
        assert_eq!(chi_square_sf(0.0, 3), 1.0);
        assert_eq!(chi_square_sf(-1.0, 3), 1.0);
    }

    #[test]
    fn chi_square_critical_value() {
        // χ²₁ tail equals 2·P(Z > √x).
        let x = 3.841459;
        assert!((chi_square_sf(x, 1) - 0.05).abs() < 1e-5);
        assert!((chi_square_sf(x, 1) - 2.0 * normal_sf(x.sqrt())).abs() < 1e-10);
        // Independent route: integrate the χ²₁ density over [0, x] with
        // t = s² to remove the 1/√t endpoint singularity.
        let body = adaptive_simpson(
            |s: f64| 2.0 * (-0.5 * s * s).exp() / (2.0 * std::f64::consts::PI).sqrt(),
            0.0,
            x.sqrt(),
            1e-13,
        )
        .unwrap();
        assert!((1.0 - body - chi_square_sf(x, 1)).abs() < 1e-10);
    }

    #[test]
    fn chi_square_even_df_closed_form() {
        // For df = 2k the tail is e^{-x/2} Σ_{j<k} (x/2)^j / j!.
        for (x, k) in [(3.0, 1u64), (7.5, 3), (40.0, 10)] {
            let h = x / 2.0;
            let mut term = 1.0;
            let mut sum = 0.0;
            for j in 0..k {
                if j > 0 {
                    term *= h / j as f64;
                }
                sum += term;
            }
            let expected = (-h).exp() * sum;
            assert!((chi_square_sf(x, 2 * k) - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn chi_square_large_df_is_near_normal() {
        // df in the tens of thousands (p(p+1)/2 for p = 320).
        let df = 51_360u64;
        let sd = (2.0 * df as f64).sqrt();
        let mid = chi_square_sf(df as f64, df);
        assert!((mid - 0.5).abs() < 0.01);
        let upper = chi_square_sf(df as f64 + 1.6448536269514722 * sd, df);
        assert!((upper - 0.05).abs() < 0.003, "{upper}");
    }
}
