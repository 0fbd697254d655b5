//! Property tests for the statistics, the closed forms and their oracles.

use covtest::mp_law::{cos_offset, helper_integral_cos, mp_integral_g, mp_integral_numeric};
use covtest::quadrature::adaptive_simpson;
use covtest::rmt_clt::{
    mean_correction, mean_correction_numeric, var_correction, var_correction_numeric,
};
use covtest::simulation::generate_sample;
use covtest::stats::{estimate_beta, sample_cov, trace_sq_dev, CovMatrix};
use covtest::{
    crst_statistic, rst_statistic, BetaMode, DataMatrix, Divisor, Family, Hypothesis, Kappa,
    MpIndex, NullSpec, RmtParams, ScenarioSpec,
};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn matrix(p: usize, n: usize) -> impl Strategy<Value = DMatrix<f64>> {
    prop::collection::vec(-5.0f64..5.0, p * n).prop_map(move |v| DMatrix::from_vec(p, n, v))
}

fn data() -> impl Strategy<Value = DMatrix<f64>> {
    (2usize..7, 9usize..20).prop_flat_map(|(p, n)| matrix(p, n))
}

fn ratio() -> impl Strategy<Value = f64> {
    (0.05f64..3.9).prop_filter("q away from 1", |q| (q - 1.0).abs() > 1e-3)
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn location_shift_is_invisible(x in data(), shift in prop::collection::vec(-50.0f64..50.0, 7)) {
        let p = x.nrows();
        let moved = DMatrix::from_fn(p, x.ncols(), |k, i| x[(k, i)] + shift[k]);
        let a = DataMatrix::new(x).unwrap();
        let b = DataMatrix::new(moved).unwrap();
        for null in [NullSpec::Identity, NullSpec::Sphericity] {
            let sa = rst_statistic(&a, &null).unwrap().statistic;
            let sb = rst_statistic(&b, &null).unwrap().statistic;
            prop_assert!((sa - sb).abs() <= 1e-9 * sa.abs().max(1.0), "{} vs {}", sa, sb);
        }
    }

    #[test]
    fn divisors_differ_by_a_constant_factor(x in data()) {
        let n = x.ncols() as f64;
        let x = DataMatrix::new(x).unwrap();
        let biased = sample_cov(&x, Divisor::N);
        let unbiased = sample_cov(&x, Divisor::NMinusOne);
        let diff = (biased.values() * n - unbiased.values() * (n - 1.0)).abs().max();
        prop_assert!(diff <= 1e-10 * unbiased.values().abs().max().max(1.0));
    }

    #[test]
    fn trace_identity_matches_eigenvalues(a in matrix(5, 5)) {
        let s = (&a + a.transpose()) * 0.5;
        let eig = s.clone().symmetric_eigenvalues();
        let via_eigen: f64 = eig.iter().map(|l| (l - 1.0).powi(2)).sum();
        prop_assert!((trace_sq_dev(&s) - via_eigen).abs() <= 1e-9 * via_eigen.max(1.0));
    }

    #[test]
    fn general_null_equals_whitened_identity(a in matrix(4, 4), raw in matrix(4, 15)) {
        let sigma0 = &a * a.transpose() + DMatrix::identity(4, 4);
        let l = sigma0.clone().cholesky().unwrap().l();
        let x = DataMatrix::new(&l * &raw).unwrap();
        let null = NullSpec::general(CovMatrix::new(sigma0).unwrap()).unwrap();
        let g = rst_statistic(&x, &null).unwrap().statistic;
        let w = rst_statistic(&DataMatrix::new(raw).unwrap(), &NullSpec::Identity).unwrap().statistic;
        prop_assert!(rel(g, w) < 1e-8, "{} vs {}", g, w);
    }

    #[test]
    fn sphericity_ignores_scale(x in data(), c in prop_oneof![0.001f64..0.5, 2.0f64..1000.0]) {
        let a = DataMatrix::new(x.clone()).unwrap();
        let b = DataMatrix::new(x * c).unwrap();
        let sa = rst_statistic(&a, &NullSpec::Sphericity).unwrap().statistic;
        let sb = rst_statistic(&b, &NullSpec::Sphericity).unwrap().statistic;
        prop_assert!((sa - sb).abs() <= 1e-9 * sa.abs().max(1.0));
    }

    #[test]
    fn larger_statistics_have_smaller_p_values(x in data(), c in 1.2f64..3.0) {
        // Inflating one coordinate's spread moves the sample further from I.
        let a = DataMatrix::new(x.clone() * 0.2).unwrap();
        let mut y = x * 0.2;
        y.row_mut(0).scale_mut(c * 10.0);
        let b = DataMatrix::new(y).unwrap();
        let ra = rst_statistic(&a, &NullSpec::Identity).unwrap();
        let rb = rst_statistic(&b, &NullSpec::Identity).unwrap();
        if rb.statistic > ra.statistic {
            prop_assert!(rb.p_value <= ra.p_value);
        }
    }

    #[test]
    fn corrected_statistic_reconstructs_raw_trace(x in data(), beta in 0.0f64..2.0) {
        let p = x.nrows() as f64;
        let n = x.ncols();
        prop_assume!((p - (n - 1) as f64).abs() > 0.5);
        let x = DataMatrix::new(x).unwrap();
        let r = crst_statistic(&x, &NullSpec::Identity, BetaMode::Known(beta), Kappa::Real).unwrap();
        let d = r.detail.unwrap();
        let recon = r.statistic * d.upsilon_g.sqrt() + p * d.q_n + d.mu_g;
        let direct = 2.0 / n as f64 * d.rst_raw;
        prop_assert!((recon - direct).abs() <= 1e-9 * direct.abs().max(1.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn corrections_agree_with_contour_oracles(
        q in ratio(),
        complex in any::<bool>(),
        beta in -0.9f64..3.0,
    ) {
        let kappa = if complex { Kappa::Complex } else { Kappa::Real };
        let params = RmtParams::new(MpIndex::new(q).unwrap(), kappa, beta).unwrap();
        let mu = mean_correction_numeric(&params, 1e-10).unwrap();
        let var = var_correction_numeric(&params, 1e-10).unwrap();
        prop_assert!((mu - mean_correction(&params)).abs() < 1e-6);
        prop_assert!((var - var_correction(&params)).abs() < 1e-4);
    }

    #[test]
    fn cosine_helper_matches_direct_quadrature(d0 in prop_oneof![-6.0f64..-1.05, 1.05f64..6.0]) {
        let closed = helper_integral_cos(d0).unwrap();
        let direct = adaptive_simpson(
            |t: f64| 1.0 / (t.cos() + d0), 0.0, std::f64::consts::TAU, 1e-12,
        ).unwrap();
        prop_assert!((closed - direct).abs() < 1e-8, "{} vs {}", closed, direct);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn mp_integral_matches_closed_form(q in ratio()) {
        let idx = MpIndex::new(q).unwrap();
        let numeric = mp_integral_numeric(|x| (x - 1.0) * (x - 1.0), idx, 1e-11).unwrap();
        prop_assert!((numeric - mp_integral_g(idx).unwrap()).abs() < 1e-7);
        let offset = cos_offset(idx);
        prop_assert!(offset.abs() > 1.0);
    }
}

#[test]
fn beta_estimate_gaussian_near_zero() {
    let spec = ScenarioSpec::new(Family::Gaussian, 5000, 50, Hypothesis::Null).unwrap();
    let x = generate_sample(&spec, 11);
    let beta = estimate_beta(&x, &NullSpec::Identity).unwrap();
    assert!(beta.abs() < 0.1, "{beta}");
}

#[test]
fn beta_estimate_gamma_near_one_and_a_half() {
    let spec = ScenarioSpec::new(Family::Gamma, 5000, 50, Hypothesis::Null).unwrap();
    let x = generate_sample(&spec, 12);
    let beta = estimate_beta(&x, &NullSpec::Identity).unwrap();
    assert!((beta - 1.5).abs() < 0.15, "{beta}");
}
