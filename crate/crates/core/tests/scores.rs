use proptest::prelude::*;
use slr_core::scores::{analytic_slr, noncentral_chi2_logpdf, score_squared_diff, AnalyticScoreModel};
use slr_core::{EvidencePair, Hypothesis, UnivariateGaussianPairModel};

fn simple() -> (UnivariateGaussianPairModel, AnalyticScoreModel) {
    let m = UnivariateGaussianPairModel::new(0.0, 0.0, 0.2, 1.0).unwrap();
    let a = AnalyticScoreModel::from_model(&m);
    (m, a)
}

#[test]
fn squared_difference_is_constant_along_diagonals() {
    use rand::Rng;
    let mut rng = slr_core::rng::derive_stream(11, "contour", 0);
    for _ in 0..100 {
        let x: f64 = rng.random_range(-50.0..50.0);
        let b: f64 = rng.random_range(-10.0..10.0);
        let s = score_squared_diff(&EvidencePair::scalar(x, x + b)).unwrap();
        assert!((s - b * b).abs() < 1e-9 * (1.0 + b * b), "x={x} b={b}");
    }
}

#[test]
fn discrepancy_at_x2_y_minus2() {
    let (m, a) = simple();
    let s = score_squared_diff(&EvidencePair::scalar(2.0, -2.0)).unwrap();
    assert_eq!(s, 16.0);
    let log_slr = analytic_slr(&a, s).unwrap().ln();
    let log_lr = m.log_lr(-2.0).ln();
    assert!((log_slr + 91.291).abs() < 1e-3);
    assert!((log_lr + 46.447).abs() < 1e-3);
    let ratio = (log_lr - log_slr).exp();
    assert!((2e19..4e19).contains(&ratio), "ratio {ratio:e}");
}

#[test]
fn slr_at_zero_is_the_limit() {
    let (_, a) = simple();
    assert!((analytic_slr(&a, 0.0).unwrap().ln() - 0.5 * 13.5f64.ln()).abs() < 1e-12);
    let near = analytic_slr(&a, 1e-12).unwrap().ln();
    assert!((near - 0.5 * 13.5f64.ln()).abs() < 1e-9);
}

#[test]
fn shifted_score_density_matches_folded_normal_form() {
    // s = (x - y)^2 with x - y ~ N(2, 0.08 + 1) under Hd for mu_x = 2, mu_b = 0.
    let m = UnivariateGaussianPairModel::new(2.0, 0.0, 0.2, 1.0).unwrap();
    let a = AnalyticScoreModel::from_model(&m);
    let v: f64 = 2.0 * 0.04 + 1.0;
    let phi = |z: f64| (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt();
    for &s in &[1e-6f64, 0.01, 0.5, 3.0, 16.0, 60.0] {
        let r = s.sqrt();
        let f = (phi((r - 2.0) / v.sqrt()) + phi((r + 2.0) / v.sqrt())) / (2.0 * r * v.sqrt());
        let got = a.log_density(Hypothesis::Hd, s).unwrap().exp();
        assert!((got / f - 1.0).abs() < 1e-10, "s={s}");
    }
}

proptest! {
    #[test]
    fn noncentral_density_is_positive_and_finite(t in 1e-8f64..500.0, lambda in 1e-6f64..200.0) {
        let l = noncentral_chi2_logpdf(t, lambda).unwrap();
        prop_assert!(l.is_finite());
    }

    #[test]
    fn analytic_slr_is_finite_on_the_support(s in 0.0f64..1e4) {
        let (_, a) = simple();
        prop_assert!(analytic_slr(&a, s).unwrap().is_finite());
    }
}
