use proptest::prelude::*;
use slr_core::density::{slr_from_kdes, Kde, Support};
use slr_core::rng::derive_stream;
use slr_core::scores::{score_squared_diff, AnalyticScoreModel};
use slr_core::stats::{quantile_sorted, sorted};
use slr_core::{BetaVectorPairModel, Hypothesis, PairModel, UnivariateGaussianPairModel};

fn simple() -> UnivariateGaussianPairModel {
    UnivariateGaussianPairModel::new(0.0, 0.0, 0.2, 1.0).unwrap()
}

fn scores(h: Hypothesis, n: usize, seed: u64) -> Vec<f64> {
    let m = simple();
    let mut rng = derive_stream(seed, "kde-scores", h as u64);
    (0..n)
        .map(|_| score_squared_diff(&m.sample_pair(h, Default::default(), &mut rng)).unwrap())
        .collect()
}

fn unit_scores(n: usize, seed: u64) -> Vec<f64> {
    let m: PairModel = BetaVectorPairModel::new(2.0, 1.0, 1.0, 2.0, 1).unwrap().into();
    let mut rng = derive_stream(seed, "unit-scores", 0);
    (0..n).map(|_| m.sample_pair(Hypothesis::Hd, &mut rng).y[0]).collect()
}

#[test]
fn fitted_kdes_integrate_to_one() {
    for h in Hypothesis::BOTH {
        let k = Kde::fit(&scores(h, 20_000, 1), Support::RealLine, None).unwrap();
        let (a, b) = k.natural_domain();
        let mass = k.integrate(a, b, 2001);
        assert!((mass - 1.0).abs() < 0.01, "{h}: {mass}");
    }
    let k = Kde::fit(&unit_scores(20_000, 2), Support::UnitInterval, None).unwrap();
    let mass = k.integrate(0.0, 1.0, 2001);
    assert!((mass - 1.0).abs() < 0.01, "unit: {mass}");
}

#[test]
fn kde_matches_analytic_score_density() {
    let n = 1_000_000;
    let a = AnalyticScoreModel::from_model(&simple());
    let cases = [
        (Hypothesis::Hp, &[0.1, 1.0, 4.0][..]),
        (Hypothesis::Hd, &[1.0, 4.0][..]),
    ];
    for (h, points) in cases {
        let k = Kde::fit(&scores(h, n, 5), Support::RealLine, None).unwrap();
        for &s in points {
            let exact = a.log_density(h, s).unwrap().exp();
            let got = k.density(s);
            // Pointwise KDE standard error, evaluated at the true density.
            let roughness = 0.5 / std::f64::consts::PI.sqrt();
            let se = (exact * roughness / (n as f64 * k.bandwidth())).sqrt();
            assert!((got - exact).abs() <= 3.0 * se, "{h} s={s}: kde {got}, exact {exact}, se {se}");
        }
    }
}

#[test]
fn doubling_the_sample_barely_moves_the_median_density() {
    let reps = 20;
    let mut stable = 0;
    for rep in 0..reps {
        let big = scores(Hypothesis::Hd, 20_000, 100 + rep);
        let small = &big[..10_000];
        let median = quantile_sorted(&sorted(small), 0.5);
        let a = Kde::fit(small, Support::RealLine, None).unwrap().log_density(median).ln();
        let b = Kde::fit(&big, Support::RealLine, None).unwrap().log_density(median).ln();
        if (a - b).abs() < 0.1 {
            stable += 1;
        }
    }
    assert!(stable * 10 >= reps * 9, "{stable}/{reps}");
}

#[test]
fn identical_estimates_give_zero_slr() {
    let pts = scores(Hypothesis::Hp, 2_000, 9);
    let k = Kde::fit(&pts, Support::RealLine, None).unwrap();
    for s in [0.0, 0.3, 5.0, 1e6] {
        assert_eq!(slr_from_kdes(&k, &k, s).unwrap().ln(), 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn floored_log_slr_is_bounded(s in -5.0f64..1e3) {
        let kp = Kde::fit(&scores(Hypothesis::Hp, 2_000, 3), Support::RealLine, None).unwrap();
        let kd = Kde::fit(&scores(Hypothesis::Hd, 2_000, 4), Support::RealLine, None).unwrap();
        let max_log = |k: &Kde| k.points().iter().map(|&p| k.log_density(p).ln()).fold(f64::MIN, f64::max);
        let cap = max_log(&kp).max(max_log(&kd)) - kp.log_floor();
        let l = slr_from_kdes(&kp, &kd, s).unwrap().ln();
        prop_assert!(l.abs() <= cap + 1e-9, "l={l} cap={cap}");
    }

    #[test]
    fn reflected_density_vanishes_outside_the_unit_interval(s in 1.0f64..5.0) {
        let k = Kde::fit(&unit_scores(500, 4), Support::UnitInterval, None).unwrap();
        prop_assert_eq!(k.log_density(s + 1e-9).ln(), k.log_floor());
        prop_assert_eq!(k.log_density(-s).ln(), k.log_floor());
    }
}
