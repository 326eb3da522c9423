//! Closed-form scores and the analytic score densities of the univariate
//! Gaussian model.
//!
//! With `s(x, y) = (x - y)^2`, the score scaled by `v_p = 2 sigma_w^2` is
//! central chi-square with one degree of freedom under `Hp`. Scaled by
//! `v_d = 2 sigma_w^2 + sigma_b^2` it is noncentral chi-square with one
//! degree of freedom under `Hd`, with noncentrality
//! `lambda = (mu_x - mu_b)^2 / v_d`.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::logspace::LogValue;
use crate::models::{EvidencePair, Hypothesis, UnivariateGaussianPairModel};
use crate::special::{chi2_logpdf, ln_gamma};

/// Relative size below which series terms are dropped.
pub const SERIES_REL_TOL: f64 = 1e-16;
/// Hard cap on the number of series terms evaluated.
pub const SERIES_MAX_TERMS: usize = 10_000;

/// `(x - y)^2` for univariate evidence.
pub fn score_squared_diff(pair: &EvidencePair) -> Result<f64> {
    if pair.x.len() != 1 || pair.y.len() != 1 {
        return Err(Error::DimensionMismatch {
            field: "pair",
            expected: 1,
            found: pair.x.len().max(pair.y.len()),
        });
    }
    let d = pair.x[0] - pair.y[0];
    Ok(d * d)
}

/// Euclidean distance `||x - y||_2`.
pub fn score_euclidean(pair: &EvidencePair) -> Result<f64> {
    if pair.x.len() != pair.y.len() {
        return Err(Error::DimensionMismatch {
            field: "y",
            expected: pair.x.len(),
            found: pair.y.len(),
        });
    }
    let ss: f64 = pair
        .x
        .iter()
        .zip(&pair.y)
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok(libm::sqrt(ss))
}

/// Scaled chi-square score distributions of the univariate model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalyticScoreModel {
    pub v_p: f64,
    pub v_d: f64,
    pub lambda: f64,
}

impl AnalyticScoreModel {
    pub fn new(v_p: f64, v_d: f64, lambda: f64) -> Result<Self> {
        if !(v_p > 0.0 && v_p.is_finite()) {
            return Err(Error::InvalidParameter("v_p"));
        }
        if !(v_d >= v_p && v_d.is_finite()) {
            return Err(Error::InvalidParameter("v_d"));
        }
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidParameter("lambda"));
        }
        Ok(AnalyticScoreModel { v_p, v_d, lambda })
    }

    pub fn from_model(m: &UnivariateGaussianPairModel) -> Self {
        let v_p = 2.0 * m.sigma_w * m.sigma_w;
        let v_d = v_p + m.sigma_b * m.sigma_b;
        let delta = m.mu_x - m.mu_b;
        AnalyticScoreModel {
            v_p,
            v_d,
            lambda: delta * delta / v_d,
        }
    }

    /// Log-density of the score under `h`; requires `s > 0`.
    pub fn log_density(&self, h: Hypothesis, s: f64) -> Result<LogValue> {
        if !(s > 0.0) || !s.is_finite() {
            return Err(Error::domain(alloc::format!("score {s} must be positive and finite")));
        }
        let v = match h {
            Hypothesis::Hp => chi2_logpdf(s / self.v_p, 1.0) - libm::log(self.v_p),
            Hypothesis::Hd => {
                noncentral_chi2_logpdf(s / self.v_d, self.lambda)?.ln() - libm::log(self.v_d)
            }
        };
        Ok(LogValue(v))
    }

    /// `log f_p(s) - log f_d(s)`, including the finite limit at `s = 0`.
    pub fn log_slr(&self, s: f64) -> Result<LogValue> {
        if s < 0.0 || !s.is_finite() {
            return Err(Error::domain(alloc::format!("score {s} must be non-negative and finite")));
        }
        if s == 0.0 {
            return Ok(LogValue(self.log_slr_at_zero()));
        }
        Ok(self.log_density(Hypothesis::Hp, s)? - self.log_density(Hypothesis::Hd, s)?)
    }

    /// Both densities diverge like `s^{-1/2}` at zero; their ratio tends to
    /// `sqrt(v_d / v_p) * exp(lambda / 2)`.
    pub fn log_slr_at_zero(&self) -> f64 {
        0.5 * libm::log(self.v_d / self.v_p) + 0.5 * self.lambda
    }
}

/// Log-density of the analytic score model; thin wrapper for call sites that
/// prefer a free function.
pub fn analytic_score_logdensity(m: &AnalyticScoreModel, h: Hypothesis, s: f64) -> Result<LogValue> {
    m.log_density(h, s)
}

pub fn analytic_slr(m: &AnalyticScoreModel, s: f64) -> Result<LogValue> {
    m.log_slr(s)
}

/// Terms of the Poisson-mixture series in log space, in index order, with
/// the index of the largest term.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesTerms {
    pub first_index: usize,
    pub log_terms: Vec<f64>,
    pub modal_index: usize,
}

/// `log(term_{j+1} / term_j)` where `term_j = Pois(j; lambda/2) chi2_{1+2j}(t)`.
#[inline]
fn log_term_ratio(j: usize, t: f64, lambda: f64) -> f64 {
    let j = j as f64;
    libm::log(lambda * t) - libm::log(2.0 * (j + 1.0) * (2.0 * j + 1.0))
}

fn log_term(j: usize, t: f64, half_lambda: f64) -> f64 {
    let jf = j as f64;
    let log_pois = -half_lambda + jf * libm::log(half_lambda) - ln_gamma(jf + 1.0);
    log_pois + chi2_logpdf(t, 1.0 + 2.0 * jf)
}

/// Evaluates the significant terms of the noncentral chi-square (one degree
/// of freedom) mixture series, walking outward from the largest term until
/// terms fall below [`SERIES_REL_TOL`] of the running sum.
pub fn noncentral_chi2_series(t: f64, lambda: f64) -> Result<SeriesTerms> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::domain(alloc::format!("t = {t} must be positive and finite")));
    }
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::domain(alloc::format!(
            "lambda = {lambda} must be positive and finite for the series"
        )));
    }
    let half = 0.5 * lambda;
    let prod = lambda * t;
    // largest term: first j with term_{j+1} <= term_j, i.e. 2(j+1)(2j+1) >= lambda t
    let mut mode = (libm::sqrt(prod) * 0.5) as usize;
    while mode > 0 && 2.0 * (mode as f64) * (2.0 * mode as f64 - 1.0) >= prod {
        mode -= 1;
    }
    while 2.0 * (mode as f64 + 1.0) * (2.0 * mode as f64 + 1.0) < prod {
        mode += 1;
    }
    let log_tol = libm::log(SERIES_REL_TOL);
    let peak = log_term(mode, t, half);
    // running sum relative to the peak term
    let mut rel_sum = 1.0f64;
    let mut upper = Vec::new();
    let mut lt = peak;
    let mut j = mode;
    loop {
        lt += log_term_ratio(j, t, lambda);
        j += 1;
        if lt - peak - libm::log(rel_sum) < log_tol {
            break;
        }
        rel_sum += libm::exp(lt - peak);
        upper.push(lt);
        if upper.len() + 1 > SERIES_MAX_TERMS {
            return Err(Error::Convergence(SERIES_MAX_TERMS));
        }
    }
    let mut lower = Vec::new();
    let mut lt = peak;
    let mut j = mode;
    while j > 0 {
        j -= 1;
        lt -= log_term_ratio(j, t, lambda);
        if lt - peak - libm::log(rel_sum) < log_tol {
            break;
        }
        rel_sum += libm::exp(lt - peak);
        lower.push(lt);
        if upper.len() + lower.len() + 1 > SERIES_MAX_TERMS {
            return Err(Error::Convergence(SERIES_MAX_TERMS));
        }
    }
    let first_index = mode - lower.len();
    let mut log_terms = Vec::with_capacity(lower.len() + 1 + upper.len());
    log_terms.extend(lower.iter().rev());
    log_terms.push(peak);
    log_terms.extend(upper);
    Ok(SeriesTerms {
        first_index,
        log_terms,
        modal_index: mode,
    })
}

/// Log-density of the noncentral chi-square with one degree of freedom and
/// noncentrality `lambda` at `t > 0`. `lambda = 0` is the central density.
pub fn noncentral_chi2_logpdf(t: f64, lambda: f64) -> Result<LogValue> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::domain(alloc::format!("t = {t} must be positive and finite")));
    }
    if lambda < 0.0 || !lambda.is_finite() {
        return Err(Error::domain(alloc::format!("lambda = {lambda} must be non-negative")));
    }
    if lambda == 0.0 {
        return Ok(LogValue(chi2_logpdf(t, 1.0)));
    }
    let series = noncentral_chi2_series(t, lambda)?;
    Ok(LogValue(crate::logspace::log_sum_exp(&series.log_terms)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::derive_stream;
    use rand_distr::{Distribution, StandardNormal};

    fn simple() -> AnalyticScoreModel {
        AnalyticScoreModel::from_model(&UnivariateGaussianPairModel::new(0.0, 0.0, 0.2, 1.0).unwrap())
    }

    #[test]
    fn squared_diff_examples() {
        assert_eq!(score_squared_diff(&EvidencePair::scalar(2.0, -2.0)).unwrap(), 16.0);
        assert_eq!(score_squared_diff(&EvidencePair::scalar(1.3, 1.3)).unwrap(), 0.0);
        assert!((score_squared_diff(&EvidencePair::scalar(0.3, 0.1)).unwrap() - 0.04).abs() < 1e-15);
        let mvn = EvidencePair::new(alloc::vec![0.0; 2], alloc::vec![0.0; 2]);
        assert!(score_squared_diff(&mvn).is_err());
    }

    #[test]
    fn euclidean_examples() {
        let x = alloc::vec![1.0, 0.0, 0.0, 0.0, 0.0];
        let y = alloc::vec![0.0; 5];
        assert_eq!(score_euclidean(&EvidencePair::new(x.clone(), x.clone())).unwrap(), 0.0);
        assert_eq!(score_euclidean(&EvidencePair::new(x, y)).unwrap(), 1.0);
        let bad = EvidencePair::new(alloc::vec![0.0; 2], alloc::vec![0.0; 3]);
        assert!(matches!(score_euclidean(&bad), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn central_case_is_exact() {
        let v = noncentral_chi2_logpdf(1.0, 0.0).unwrap();
        assert!((v.exp() - 0.241_971).abs() < 1e-6);
        assert!((noncentral_chi2_logpdf(200.0, 0.0).unwrap().ln() - (-103.568)).abs() < 1e-3);
        assert!(noncentral_chi2_logpdf(0.0, 1.0).is_err());
        assert!(noncentral_chi2_logpdf(-1.0, 0.0).is_err());
    }

    #[test]
    fn series_matches_reference_implementation() {
        use statrs::distribution::{Continuous, ChiSquared};
        // Closed form for one degree of freedom:
        // f(t) = [phi(sqrt t - sqrt lambda) + phi(sqrt t + sqrt lambda)] / (2 sqrt t)
        for &lambda in &[0.01, 0.5, 3.92, 4.0, 25.0, 400.0] {
            for &t in &[1e-6, 0.01, 0.5, 1.0, 4.0, 9.0, 50.0, 300.0] {
                let (a, b) = (libm::sqrt(t), libm::sqrt(lambda));
                let phi = |z: f64| libm::exp(-0.5 * z * z) / libm::sqrt(2.0 * core::f64::consts::PI);
                let closed = (phi(a - b) + phi(a + b)) / (2.0 * a);
                let got = noncentral_chi2_logpdf(t, lambda).unwrap().exp();
                if closed > 1e-280 {
                    assert!(
                        ((got - closed) / closed).abs() < 1e-10,
                        "t={t} lambda={lambda}: {got} vs {closed}"
                    );
                }
            }
        }
        let c = ChiSquared::new(1.0).unwrap();
        assert!((noncentral_chi2_logpdf(2.5, 0.0).unwrap().exp() - c.pdf(2.5)).abs() < 1e-14);
    }

    #[test]
    fn series_terms_decrease_past_mode() {
        for &(t, lambda) in &[(1.0, 4.0), (9.0, 4.0), (50.0, 30.0), (0.3, 0.2)] {
            let s = noncentral_chi2_series(t, lambda).unwrap();
            let m = s.modal_index - s.first_index;
            let max = s.log_terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            assert_eq!(s.log_terms[m], max);
            for w in s.log_terms[m..].windows(2) {
                assert!(w[1] < w[0]);
            }
            for w in s.log_terms[..=m].windows(2) {
                assert!(w[1] > w[0]);
            }
        }
    }

    #[test]
    fn series_cap_raises_convergence_error() {
        // sqrt(lambda t) around 2e5 needs far more than the capped term count
        assert_eq!(
            noncentral_chi2_logpdf(1e11, 1e11).unwrap_err(),
            Error::Convergence(SERIES_MAX_TERMS)
        );
    }

    /// Monte Carlo oracle: histogram density of `(Z + 2)^2` in a narrow window.
    #[test]
    fn noncentral_density_agrees_with_sampling() {
        let mut rng = derive_stream(11, "ncx2", 0);
        let n = 4_000_000usize;
        let width = 0.05;
        let centers = [1.0, 4.0, 9.0];
        let mut counts = [0usize; 3];
        for _ in 0..n {
            let z: f64 = StandardNormal.sample(&mut rng);
            let t = (z + 2.0) * (z + 2.0);
            for (c, k) in centers.iter().zip(counts.iter_mut()) {
                if (t - c).abs() < width / 2.0 {
                    *k += 1;
                }
            }
        }
        for (c, k) in centers.iter().zip(counts) {
            let est = k as f64 / (n as f64 * width);
            let exact = noncentral_chi2_logpdf(*c, 4.0).unwrap().exp();
            let se = libm::sqrt(exact / (n as f64 * width));
            assert!((est - exact).abs() < 4.0 * se + 1e-4, "t={c}: {est} vs {exact}");
        }
    }

    #[test]
    fn simple_example_densities_and_discrepancy() {
        let m = simple();
        let fp = m.log_density(Hypothesis::Hp, 16.0).unwrap().ln();
        let fd = m.log_density(Hypothesis::Hd, 16.0).unwrap().ln();
        assert!((fp - (-101.042)).abs() < 1e-3, "{fp}");
        assert!((fd - (-9.751)).abs() < 1e-3, "{fd}");
        let slr = m.log_slr(16.0).unwrap().ln();
        assert!((slr - (-91.291)).abs() < 1e-3);
        let lr = UnivariateGaussianPairModel::new(0.0, 0.0, 0.2, 1.0).unwrap().log_lr(-2.0).ln();
        let gap = lr - slr;
        assert!((gap - 44.84).abs() < 0.01);
        let ratio = libm::exp(gap);
        assert!((2e19..4e19).contains(&ratio));
        assert!((m.log_slr(0.0).unwrap().ln() - 0.5 * libm::log(13.5)).abs() < 1e-12);
        assert!(m.log_density(Hypothesis::Hp, 0.0).is_err());
        assert!(m.log_slr(-1.0).is_err());
    }

    #[test]
    fn identical_score_distributions_give_zero() {
        let m = AnalyticScoreModel::new(0.5, 0.5, 0.0).unwrap();
        for i in 0..50 {
            assert_eq!(m.log_slr(i as f64 * 0.3).unwrap().ln(), 0.0);
        }
        assert!(AnalyticScoreModel::new(1.0, 0.5, 0.0).is_err());
    }

    #[test]
    fn scale_family_identity() {
        let m = simple();
        let base = 0.5 * libm::log(m.v_d / m.v_p);
        for i in 1..=100 {
            let s = i as f64 * 0.2;
            let identity = base + 0.5 * s * (1.0 / m.v_d - 1.0 / m.v_p);
            assert!((m.log_slr(s).unwrap().ln() - identity).abs() < 1e-10);
        }
    }

    #[test]
    fn slr_continuous_at_zero() {
        let shifted = AnalyticScoreModel::from_model(
            &UnivariateGaussianPairModel::new(2.0, 0.0, 0.1, 1.0).unwrap(),
        );
        let near = shifted.log_slr(1e-12).unwrap().ln();
        assert!((near - shifted.log_slr(0.0).unwrap().ln()).abs() < 1e-6);
    }
}
