//! Empirical checks relating the LR to the SLR, and KL divergences.
//!
//! Given a score `s`, the LR is tied to the SLR by two exact identities:
//! `E[LR | s, Hd] = SLR(s)` and `E[1/LR | s, Hp] = 1/SLR(s)`. Markov's
//! inequality turns them into probability bounds. Cauchy-Schwarz gives
//! `E[LR | s, Hp] >= SLR` and `E[1/LR | s, Hd] >= 1/SLR`. The checks here
//! estimate those quantities from labelled simulation output, with explicit
//! Monte Carlo slack.

use alloc::vec::Vec;

use nalgebra::{Cholesky, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::binning::hyp_index;
use crate::error::{Error, Result};
use crate::logspace::{log_sum_exp_tree, LogValue};
use crate::models::{BetaVectorPairModel, Hypothesis, MvnPairModel, UnivariateGaussianPairModel};
use crate::special::{digamma, ln_beta};
use crate::stats;

/// Number of standard errors allowed before a bound counts as violated.
pub const SLACK_SE: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabeledScoreSample {
    pub score: f64,
    pub log_lr: LogValue,
    pub log_slr: LogValue,
    pub hypothesis: Hypothesis,
}

impl LabeledScoreSample {
    pub fn new(score: f64, log_lr: LogValue, log_slr: LogValue, hypothesis: Hypothesis) -> Result<Self> {
        if !score.is_finite() {
            return Err(Error::NonFinite("score"));
        }
        if !log_lr.is_finite() {
            return Err(Error::NonFinite("log_lr"));
        }
        if !log_slr.is_finite() {
            return Err(Error::NonFinite("log_slr"));
        }
        Ok(LabeledScoreSample {
            score,
            log_lr,
            log_slr,
            hypothesis,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundQuery {
    pub alpha: f64,
    pub beta_threshold: Option<f64>,
}

impl BoundQuery {
    pub fn new(alpha: f64, beta_threshold: Option<f64>) -> Result<Self> {
        check_alpha(alpha)?;
        if let Some(b) = beta_threshold {
            if !(b > 0.0) || !b.is_finite() {
                return Err(Error::domain("beta threshold must be positive"));
            }
        }
        Ok(BoundQuery {
            alpha,
            beta_threshold,
        })
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 1.0) || alpha.is_nan() {
        return Err(Error::domain(alloc::format!("alpha must exceed 1, got {alpha}")));
    }
    Ok(())
}

/// `1 - 1/alpha`.
pub fn markov_lower_bound(alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    Ok(1.0 - 1.0 / alpha)
}

/// Monte Carlo slack `3 sqrt(p (1 - p) / n)`.
pub fn binomial_slack(p: f64, n: usize) -> f64 {
    SLACK_SE * libm::sqrt(p * (1.0 - p) / n as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarkovCheck {
    pub alpha: f64,
    pub bound: f64,
    /// `P(log LR >= log SLR - log alpha | Hp)`
    pub p_hp: f64,
    /// `P(log LR <= log SLR + log alpha | Hd)`
    pub p_hd: f64,
    pub n_hp: usize,
    pub n_hd: usize,
    pub slack_hp: f64,
    pub slack_hd: f64,
    pub satisfied_hp: bool,
    pub satisfied_hd: bool,
}

impl MarkovCheck {
    pub fn empirical(&self, h: Hypothesis) -> f64 {
        match h {
            Hypothesis::Hp => self.p_hp,
            Hypothesis::Hd => self.p_hd,
        }
    }

    pub fn slack(&self, h: Hypothesis) -> f64 {
        match h {
            Hypothesis::Hp => self.slack_hp,
            Hypothesis::Hd => self.slack_hd,
        }
    }

    pub fn satisfied(&self, h: Hypothesis) -> bool {
        match h {
            Hypothesis::Hp => self.satisfied_hp,
            Hypothesis::Hd => self.satisfied_hd,
        }
    }
}

pub fn check_markov_bounds(samples: &[LabeledScoreSample], alpha: f64) -> Result<MarkovCheck> {
    let bound = markov_lower_bound(alpha)?;
    let la = libm::log(alpha);
    let mut hits = [0usize; 2];
    let mut n = [0usize; 2];
    for s in samples {
        let i = hyp_index(s.hypothesis);
        n[i] += 1;
        let ok = match s.hypothesis {
            Hypothesis::Hp => s.log_lr.0 >= s.log_slr.0 - la,
            Hypothesis::Hd => s.log_lr.0 <= s.log_slr.0 + la,
        };
        if ok {
            hits[i] += 1;
        }
    }
    if n.contains(&0) {
        return Err(Error::EmptyInput("no samples for one hypothesis"));
    }
    let p_hp = hits[0] as f64 / n[0] as f64;
    let p_hd = hits[1] as f64 / n[1] as f64;
    let slack_hp = binomial_slack(p_hp, n[0]);
    let slack_hd = binomial_slack(p_hd, n[1]);
    Ok(MarkovCheck {
        alpha,
        bound,
        p_hp,
        p_hd,
        n_hp: n[0],
        n_hd: n[1],
        slack_hp,
        slack_hd,
        satisfied_hp: p_hp >= bound - slack_hp,
        satisfied_hd: p_hd >= bound - slack_hd,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Transform {
    Lr,
    InverseLr,
}

impl Transform {
    fn sign(self) -> f64 {
        match self {
            Transform::Lr => 1.0,
            Transform::InverseLr => -1.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Transform::Lr => "lr",
            Transform::InverseLr => "inverse_lr",
        }
    }
}

/// Conditional mean of `LR` or `1/LR` over one equal-count score bin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreBinMean {
    pub score_lo: f64,
    pub score_hi: f64,
    pub n: usize,
    /// Log of the bin mean of the transformed LR.
    pub log_mean: f64,
    /// Standard error of the bin mean relative to the mean.
    pub rel_se: f64,
    /// Log of the bin mean of the identically transformed SLR.
    pub log_mean_slr: f64,
    /// Plain mean of the transformed log SLR.
    pub mean_log_slr: f64,
}

impl ScoreBinMean {
    pub fn is_defined(&self) -> bool {
        self.n > 0
    }

    /// Whether the bin mean dominates the transformed SLR, up to `SLACK_SE`
    /// relative standard errors.
    pub fn dominates_slr(&self) -> bool {
        self.log_mean + libm::log1p(SLACK_SE * self.rel_se) >= self.log_mean_slr
    }

    /// `log(mean SLR / mean LR)` for the transformed quantities; at most 0
    /// when Jensen's inequality holds.
    pub fn log_jensen_ratio(&self) -> f64 {
        self.log_mean_slr - self.log_mean
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreBinMeans {
    pub hypothesis: Hypothesis,
    pub transform: Transform,
    pub bins: Vec<ScoreBinMean>,
}

impl ScoreBinMeans {
    /// Fraction of bins with at least `min_n` samples whose mean dominates
    /// the SLR; `None` when no bin qualifies.
    pub fn dominance_fraction(&self, min_n: usize) -> Option<f64> {
        let populated: Vec<_> = self.bins.iter().filter(|b| b.n >= min_n.max(1)).collect();
        if populated.is_empty() {
            return None;
        }
        let ok = populated.iter().filter(|b| b.dominates_slr()).count();
        Some(ok as f64 / populated.len() as f64)
    }
}

/// Equal-count score bins for one hypothesis and per-bin means of
/// `exp(sign * log_lr)`, aggregated in log space.
pub fn conditional_mean_by_score_bin(
    samples: &[LabeledScoreSample],
    hypothesis: Hypothesis,
    n_bins: usize,
    transform: Transform,
) -> Result<ScoreBinMeans> {
    if n_bins == 0 {
        return Err(Error::InvalidParameter("n_bins"));
    }
    let mut sel: Vec<&LabeledScoreSample> = samples.iter().filter(|s| s.hypothesis == hypothesis).collect();
    if sel.is_empty() {
        return Err(Error::EmptyInput("no samples for the hypothesis"));
    }
    sel.sort_by(|a, b| a.score.total_cmp(&b.score));
    let sign = transform.sign();
    let n = sel.len();
    let mut bins = Vec::with_capacity(n_bins);
    let mut lr = Vec::new();
    let mut slr = Vec::new();
    for b in 0..n_bins {
        let lo = b * n / n_bins;
        let hi = (b + 1) * n / n_bins;
        let chunk = &sel[lo..hi];
        if chunk.is_empty() {
            bins.push(ScoreBinMean {
                score_lo: f64::NAN,
                score_hi: f64::NAN,
                n: 0,
                log_mean: f64::NAN,
                rel_se: f64::NAN,
                log_mean_slr: f64::NAN,
                mean_log_slr: f64::NAN,
            });
            continue;
        }
        lr.clear();
        slr.clear();
        lr.extend(chunk.iter().map(|s| sign * s.log_lr.0));
        slr.extend(chunk.iter().map(|s| sign * s.log_slr.0));
        let m = chunk.len() as f64;
        let log_mean = log_sum_exp_tree(&lr) - libm::log(m);
        // Relative spread of exp(l) around its mean, in scaled space.
        let rel_se = if chunk.len() > 1 {
            let ss: f64 = lr.iter().map(|&l| {
                let r = libm::exp(l - log_mean) - 1.0;
                r * r
            }).sum();
            libm::sqrt(ss / (m - 1.0) / m)
        } else {
            f64::INFINITY
        };
        bins.push(ScoreBinMean {
            score_lo: chunk[0].score,
            score_hi: chunk[chunk.len() - 1].score,
            n: chunk.len(),
            log_mean,
            rel_se,
            log_mean_slr: log_sum_exp_tree(&slr) - libm::log(m),
            mean_log_slr: stats::mean(&slr),
        });
    }
    Ok(ScoreBinMeans {
        hypothesis,
        transform,
        bins,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Hp,
    Hd,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CauchyBound {
    pub value: f64,
    /// The ratio term exceeded 1 and was clamped.
    pub jensen_violation: bool,
}

/// Cauchy-Schwarz lower bound on `P(LR < alpha SLR | s, Hp)` (side `Hp`) or
/// `P(LR > SLR / alpha | s, Hd)` (side `Hd`).
///
/// `cond_expectation` is `E[1/LR | s, Hd]` for side `Hp` and `E[LR | s, Hp]`
/// for side `Hd`.
pub fn cauchy_bound_value(log_slr: LogValue, cond_expectation: f64, alpha: f64, side: Side) -> Result<CauchyBound> {
    check_alpha(alpha)?;
    if !(cond_expectation > 0.0) || !cond_expectation.is_finite() {
        return Err(Error::domain("conditional expectation must be positive"));
    }
    if log_slr.0.is_nan() {
        return Err(Error::NonFinite("log_slr"));
    }
    let log_ratio = match side {
        Side::Hp => -log_slr.0 - libm::log(cond_expectation),
        Side::Hd => log_slr.0 - libm::log(cond_expectation),
    };
    let jensen_violation = log_ratio > 0.0;
    let ratio = libm::exp(log_ratio.min(0.0));
    let m = 1.0 - 1.0 / alpha;
    Ok(CauchyBound {
        value: (m * m * ratio).clamp(0.0, 1.0),
        jensen_violation,
    })
}

/// Empirical `P(SLR > beta | Hd)`, an upper bound on
/// `P(LR < SLR / alpha, SLR > beta | Hd)` for every alpha.
pub fn tail_product_bound(samples: &[LabeledScoreSample], beta_threshold: f64) -> Result<f64> {
    if !(beta_threshold > 0.0) {
        return Err(Error::domain("beta threshold must be positive"));
    }
    let lb = libm::log(beta_threshold);
    let (mut n, mut hits) = (0usize, 0usize);
    for s in samples.iter().filter(|s| s.hypothesis == Hypothesis::Hd) {
        n += 1;
        if s.log_slr.0 > lb {
            hits += 1;
        }
    }
    if n == 0 {
        return Err(Error::EmptyInput("no Hd samples"));
    }
    Ok(hits as f64 / n as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KlDirection {
    /// `KL(p(.|Hp) || p(.|Hd))`
    PToD,
    /// `KL(p(.|Hd) || p(.|Hp))`
    DToP,
}

impl KlDirection {
    pub const BOTH: [KlDirection; 2] = [KlDirection::PToD, KlDirection::DToP];

    /// Hypotheses `(a, b)` of `KL(a || b)`.
    pub fn hypotheses(self) -> (Hypothesis, Hypothesis) {
        match self {
            KlDirection::PToD => (Hypothesis::Hp, Hypothesis::Hd),
            KlDirection::DToP => (Hypothesis::Hd, Hypothesis::Hp),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            KlDirection::PToD => "p_to_d",
            KlDirection::DToP => "d_to_p",
        }
    }
}

fn gaussian_kl_1d(m0: f64, v0: f64, m1: f64, v1: f64) -> f64 {
    let dm = m1 - m0;
    0.5 * (libm::log(v1 / v0) + (v0 + dm * dm) / v1 - 1.0)
}

/// KL divergence between the `y` marginals of a univariate Gaussian model.
pub fn kl_gaussian_univariate(m: &UnivariateGaussianPairModel, direction: KlDirection) -> Result<f64> {
    m.validate()?;
    let p = (m.mu_x, m.sigma_w * m.sigma_w);
    let sd = m.sd_d();
    let d = (m.mu_b, sd * sd);
    let ((m0, v0), (m1, v1)) = match direction {
        KlDirection::PToD => (p, d),
        KlDirection::DToP => (d, p),
    };
    Ok(gaussian_kl_1d(m0, v0, m1, v1))
}

/// KL divergence between the `y` marginals of a multivariate Gaussian model.
pub fn kl_gaussian_mvn(m: &MvnPairModel, direction: KlDirection) -> Result<f64> {
    let (a, b) = direction.hypotheses();
    let s0 = m.cov_y(a);
    let s1 = m.cov_y(b);
    let k = s0.nrows() as f64;
    let c0 = Cholesky::new(s0.clone()).ok_or(Error::NotPositiveDefinite("covariance"))?;
    let c1 = Cholesky::new(s1).ok_or(Error::NotPositiveDefinite("covariance"))?;
    let log_det = |c: &Cholesky<f64, nalgebra::Dyn>| -> f64 {
        2.0 * c.l_dirty().diagonal().iter().map(|v| libm::log(*v)).sum::<f64>()
    };
    let dm = DVector::from_iterator(
        m.dim(),
        m.mean_y(b).iter().zip(m.mean_y(a)).map(|(u, v)| u - v),
    );
    let inv_s0: DMatrix<f64> = c1.solve(&s0);
    let quad = dm.dot(&c1.solve(&dm));
    Ok(0.5 * (inv_s0.trace() + quad - k + log_det(&c1) - log_det(&c0)))
}

/// Closed-form Gaussian KL for either Gaussian family.
pub fn kl_gaussian_exact(model: &crate::PairModel, direction: KlDirection) -> Result<f64> {
    match model {
        crate::PairModel::Univariate(m) => kl_gaussian_univariate(m, direction),
        crate::PairModel::Mvn(m) => kl_gaussian_mvn(m, direction),
        crate::PairModel::Beta(_) => Err(Error::InvalidParameter("model family")),
    }
}

/// `KL(Beta(a0, b0) || Beta(a1, b1))`.
pub fn kl_beta_1d(a0: f64, b0: f64, a1: f64, b1: f64) -> Result<f64> {
    for (v, name) in [(a0, "alpha"), (b0, "beta"), (a1, "alpha"), (b1, "beta")] {
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::NonPositiveShape(name));
        }
    }
    Ok(ln_beta(a1, b1) - ln_beta(a0, b0)
        + (a0 - a1) * digamma(a0)
        + (b0 - b1) * digamma(b0)
        + (a1 - a0 + b1 - b0) * digamma(a0 + b0))
}

/// KL divergence between the iid Beta `y` marginals, `d` times the
/// per-coordinate value.
pub fn kl_beta_exact(m: &BetaVectorPairModel, direction: KlDirection) -> Result<f64> {
    m.validate()?;
    let (a, b) = direction.hypotheses();
    let (a0, b0) = m.shapes(a);
    let (a1, b1) = m.shapes(b);
    Ok(m.d as f64 * kl_beta_1d(a0, b0, a1, b1)?)
}

/// Closed-form KL between the raw-data distributions of any family.
pub fn kl_exact(model: &crate::PairModel, direction: KlDirection) -> Result<f64> {
    match model {
        crate::PairModel::Beta(m) => kl_beta_exact(m, direction),
        other => kl_gaussian_exact(other, direction),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KlEstimate {
    pub estimate: f64,
    pub standard_error: f64,
    pub n: usize,
    /// Negative beyond `SLACK_SE` standard errors.
    pub negative: bool,
}

impl KlEstimate {
    /// Data-processing check against a raw-data KL.
    pub fn within(&self, exact: f64) -> bool {
        self.estimate <= exact + SLACK_SE * self.standard_error
    }
}

/// Monte Carlo KL estimate `mean(log f_a(s) - log f_b(s))` over scores drawn
/// under `H_a`, given both log densities at each score.
pub fn kl_score_mc(log_f_a: &[LogValue], log_f_b: &[LogValue]) -> Result<KlEstimate> {
    if log_f_a.len() != log_f_b.len() {
        return Err(Error::DimensionMismatch {
            field: "log_f_b",
            expected: log_f_a.len(),
            found: log_f_b.len(),
        });
    }
    if log_f_a.is_empty() {
        return Err(Error::EmptyInput("no score samples"));
    }
    let diffs: Vec<f64> = log_f_a.iter().zip(log_f_b).map(|(a, b)| a.0 - b.0).collect();
    if diffs.iter().any(|d| !d.is_finite()) {
        return Err(Error::NonFinite("log density"));
    }
    let n = diffs.len();
    let estimate = stats::mean(&diffs);
    let standard_error = if n > 1 {
        stats::std_dev(&diffs) / libm::sqrt(n as f64)
    } else {
        f64::INFINITY
    };
    Ok(KlEstimate {
        estimate,
        standard_error,
        n,
        negative: estimate < -SLACK_SE * standard_error,
    })
}
