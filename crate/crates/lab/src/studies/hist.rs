use rayon::prelude::*;
use serde::Serialize;
use slr_core::scores::{score_squared_diff, AnalyticScoreModel};
use slr_core::stats::{quantile_sorted, sorted};
use slr_core::{Hypothesis, PairModel, SamplingMode, UnivariateGaussianPairModel};

use crate::error::Result;
use crate::sampling::sample_pairs;

pub const DEFAULT_N: usize = 5000;
/// Discrepancy threshold of the tail summary.
pub const TAIL_THRESHOLD: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscRow {
    pub hypothesis: Hypothesis,
    pub log_slr_minus_log_lr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscSummary {
    pub n_per_hypothesis: usize,
    /// `P(log SLR - log LR > 10 | Hd)`
    pub tail_fraction_hd: f64,
    pub min_hd: f64,
    pub q025_hp: f64,
    pub q975_hp: f64,
}

/// `log SLR - log LR` for `n` pairs per hypothesis, analytic SLR.
pub fn discrepancy_hist(
    m: &UnivariateGaussianPairModel,
    n: usize,
    seed: u64,
    mode: SamplingMode,
) -> Result<(Vec<DiscRow>, DiscSummary)> {
    let a = AnalyticScoreModel::from_model(m);
    let model = PairModel::from(*m);
    let mut rows = Vec::with_capacity(2 * n);
    let mut diffs: [Vec<f64>; 2] = Default::default();
    for (k, h) in Hypothesis::BOTH.into_iter().enumerate() {
        let pairs = sample_pairs(&model, h, mode, n, seed, "hist");
        let d: Vec<f64> = pairs
            .par_iter()
            .map(|p| Ok(a.log_slr(score_squared_diff(p)?)?.ln() - m.log_lr(p.y[0]).ln()))
            .collect::<Result<_>>()?;
        rows.extend(d.iter().map(|&v| DiscRow {
            hypothesis: h,
            log_slr_minus_log_lr: v,
        }));
        diffs[k] = d;
    }
    let hp = sorted(&diffs[0]);
    let hd = &diffs[1];
    let summary = DiscSummary {
        n_per_hypothesis: n,
        tail_fraction_hd: hd.iter().filter(|&&d| d > TAIL_THRESHOLD).count() as f64 / n as f64,
        min_hd: hd.iter().copied().fold(f64::INFINITY, f64::min),
        q025_hp: quantile_sorted(&hp, 0.025),
        q975_hp: quantile_sorted(&hp, 0.975),
    };
    Ok((rows, summary))
}
