use rayon::prelude::*;
use serde::Serialize;
use slr_core::binning::{agreement_matrix, BinScale, LrSlr};
use slr_core::scores::{score_squared_diff, AnalyticScoreModel};
use slr_core::{Hypothesis, PairModel, SamplingMode, UnivariateGaussianPairModel};

use crate::error::Result;
use crate::sampling::sample_pairs;

pub const DEFAULT_N: usize = 100_000;

/// `(mu_x, sigma_w)` rows of the agreement table.
pub const SETTINGS: [(f64, f64); 4] = [(0.0, 0.1), (2.0, 0.1), (0.0, 0.01), (2.0, 0.01)];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HeatmapRow {
    pub mu_x: f64,
    pub sigma_w: f64,
    pub hypothesis: Hypothesis,
    pub slr_bin: usize,
    pub slr_interval: String,
    pub lr_bin: usize,
    pub lr_interval: String,
    pub probability: f64,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table1Row {
    pub mu_x: f64,
    pub sigma_w: f64,
    pub hypothesis: Hypothesis,
    pub overall_agreement: f64,
    pub n: u64,
}

/// The four `(mu_x, sigma_w)` settings with a shared background population.
pub fn table1_settings(mu_b: f64, sigma_b: f64) -> Result<Vec<UnivariateGaussianPairModel>> {
    SETTINGS
        .iter()
        .map(|&(mu_x, sigma_w)| Ok(UnivariateGaussianPairModel::new(mu_x, mu_b, sigma_w, sigma_b)?))
        .collect()
}

/// Agreement matrices and overall agreement per model, using the analytic
/// SLR of the squared-difference score. Each setting draws from its own
/// streams, so a setting gives the same rows alone or in a sweep.
pub fn bin_agreement(
    models: &[UnivariateGaussianPairModel],
    n: usize,
    seed: u64,
    mode: SamplingMode,
) -> Result<(Vec<HeatmapRow>, Vec<Table1Row>)> {
    let scale = BinScale::evett();
    let mut heat = Vec::new();
    let mut table = Vec::new();
    for &m in models {
        let (mu_x, sigma_w) = (m.mu_x, m.sigma_w);
        let a = AnalyticScoreModel::from_model(&m);
        let model = PairModel::from(m);
        let mut samples = Vec::with_capacity(2 * n);
        for h in Hypothesis::BOTH {
            let pairs = sample_pairs(&model, h, mode, n, seed, &format!("bins/{mu_x}/{sigma_w}"));
            let part: Vec<LrSlr> = pairs
                .par_iter()
                .map(|p| {
                    Ok(LrSlr {
                        hypothesis: h,
                        log_lr: m.log_lr(p.y[0]).ln(),
                        log_slr: a.log_slr(score_squared_diff(p)?)?.ln(),
                    })
                })
                .collect::<Result<_>>()?;
            samples.extend(part);
        }
        for matrix in agreement_matrix(&samples, &scale)? {
            for row in 0..matrix.n_bins() {
                if !matrix.is_defined(row) {
                    continue;
                }
                for col in 0..matrix.n_bins() {
                    heat.push(HeatmapRow {
                        mu_x,
                        sigma_w,
                        hypothesis: matrix.hypothesis,
                        slr_bin: row,
                        slr_interval: scale.bin_name(row),
                        lr_bin: col,
                        lr_interval: scale.bin_name(col),
                        probability: matrix.probability(row, col).unwrap_or(0.0),
                        count: matrix.counts[row][col],
                    });
                }
            }
            table.push(Table1Row {
                mu_x,
                sigma_w,
                hypothesis: matrix.hypothesis,
                overall_agreement: matrix.overall_agreement(),
                n: matrix.total,
            });
        }
    }
    Ok((heat, table))
}
