//! Kernel estimate of the squared-difference SLR against its closed form.

use rayon::prelude::*;
use serde::Serialize;
use slr_core::density::{slr_from_kdes, Kde, Support};
use slr_core::scores::{score_squared_diff, AnalyticScoreModel};
use slr_core::stats::{quantile_sorted, sorted};
use slr_core::{Hypothesis, PairModel, SamplingMode, UnivariateGaussianPairModel};

use crate::error::Result;
use crate::sampling::sample_pairs;

pub const DEFAULT_N_FIT: usize = 100_000;
pub const TOLERANCE: f64 = 0.5;
pub const GRID_POINTS: usize = 1000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleRow {
    pub score: f64,
    pub log_slr_kde: f64,
    pub log_slr_analytic: f64,
    pub abs_diff: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleSummary {
    pub n_fit: usize,
    pub lower: f64,
    pub upper: f64,
    pub fraction_within: f64,
    pub max_abs_diff: f64,
}

/// Compares KDE and analytic log SLRs at evenly spaced `Hd` score quantiles
/// from 5% to 95%, with both KDEs fitted on `n_fit` scores.
pub fn oracle_equivalence(
    m: &UnivariateGaussianPairModel,
    n_fit: usize,
    seed: u64,
    mode: SamplingMode,
) -> Result<(Vec<OracleRow>, OracleSummary)> {
    let a = AnalyticScoreModel::from_model(m);
    let model = PairModel::from(*m);
    let fit = |h: Hypothesis| -> Result<(Vec<f64>, Kde)> {
        let s = sample_pairs(&model, h, mode, n_fit, seed, "oracle")
            .iter()
            .map(score_squared_diff)
            .collect::<Result<Vec<_>, _>>()?;
        let k = Kde::fit(&s, Support::RealLine, None)?;
        Ok((s, k))
    };
    let (_, kp) = fit(Hypothesis::Hp)?;
    let (sd, kd) = fit(Hypothesis::Hd)?;
    let sd = sorted(&sd);
    let q = |i: usize| quantile_sorted(&sd, 0.05 + 0.9 * i as f64 / (GRID_POINTS - 1) as f64);
    let (lower, upper) = (q(0), q(GRID_POINTS - 1));
    let rows: Vec<OracleRow> = (0..GRID_POINTS)
        .into_par_iter()
        .map(|i| {
            let s = q(i);
            let k = slr_from_kdes(&kp, &kd, s)?.ln();
            let e = a.log_slr(s)?.ln();
            Ok(OracleRow {
                score: s,
                log_slr_kde: k,
                log_slr_analytic: e,
                abs_diff: (k - e).abs(),
            })
        })
        .collect::<Result<_>>()?;
    let within = rows.iter().filter(|r| r.abs_diff <= TOLERANCE).count();
    let summary = OracleSummary {
        n_fit,
        lower,
        upper,
        fraction_within: within as f64 / rows.len() as f64,
        max_abs_diff: rows.iter().map(|r| r.abs_diff).fold(0.0, f64::max),
    };
    Ok((rows, summary))
}
