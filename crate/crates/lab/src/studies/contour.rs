use serde::Serialize;
use slr_core::scores::{score_squared_diff, AnalyticScoreModel};
use slr_core::{EvidencePair, UnivariateGaussianPairModel};

use crate::error::Result;

pub const GRID_HALF_WIDTH: f64 = 2.0;
pub const DEFAULT_STEP: f64 = 0.02;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContourRow {
    pub x: f64,
    pub y: f64,
    pub log_lr: f64,
    pub log_slr: f64,
}

/// Exact log LR and analytic log SLR on `[-2, 2]^2`, `x` varying fastest.
pub fn contour_grid(m: &UnivariateGaussianPairModel, step: f64) -> Result<Vec<ContourRow>> {
    let a = AnalyticScoreModel::from_model(m);
    let n = (2.0 * GRID_HALF_WIDTH / step + 1e-9).floor() as usize + 1;
    let coord = |i: usize| -GRID_HALF_WIDTH + i as f64 * step;
    let mut rows = Vec::with_capacity(n * n);
    for j in 0..n {
        let y = coord(j);
        let log_lr = m.log_lr(y).ln();
        for i in 0..n {
            let x = coord(i);
            let s = score_squared_diff(&EvidencePair::scalar(x, y))?;
            rows.push(ContourRow {
                x,
                y,
                log_lr,
                log_slr: a.log_slr(s)?.ln(),
            });
        }
    }
    Ok(rows)
}
