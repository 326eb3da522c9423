use rayon::prelude::*;
use serde::Serialize;
use slr_core::bounds::{check_markov_bounds, LabeledScoreSample};
use slr_core::density::{Kde, Support};
use slr_core::forest::{clamp_score, grow_member, DecisionTree, Forest, ForestParams, TrainingSet};
use slr_core::rng::derive_seed;
use slr_core::{EvidencePair, Hypothesis, LogValue, PairModel, SamplingMode};

use super::ALPHAS;
use crate::error::Result;
use crate::sampling::sample_pairs;

pub const DEFAULT_N_TRAIN: usize = 20_000;
pub const DEFAULT_N_EVAL: usize = 10_000;
/// Level of the reference lines drawn on the scatter plots.
pub const REFERENCE_ALPHA: f64 = 20.0;

/// A trained forest, the score densities fitted on held-out scores, and the
/// labelled evaluation sample.
#[derive(Debug, Clone)]
pub struct RfStudy {
    pub model: PairModel,
    pub n_train: usize,
    pub forest: Forest,
    pub kde_p: Kde,
    pub kde_d: Kde,
    pub samples: Vec<LabeledScoreSample>,
    /// `(log f_p(s), log f_d(s))` at each sample's score.
    pub log_densities: Vec<(LogValue, LogValue)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoreRow {
    pub hypothesis: Hypothesis,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScatterRow {
    pub hypothesis: Hypothesis,
    pub score: f64,
    pub log_lr: f64,
    pub log_slr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table2Row {
    pub alpha: f64,
    pub hypothesis: Hypothesis,
    pub empirical: f64,
    pub bound: f64,
    pub slack: f64,
    pub pass: bool,
}

/// Forest seed derived from the study seed.
pub fn forest_seed(seed: u64) -> u64 {
    let bytes = derive_seed(seed, "forest", 0);
    u64::from_le_bytes(bytes[..8].try_into().expect("eight bytes"))
}

/// Trees grown concurrently; the result equals sequential training.
pub fn train_forest(data: &TrainingSet, params: ForestParams) -> Result<Forest> {
    Forest::check_inputs(data, &params)?;
    let trees: Vec<DecisionTree> = (0..params.n_trees)
        .into_par_iter()
        .map(|i| grow_member(data, &params, i))
        .collect();
    Ok(Forest::from_trees(params, data.n_features(), trees)?)
}

/// Trains on `n_train` pairs split evenly between the hypotheses, then
/// scores `n_eval` fresh pairs per hypothesis.
pub fn run_rf_study(
    model: &PairModel,
    n_train: usize,
    n_eval: usize,
    seed: u64,
    mode: SamplingMode,
) -> Result<RfStudy> {
    let mut labelled = Vec::with_capacity(n_train);
    for (h, n) in [(Hypothesis::Hp, n_train - n_train / 2), (Hypothesis::Hd, n_train / 2)] {
        labelled.extend(sample_pairs(model, h, mode, n, seed, "rf/train").into_iter().map(|p| (p, h)));
    }
    let data = TrainingSet::from_pairs(&labelled)?;
    drop(labelled);
    let params = ForestParams::defaults(data.n_features(), forest_seed(seed));
    let forest = train_forest(&data, params)?;

    let mut pairs: Vec<(EvidencePair, Hypothesis)> = Vec::with_capacity(2 * n_eval);
    for h in Hypothesis::BOTH {
        pairs.extend(sample_pairs(model, h, mode, n_eval, seed, "rf/eval").into_iter().map(|p| (p, h)));
    }
    let scored: Vec<(f64, LogValue)> = pairs
        .par_iter()
        .map(|(p, _)| Ok((clamp_score(forest.score_pair(p)?, n_train), model.log_lr(p)?)))
        .collect::<Result<_>>()?;
    let fit = |h: Hypothesis| -> Result<Kde> {
        let pts: Vec<f64> = scored.iter().zip(&pairs).filter(|(_, (_, g))| *g == h).map(|(s, _)| s.0).collect();
        Ok(Kde::fit(&pts, Support::UnitInterval, None)?)
    };
    let kde_p = fit(Hypothesis::Hp)?;
    let kde_d = fit(Hypothesis::Hd)?;
    let log_densities: Vec<(LogValue, LogValue)> = scored
        .par_iter()
        .map(|&(s, _)| (kde_p.log_density(s), kde_d.log_density(s)))
        .collect();
    let samples = scored
        .iter()
        .zip(&pairs)
        .zip(&log_densities)
        .map(|((&(s, lr), (_, h)), &(fp, fd))| LabeledScoreSample::new(s, lr, fp - fd, *h))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(RfStudy {
        model: model.clone(),
        n_train,
        forest,
        kde_p,
        kde_d,
        samples,
        log_densities,
    })
}

impl RfStudy {
    pub fn score_rows(&self) -> Vec<ScoreRow> {
        self.samples
            .iter()
            .map(|s| ScoreRow {
                hypothesis: s.hypothesis,
                score: s.score,
            })
            .collect()
    }

    pub fn scatter_rows(&self) -> Vec<ScatterRow> {
        self.samples
            .iter()
            .map(|s| ScatterRow {
                hypothesis: s.hypothesis,
                score: s.score,
                log_lr: s.log_lr.ln(),
                log_slr: s.log_slr.ln(),
            })
            .collect()
    }

    pub fn table2(&self) -> Result<Vec<Table2Row>> {
        table2(&self.samples)
    }
}

/// Empirical Markov bound probabilities per level and hypothesis, `Hd` first.
pub fn table2(samples: &[LabeledScoreSample]) -> Result<Vec<Table2Row>> {
    let checks = ALPHAS
        .iter()
        .map(|&a| check_markov_bounds(samples, a))
        .collect::<Result<Vec<_>, _>>()?;
    let mut rows = Vec::with_capacity(2 * ALPHAS.len());
    for h in [Hypothesis::Hd, Hypothesis::Hp] {
        for c in &checks {
            rows.push(Table2Row {
                alpha: c.alpha,
                hypothesis: h,
                empirical: c.empirical(h),
                bound: c.bound,
                slack: c.slack(h),
                pass: c.satisfied(h),
            });
        }
    }
    Ok(rows)
}
