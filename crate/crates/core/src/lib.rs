//! Exact and score-based likelihood ratios for specific-source evidence.
//!
//! The crate models pairs of evidence `(x, y)`: `x` comes from a known source
//! and `y` from an unknown source. Under the prosecution hypothesis `Hp`, `y`
//! is a further draw from the known source. Under the defense hypothesis `Hd`,
//! it comes from an alternative population. Three families are provided:
//! univariate Gaussian, multivariate Gaussian, and iid Beta vectors.
//!
//! For each family the crate computes:
//!
//! * the exact log likelihood ratio `log p(y | Hp) - log p(y | Hd)`
//!   ([`PairModel::log_lr`]),
//! * scores `s(x, y)` (squared difference, Euclidean distance, or a random
//!   forest class proportion, see [`scores`] and [`forest`]),
//! * score densities, either analytic ([`scores::AnalyticScoreModel`]) or
//!   kernel estimates ([`density::Kde`]), and the score-based likelihood
//!   ratio built from them,
//! * empirical checks of the Markov and Cauchy-Schwarz style bounds that
//!   relate the two ratios, agreement over the verbal evidence scale, and
//!   KL data-processing checks ([`bounds`], [`binning`]).
//!
//! Every density-bearing quantity is kept in natural-log space as a
//! [`LogValue`].
//!
//! The crate is `no_std` and needs only `alloc`. Parallel drivers, file
//! formats and the command line live in the `slr-lab` crate.

#![no_std]
// `!(x > 0.0)` is used on purpose so that NaN fails validation
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod binning;
pub mod bounds;
pub mod density;
pub mod error;
pub mod forest;
pub mod logspace;
pub mod models;
pub mod rng;
pub mod scores;
pub mod special;
pub mod stats;

pub use error::{Error, Result};
pub use logspace::LogValue;
pub use models::{
    BetaVectorPairModel, EvidencePair, Hypothesis, MvnPairModel, PairModel, SamplingMode,
    UnivariateGaussianPairModel,
};
