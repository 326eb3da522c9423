//! Seeded studies behind each CLI subcommand.
//!
//! Every study is a pure function of its model, sizes and seed. Writers in
//! [`crate::run`] turn the results into CSV artifacts.

pub mod bins;
pub mod contour;
pub mod hist;
pub mod oracle;
pub mod rf;
pub mod suite;

use slr_core::{BetaVectorPairModel, MvnPairModel, UnivariateGaussianPairModel};

/// Markov bound levels, largest first.
pub const ALPHAS: [f64; 6] = [100.0, 50.0, 20.0, 10.0, 5.0, 2.0];

/// `mu_x = mu_b = 0`, `sigma_w = 0.2`, `sigma_b = 1`.
pub fn simple_model() -> UnivariateGaussianPairModel {
    UnivariateGaussianPairModel::new(0.0, 0.0, 0.2, 1.0).expect("valid parameters")
}

/// Five-dimensional Gaussian model of the random forest study.
pub fn mvn_default_model() -> MvnPairModel {
    MvnPairModel::isotropic(5, 0.5, 0.0, 0.5, 1.0).expect("valid parameters")
}

/// Beta study with `(alpha_y, beta_y) = (1, 2)`; `(2, 1)` for both sources
/// makes both hypotheses identical.
pub fn beta_default_model() -> BetaVectorPairModel {
    BetaVectorPairModel::new(2.0, 1.0, 1.0, 2.0, 5).expect("valid parameters")
}
