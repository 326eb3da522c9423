//! Seeded simulation studies, artifact writers and the `slr-lab` command
//! line on top of `slr-core`.

pub mod cli;
pub mod config;
pub mod error;
pub mod output;
pub mod persist;
pub mod run;
pub mod sampling;
pub mod studies;

pub use error::{LabError, Result};
