use alloc::string::String;

use crate::models::Hypothesis;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("non-positive variance in `{0}`")]
    NonPositiveVariance(&'static str),
    #[error("dimension mismatch in `{field}`: expected {expected}, found {found}")]
    DimensionMismatch {
        field: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("`{0}` is not positive definite")]
    NotPositiveDefinite(&'static str),
    #[error("non-positive shape parameter `{0}`")]
    NonPositiveShape(&'static str),
    #[error("non-finite value in `{0}`")]
    NonFinite(&'static str),
    #[error("argument outside the domain: {0}")]
    Domain(String),
    #[error("series did not converge within {0} terms")]
    Convergence(usize),
    #[error("no training rows labelled {0}")]
    EmptyClass(Hypothesis),
    #[error("degenerate sample: {0}")]
    DegenerateSample(&'static str),
    #[error("density estimates were fitted on different supports")]
    SupportMismatch,
    #[error("empty input: {0}")]
    EmptyInput(&'static str),
    #[error("invalid parameter `{0}`")]
    InvalidParameter(&'static str),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
