//! Natural-log scalars and numerically stable reductions over them.

use core::fmt;
use core::ops::{Add, Neg, Sub};

use serde::{Deserialize, Serialize};

/// Natural logarithm of a positive quantity (a density, a ratio, a
/// probability). Exponentiate only when presenting a value.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LogValue(pub f64);

impl LogValue {
    pub const ZERO: LogValue = LogValue(0.0);

    #[inline]
    pub fn from_value(v: f64) -> Self {
        LogValue(libm::log(v))
    }

    #[inline]
    pub fn ln(self) -> f64 {
        self.0
    }

    #[inline]
    pub fn log10(self) -> f64 {
        self.0 / core::f64::consts::LN_10
    }

    #[inline]
    pub fn exp(self) -> f64 {
        libm::exp(self.0)
    }

    #[inline]
    pub fn is_finite(self) -> bool {
        self.0.is_finite()
    }
}

impl Add for LogValue {
    type Output = LogValue;
    fn add(self, rhs: LogValue) -> LogValue {
        LogValue(self.0 + rhs.0)
    }
}

impl Sub for LogValue {
    type Output = LogValue;
    fn sub(self, rhs: LogValue) -> LogValue {
        LogValue(self.0 - rhs.0)
    }
}

impl Neg for LogValue {
    type Output = LogValue;
    fn neg(self) -> LogValue {
        LogValue(-self.0)
    }
}

impl From<f64> for LogValue {
    fn from(v: f64) -> Self {
        LogValue(v)
    }
}

impl fmt::Display for LogValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.0, f)
    }
}

/// `log(exp(a) + exp(b))`.
#[inline]
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + libm::log1p(libm::exp(lo - hi))
}

/// `log(sum(exp(x)))` over a slice; `-inf` for an empty slice.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if max == f64::INFINITY {
        return f64::INFINITY;
    }
    let sum: f64 = xs.iter().map(|&x| libm::exp(x - max)).sum();
    max + libm::log(sum)
}

/// Log-sum-exp reduced as a balanced pairwise tree whose shape depends only
/// on `xs.len()`, so partition-and-merge callers get identical results.
pub fn log_sum_exp_tree(xs: &[f64]) -> f64 {
    const LEAF: usize = 64;
    if xs.len() <= LEAF {
        return log_sum_exp(xs);
    }
    let mid = xs.len() / 2;
    log_add_exp(log_sum_exp_tree(&xs[..mid]), log_sum_exp_tree(&xs[mid..]))
}

/// Log of the arithmetic mean of `exp(x)`.
pub fn log_mean_exp(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    log_sum_exp_tree(xs) - libm::log(xs.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lse_handles_extreme_magnitudes() {
        let xs = [-1000.0, -1000.0];
        assert!((log_sum_exp(&xs) - (-1000.0 + core::f64::consts::LN_2)).abs() < 1e-12);
        assert_eq!(log_sum_exp(&[]), f64::NEG_INFINITY);
        assert_eq!(log_add_exp(f64::NEG_INFINITY, 3.0), 3.0);
    }

    #[test]
    fn tree_matches_flat() {
        let xs: alloc::vec::Vec<f64> = (0..1000).map(|i| -(i as f64) * 0.37).collect();
        assert!((log_sum_exp(&xs) - log_sum_exp_tree(&xs)).abs() < 1e-12);
        assert!((log_mean_exp(&[2.0, 2.0, 2.0]) - 2.0).abs() < 1e-15);
    }
}
