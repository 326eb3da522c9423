//! Verbal evidence scale and LR/SLR bin agreement.
//!
//! Bins are right-closed intervals `(a, b]` over the boundaries
//! `1e-4, 1e-3, ..., 1e4`: ten bins from `(0, 1e-4]` to `(1e4, inf)`. The
//! five bins above 1 carry the verbal labels Limited, Moderate, Moderately
//! strong, Strong and Very strong.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::Hypothesis;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinScale {
    boundaries: Vec<f64>,
    log_boundaries: Vec<f64>,
}

const EVETT_LABELS: [&str; 5] = ["Limited", "Moderate", "Moderately strong", "Strong", "Very strong"];

impl Default for BinScale {
    fn default() -> Self {
        BinScale::evett()
    }
}

impl BinScale {
    /// Decade boundaries `1e-4 ..= 1e4`.
    pub fn evett() -> Self {
        let boundaries = vec![1e-4, 1e-3, 1e-2, 1e-1, 1.0, 1e1, 1e2, 1e3, 1e4];
        BinScale::new(boundaries).expect("static boundaries are valid")
    }

    /// Custom positive, strictly increasing boundaries.
    pub fn new(boundaries: Vec<f64>) -> Result<Self> {
        if boundaries.is_empty() {
            return Err(Error::EmptyInput("boundaries"));
        }
        if boundaries.iter().any(|b| !(*b > 0.0) || !b.is_finite())
            || boundaries.windows(2).any(|w| w[0] >= w[1])
        {
            return Err(Error::InvalidParameter("boundaries"));
        }
        let log_boundaries = boundaries.iter().map(|&b| libm::log(b)).collect();
        Ok(BinScale {
            boundaries,
            log_boundaries,
        })
    }

    pub fn boundaries(&self) -> &[f64] {
        &self.boundaries
    }

    pub fn n_bins(&self) -> usize {
        self.boundaries.len() + 1
    }

    /// Bin holding `value > 0`.
    pub fn bin_of(&self, value: f64) -> Result<usize> {
        if !(value > 0.0) || !value.is_finite() {
            return Err(Error::domain(alloc::format!("cannot bin {value}")));
        }
        Ok(self.boundaries.partition_point(|&b| b < value))
    }

    /// Bin holding `exp(log_value)`, computed without exponentiating.
    pub fn bin_of_log(&self, log_value: f64) -> Result<usize> {
        if log_value.is_nan() {
            return Err(Error::domain("cannot bin NaN"));
        }
        Ok(self.log_boundaries.partition_point(|&b| b < log_value))
    }

    /// Half-open interval `(lower, upper]` of a bin; `upper` is `inf` for the last.
    pub fn interval(&self, bin: usize) -> (f64, f64) {
        let lo = if bin == 0 { 0.0 } else { self.boundaries[bin - 1] };
        let hi = self.boundaries.get(bin).copied().unwrap_or(f64::INFINITY);
        (lo, hi)
    }

    /// Verbal label for bins above 1 on the decade scale.
    pub fn label(&self, bin: usize) -> Option<&'static str> {
        let one = self.boundaries.iter().position(|&b| b == 1.0)?;
        EVETT_LABELS.get(bin.checked_sub(one + 1)?).copied()
    }

    /// Short text form of a bin such as `(1e1,1e2]`.
    pub fn bin_name(&self, bin: usize) -> alloc::string::String {
        let (lo, hi) = self.interval(bin);
        let fmt = |v: f64| -> alloc::string::String {
            if v == 0.0 {
                "0".into()
            } else if v.is_infinite() {
                "inf".into()
            } else {
                alloc::format!("1e{}", libm::round(libm::log10(v)) as i32)
            }
        };
        if hi.is_infinite() {
            alloc::format!("({},inf)", fmt(lo))
        } else {
            alloc::format!("({},{}]", fmt(lo), fmt(hi))
        }
    }
}

/// A log-LR / log-SLR pair for agreement analysis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LrSlr {
    pub hypothesis: Hypothesis,
    pub log_lr: f64,
    pub log_slr: f64,
}

/// Empirical `P(LR in B' | SLR in B, H)` for one hypothesis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementMatrix {
    pub hypothesis: Hypothesis,
    /// `counts[slr_bin][lr_bin]`
    pub counts: Vec<Vec<u64>>,
    pub total: u64,
}

impl AgreementMatrix {
    pub fn new(hypothesis: Hypothesis, n_bins: usize) -> Self {
        AgreementMatrix {
            hypothesis,
            counts: vec![vec![0; n_bins]; n_bins],
            total: 0,
        }
    }

    pub fn n_bins(&self) -> usize {
        self.counts.len()
    }

    pub fn row_count(&self, slr_bin: usize) -> u64 {
        self.counts[slr_bin].iter().sum()
    }

    /// `false` for rows without any SLR observation.
    pub fn is_defined(&self, slr_bin: usize) -> bool {
        self.row_count(slr_bin) > 0
    }

    /// Conditional probability, `None` on undefined rows.
    pub fn probability(&self, slr_bin: usize, lr_bin: usize) -> Option<f64> {
        let n = self.row_count(slr_bin);
        (n > 0).then(|| self.counts[slr_bin][lr_bin] as f64 / n as f64)
    }

    /// `P(SLR in B | H)`.
    pub fn slr_marginal(&self, slr_bin: usize) -> f64 {
        self.row_count(slr_bin) as f64 / self.total as f64
    }

    /// `sum_B P(LR in B | SLR in B, H) P(SLR in B | H)`.
    pub fn overall_agreement(&self) -> f64 {
        (0..self.n_bins())
            .filter_map(|b| self.probability(b, b).map(|p| p * self.slr_marginal(b)))
            .sum()
    }

    /// Adds counts from a matrix built on another partition of the samples.
    pub fn merge(&mut self, other: &AgreementMatrix) {
        for (r, o) in self.counts.iter_mut().zip(&other.counts) {
            for (c, v) in r.iter_mut().zip(o) {
                *c += v;
            }
        }
        self.total += other.total;
    }
}

/// Agreement matrices `[Hp, Hd]` built from paired log ratios.
pub fn agreement_matrix(samples: &[LrSlr], scale: &BinScale) -> Result<[AgreementMatrix; 2]> {
    let mut out = [
        AgreementMatrix::new(Hypothesis::Hp, scale.n_bins()),
        AgreementMatrix::new(Hypothesis::Hd, scale.n_bins()),
    ];
    for s in samples {
        let m = &mut out[hyp_index(s.hypothesis)];
        let sb = scale.bin_of_log(s.log_slr)?;
        let lb = scale.bin_of_log(s.log_lr)?;
        m.counts[sb][lb] += 1;
        m.total += 1;
    }
    for m in &out {
        if m.total == 0 {
            return Err(Error::EmptyInput("no samples for one hypothesis"));
        }
    }
    Ok(out)
}

/// Overall agreement `[Hp, Hd]` via the conditional decomposition.
pub fn overall_agreement(samples: &[LrSlr], scale: &BinScale) -> Result<[f64; 2]> {
    let [p, d] = agreement_matrix(samples, scale)?;
    Ok([p.overall_agreement(), d.overall_agreement()])
}

/// Plain fraction of samples whose LR and SLR share a bin, per hypothesis `[Hp, Hd]`.
pub fn same_bin_fraction(samples: &[LrSlr], scale: &BinScale) -> Result<[f64; 2]> {
    let mut hits = [0u64; 2];
    let mut totals = [0u64; 2];
    for s in samples {
        let i = hyp_index(s.hypothesis);
        totals[i] += 1;
        if scale.bin_of_log(s.log_lr)? == scale.bin_of_log(s.log_slr)? {
            hits[i] += 1;
        }
    }
    if totals.contains(&0) {
        return Err(Error::EmptyInput("no samples for one hypothesis"));
    }
    Ok([hits[0] as f64 / totals[0] as f64, hits[1] as f64 / totals[1] as f64])
}

#[inline]
pub(crate) fn hyp_index(h: Hypothesis) -> usize {
    match h {
        Hypothesis::Hp => 0,
        Hypothesis::Hd => 1,
    }
}
