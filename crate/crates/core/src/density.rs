//! Gaussian kernel density estimates of score distributions.
//!
//! Evaluation is an exact kernel sum, carried out in log space: the nearest
//! fitted point fixes the largest kernel term, and points whose kernel is
//! below `exp(-TAIL_CUTOFF)` times that term are skipped. The relative error
//! from skipping is at most `n * exp(-TAIL_CUTOFF)` (about `2e-17` for
//! `n = 1e5`). The result is floored at [`DEFAULT_LOG_FLOOR`], so a log
//! density is never `-inf`.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::logspace::LogValue;
use crate::special::ln_sqrt_2pi;
use crate::stats::{quantile_sorted, sorted, std_dev};

/// Roughly the log of the smallest normal double.
pub const DEFAULT_LOG_FLOOR: f64 = -690.0;

/// Kernel terms smaller than `exp(-TAIL_CUTOFF)` times the largest are skipped.
const TAIL_CUTOFF: f64 = 50.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Support {
    RealLine,
    /// `[0, 1]` with reflection of the kernel mass at both ends.
    UnitInterval,
}

impl Support {
    pub fn as_str(self) -> &'static str {
        match self {
            Support::RealLine => "real_line",
            Support::UnitInterval => "unit_interval",
        }
    }
}

/// `0.9 * min(sd, IQR / 1.34) * n^(-1/5)`; falls back to `sd` when the IQR
/// is zero.
pub fn silverman_bandwidth(points: &[f64]) -> Result<f64> {
    if points.len() < 2 {
        return Err(Error::DegenerateSample("fewer than two points"));
    }
    if points.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("points"));
    }
    let sd = std_dev(points);
    if !(sd > 0.0) {
        return Err(Error::DegenerateSample("zero standard deviation"));
    }
    let s = sorted(points);
    let iqr = quantile_sorted(&s, 0.75) - quantile_sorted(&s, 0.25);
    let spread = if iqr > 0.0 { sd.min(iqr / 1.34) } else { sd };
    Ok(0.9 * spread * libm::pow(points.len() as f64, -0.2))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Kde {
    /// Fitted points, sorted.
    points: Vec<f64>,
    /// Kernel centres after reflection (equal to `points` on the real line), sorted.
    centres: Vec<f64>,
    bandwidth: f64,
    support: Support,
    log_floor: f64,
    log_norm: f64,
}

impl Kde {
    /// Fits a KDE. Without a bandwidth, Silverman's rule is used.
    pub fn fit(points: &[f64], support: Support, bandwidth: Option<f64>) -> Result<Kde> {
        if points.len() < 2 {
            return Err(Error::DegenerateSample("fewer than two points"));
        }
        let pts = sorted(points);
        if pts.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("points"));
        }
        if pts[0] == pts[pts.len() - 1] {
            return Err(Error::DegenerateSample("all points equal"));
        }
        if support == Support::UnitInterval && (pts[0] < 0.0 || pts[pts.len() - 1] > 1.0) {
            return Err(Error::domain("unit-interval KDE points must lie in [0, 1]"));
        }
        let bandwidth = match bandwidth {
            Some(h) if h > 0.0 && h.is_finite() => h,
            Some(_) => return Err(Error::InvalidParameter("bandwidth")),
            None => silverman_bandwidth(&pts)?,
        };
        let centres = match support {
            Support::RealLine => pts.clone(),
            Support::UnitInterval => {
                let mut c = Vec::with_capacity(3 * pts.len());
                c.extend(pts.iter().map(|p| -p));
                c.extend_from_slice(&pts);
                c.extend(pts.iter().map(|p| 2.0 - p));
                c.sort_by(f64::total_cmp);
                c
            }
        };
        let log_norm = libm::log(pts.len() as f64 * bandwidth) + ln_sqrt_2pi();
        Ok(Kde {
            points: pts,
            centres,
            bandwidth,
            support,
            log_floor: DEFAULT_LOG_FLOOR,
            log_norm,
        })
    }

    pub fn with_log_floor(mut self, log_floor: f64) -> Self {
        self.log_floor = log_floor;
        self
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn support(&self) -> Support {
        self.support
    }

    pub fn log_floor(&self) -> f64 {
        self.log_floor
    }

    /// Unfloored log density; `-inf` where every kernel term underflows or
    /// outside a bounded support.
    pub fn raw_log_density(&self, s: f64) -> f64 {
        if !s.is_finite() {
            return f64::NEG_INFINITY;
        }
        if self.support == Support::UnitInterval && !(0.0..=1.0).contains(&s) {
            return f64::NEG_INFINITY;
        }
        let c = &self.centres;
        let h = self.bandwidth;
        let pos = c.partition_point(|&v| v < s);
        let nearest = match (pos.checked_sub(1), c.get(pos)) {
            (Some(i), Some(&r)) => (s - c[i]).min(r - s),
            (Some(i), None) => s - c[i],
            (None, Some(&r)) => r - s,
            (None, None) => return f64::NEG_INFINITY,
        };
        let z_min = nearest / h;
        let peak = -0.5 * z_min * z_min;
        let reach = libm::sqrt(z_min * z_min + 2.0 * TAIL_CUTOFF) * h;
        let lo = c.partition_point(|&v| v < s - reach);
        let hi = c.partition_point(|&v| v <= s + reach);
        let mut sum = 0.0;
        for &p in &c[lo..hi] {
            let z = (s - p) / h;
            sum += libm::exp(-0.5 * z * z - peak);
        }
        peak + libm::log(sum) - self.log_norm
    }

    /// Log density floored at the configured floor.
    pub fn log_density(&self, s: f64) -> LogValue {
        LogValue(self.raw_log_density(s).max(self.log_floor))
    }

    pub fn log_density_batch(&self, queries: &[f64]) -> Vec<LogValue> {
        queries.iter().map(|&s| self.log_density(s)).collect()
    }

    pub fn density(&self, s: f64) -> f64 {
        libm::exp(self.raw_log_density(s))
    }

    /// Pointwise standard error `sqrt(f(s) R(K) / (n h))`, with the Gaussian
    /// kernel roughness `R(K) = 1 / (2 sqrt(pi))`.
    pub fn standard_error(&self, s: f64) -> f64 {
        let roughness = 0.5 / libm::sqrt(core::f64::consts::PI);
        libm::sqrt(self.density(s) * roughness / (self.len() as f64 * self.bandwidth))
    }

    /// Integration domain used for normalization checks: the data range
    /// widened by five bandwidths, or `[0, 1]`.
    pub fn natural_domain(&self) -> (f64, f64) {
        match self.support {
            Support::UnitInterval => (0.0, 1.0),
            Support::RealLine => (
                self.points[0] - 5.0 * self.bandwidth,
                self.points[self.points.len() - 1] + 5.0 * self.bandwidth,
            ),
        }
    }

    /// Trapezoid integral of the density over `[a, b]` on `n` points.
    pub fn integrate(&self, a: f64, b: f64, n: usize) -> f64 {
        let n = n.max(2);
        let step = (b - a) / (n - 1) as f64;
        let mut acc = 0.0;
        for i in 0..n {
            let w = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
            acc += w * self.density(a + i as f64 * step);
        }
        acc * step
    }
}

/// Free-function form of [`Kde::fit`].
pub fn kde_fit(points: &[f64], support: Support, bandwidth: Option<f64>) -> Result<Kde> {
    Kde::fit(points, support, bandwidth)
}

pub fn kde_logdensity(k: &Kde, s: f64) -> LogValue {
    k.log_density(s)
}

/// `log f_p(s) - log f_d(s)` from two fitted estimates.
pub fn slr_from_kdes(k_p: &Kde, k_d: &Kde, s: f64) -> Result<LogValue> {
    if k_p.support != k_d.support {
        return Err(Error::SupportMismatch);
    }
    Ok(k_p.log_density(s) - k_d.log_density(s))
}
