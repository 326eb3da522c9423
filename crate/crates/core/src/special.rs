//! Log-densities and special functions used by the models and scores.



const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

#[inline]
pub fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

#[inline]
pub fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

/// Digamma function for `x > 0`.
///
/// Shifts the argument up to at least 10 with `psi(x) = psi(x + 1) - 1/x`, then
/// applies the asymptotic expansion in `1/x^2`.
pub fn digamma(mut x: f64) -> f64 {
    if !(x > 0.0) {
        return f64::NAN;
    }
    let mut acc = 0.0;
    while x < 10.0 {
        acc -= 1.0 / x;
        x += 1.0;
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    // Bernoulli-number coefficients B_{2k} / (2k).
    let series = inv2
        * (1.0 / 12.0
            - inv2
                * (1.0 / 120.0
                    - inv2
                        * (1.0 / 252.0
                            - inv2 * (1.0 / 240.0 - inv2 * (1.0 / 132.0 - inv2 * (691.0 / 32760.0))))));
    acc + libm::log(x) - 0.5 * inv - series
}

/// `log N(x; mean, sd^2)`.
#[inline]
pub fn normal_logpdf(x: f64, mean: f64, sd: f64) -> f64 {
    let z = (x - mean) / sd;
    -0.5 * z * z - libm::log(sd) - LN_SQRT_2PI
}

/// Log-density of the central chi-square with `df` degrees of freedom.
pub fn chi2_logpdf(t: f64, df: f64) -> f64 {
    if t < 0.0 {
        return f64::NEG_INFINITY;
    }
    let k = 0.5 * df;
    if t == 0.0 {
        return match k.partial_cmp(&1.0) {
            Some(core::cmp::Ordering::Less) => f64::INFINITY,
            Some(core::cmp::Ordering::Equal) => -core::f64::consts::LN_2,
            _ => f64::NEG_INFINITY,
        };
    }
    (k - 1.0) * libm::log(t) - 0.5 * t - k * core::f64::consts::LN_2 - ln_gamma(k)
}

/// Log-density of `Beta(a, b)` on the open unit interval.
pub fn beta_logpdf(x: f64, a: f64, b: f64) -> f64 {
    if !(x > 0.0 && x < 1.0) {
        return f64::NEG_INFINITY;
    }
    (a - 1.0) * libm::log(x) + (b - 1.0) * libm::log1p(-x) - ln_beta(a, b)
}

/// Standard normal CDF via `erfc`.
#[inline]
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / core::f64::consts::SQRT_2)
}

#[inline]
pub(crate) fn ln_sqrt_2pi() -> f64 {
    LN_SQRT_2PI
}
