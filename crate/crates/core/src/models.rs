//! Specific-source generative models.
//!
//! Every family shares one structure. The known-source evidence `X` has the
//! same distribution under both hypotheses. The unknown-source evidence `Y`
//! is drawn independently of `X`: from the known source under `Hp`, and from
//! the alternative population under `Hd`. The likelihood ratio of the pair
//! therefore reduces to `p(y | Hp) / p(y | Hd)`.

use alloc::vec::Vec;
use core::fmt;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::logspace::LogValue;
use crate::special::{beta_logpdf, ln_sqrt_2pi, normal_logpdf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Hypothesis {
    Hp,
    Hd,
}

impl Hypothesis {
    pub const BOTH: [Hypothesis; 2] = [Hypothesis::Hp, Hypothesis::Hd];

    pub fn as_str(self) -> &'static str {
        match self {
            Hypothesis::Hp => "Hp",
            Hypothesis::Hd => "Hd",
        }
    }
}

impl fmt::Display for Hypothesis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// How `Y` is drawn under `Hd` for the Gaussian families.
///
/// `Marginal` draws from `N(mu_b, Sigma_w + Sigma_b)` directly. `Hierarchical`
/// first draws a source mean from `N(mu_b, Sigma_b)` and then `Y` around it
/// with `Sigma_w`. Both give the same distribution; the marginal route uses
/// half the normal variates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplingMode {
    #[default]
    Marginal,
    Hierarchical,
}

/// One realization of known-source (`x`) and unknown-source (`y`) evidence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvidencePair {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl EvidencePair {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Self {
        EvidencePair { x, y }
    }

    pub fn scalar(x: f64, y: f64) -> Self {
        EvidencePair {
            x: alloc::vec![x],
            y: alloc::vec![y],
        }
    }

    /// Classifier features: `x` followed by `y`.
    pub fn features(&self) -> Vec<f64> {
        let mut f = Vec::with_capacity(self.x.len() + self.y.len());
        f.extend_from_slice(&self.x);
        f.extend_from_slice(&self.y);
        f
    }

    pub fn write_features(&self, out: &mut Vec<f64>) {
        out.extend_from_slice(&self.x);
        out.extend_from_slice(&self.y);
    }
}

fn check_finite(v: f64, field: &'static str) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFinite(field))
    }
}

#[inline]
fn std_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

// ---------------------------------------------------------------------------
// Univariate Gaussian
// ---------------------------------------------------------------------------

/// `Hp: X, Y ~ N(mu_x, sigma_w^2)`; `Hd: X ~ N(mu_x, sigma_w^2), Y ~ N(mu_b, sigma_w^2 + sigma_b^2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnivariateGaussianPairModel {
    pub mu_x: f64,
    pub mu_b: f64,
    pub sigma_w: f64,
    pub sigma_b: f64,
}

impl UnivariateGaussianPairModel {
    pub fn new(mu_x: f64, mu_b: f64, sigma_w: f64, sigma_b: f64) -> Result<Self> {
        let m = UnivariateGaussianPairModel {
            mu_x,
            mu_b,
            sigma_w,
            sigma_b,
        };
        m.validate()?;
        Ok(m)
    }

    /// `sigma_b = 0` is accepted: `Hd` then differs from `Hp` only through
    /// the mean.
    pub fn validate(&self) -> Result<()> {
        check_finite(self.mu_x, "mu_x")?;
        check_finite(self.mu_b, "mu_b")?;
        check_finite(self.sigma_w, "sigma_w")?;
        check_finite(self.sigma_b, "sigma_b")?;
        if !(self.sigma_w > 0.0) {
            return Err(Error::NonPositiveVariance("sigma_w"));
        }
        if self.sigma_b < 0.0 {
            return Err(Error::NonPositiveVariance("sigma_b"));
        }
        Ok(())
    }

    /// Standard deviation of `Y` under `Hd`.
    pub fn sd_d(&self) -> f64 {
        libm::sqrt(self.sigma_w * self.sigma_w + self.sigma_b * self.sigma_b)
    }

    pub fn log_density_y(&self, h: Hypothesis, y: f64) -> f64 {
        match h {
            Hypothesis::Hp => normal_logpdf(y, self.mu_x, self.sigma_w),
            Hypothesis::Hd => normal_logpdf(y, self.mu_b, self.sd_d()),
        }
    }

    pub fn log_lr(&self, y: f64) -> LogValue {
        LogValue(self.log_density_y(Hypothesis::Hp, y) - self.log_density_y(Hypothesis::Hd, y))
    }

    /// Supremum over `y` of the likelihood ratio,
    /// `M = (sd_d / sigma_w) * exp((mu_x - mu_b)^2 / (2 sigma_b^2))`.
    ///
    /// With `mu_x = mu_b` this is `sqrt((sigma_w^2 + sigma_b^2) / sigma_w^2)`,
    /// attained at `y = mu_x`; otherwise the peak lies past `mu_x`, away from
    /// `mu_b`. `None` when the ratio is unbounded
    /// (`sigma_b = 0` with distinct means).
    pub fn lr_upper_bound(&self) -> Option<LogValue> {
        let base = libm::log(self.sd_d() / self.sigma_w);
        let delta = self.mu_x - self.mu_b;
        if delta == 0.0 {
            return Some(LogValue(base));
        }
        if self.sigma_b == 0.0 {
            return None;
        }
        Some(LogValue(base + delta * delta / (2.0 * self.sigma_b * self.sigma_b)))
    }

    pub fn sample_pair<R: Rng + ?Sized>(
        &self,
        h: Hypothesis,
        mode: SamplingMode,
        rng: &mut R,
    ) -> EvidencePair {
        let x = self.mu_x + self.sigma_w * std_normal(rng);
        let y = match (h, mode) {
            (Hypothesis::Hp, _) => self.mu_x + self.sigma_w * std_normal(rng),
            (Hypothesis::Hd, SamplingMode::Marginal) => self.mu_b + self.sd_d() * std_normal(rng),
            (Hypothesis::Hd, SamplingMode::Hierarchical) => {
                let source = self.mu_b + self.sigma_b * std_normal(rng);
                source + self.sigma_w * std_normal(rng)
            }
        };
        EvidencePair::scalar(x, y)
    }
}

// ---------------------------------------------------------------------------
// Multivariate Gaussian
// ---------------------------------------------------------------------------

/// Cholesky-factored Gaussian with cached log-determinant.
#[derive(Debug, Clone, PartialEq)]
struct GaussianFactor {
    mean: DVector<f64>,
    lower: DMatrix<f64>,
    log_det: f64,
}

impl GaussianFactor {
    fn new(mean: DVector<f64>, cov: DMatrix<f64>, name: &'static str) -> Result<Self> {
        let chol = nalgebra::Cholesky::new(cov).ok_or(Error::NotPositiveDefinite(name))?;
        let lower = chol.l();
        let log_det = 2.0 * lower.diagonal().iter().map(|&v| libm::log(v)).sum::<f64>();
        if !log_det.is_finite() {
            return Err(Error::NotPositiveDefinite(name));
        }
        Ok(GaussianFactor {
            mean,
            lower,
            log_det,
        })
    }

    fn log_pdf(&self, y: &[f64]) -> f64 {
        let d = self.mean.len();
        // forward substitution L v = y - mean
        let mut v = [0.0f64; 16];
        let mut heap;
        let v: &mut [f64] = if d <= 16 {
            &mut v[..d]
        } else {
            heap = alloc::vec![0.0; d];
            &mut heap[..]
        };
        let mut quad = 0.0;
        #[allow(clippy::needless_range_loop)]
        for i in 0..d {
            let mut acc = y[i] - self.mean[i];
            for j in 0..i {
                acc -= self.lower[(i, j)] * v[j];
            }
            v[i] = acc / self.lower[(i, i)];
            quad += v[i] * v[i];
        }
        -0.5 * quad - 0.5 * self.log_det - d as f64 * ln_sqrt_2pi()
    }

    fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut Vec<f64>) {
        sample_with_factor(&self.mean, &self.lower, rng, out);
    }
}

fn sample_with_factor<R: Rng + ?Sized>(
    mean: &DVector<f64>,
    factor: &DMatrix<f64>,
    rng: &mut R,
    out: &mut Vec<f64>,
) {
    let d = mean.len();
    let k = factor.ncols();
    let z: Vec<f64> = (0..k).map(|_| std_normal(rng)).collect();
    out.clear();
    for i in 0..d {
        let mut acc = mean[i];
        for (j, zj) in z.iter().enumerate() {
            acc += factor[(i, j)] * zj;
        }
        out.push(acc);
    }
}

/// `Hp: X, Y ~ N_d(mu_x, Sigma_w)`; `Hd: X ~ N_d(mu_x, Sigma_w), Y ~ N_d(mu_b, Sigma_w + Sigma_b)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MvnPairModel {
    mu_x: Vec<f64>,
    mu_b: Vec<f64>,
    sigma_w: DMatrix<f64>,
    sigma_b: DMatrix<f64>,
    known: GaussianFactor,
    alternative: GaussianFactor,
    /// Square root of `Sigma_b` (which may be singular) for hierarchical draws.
    between_root: DMatrix<f64>,
}

fn matrix_from_rows(rows: &[Vec<f64>], d: usize, field: &'static str) -> Result<DMatrix<f64>> {
    if rows.len() != d {
        return Err(Error::DimensionMismatch {
            field,
            expected: d,
            found: rows.len(),
        });
    }
    for r in rows {
        if r.len() != d {
            return Err(Error::DimensionMismatch {
                field,
                expected: d,
                found: r.len(),
            });
        }
        for &v in r {
            check_finite(v, field)?;
        }
    }
    let m = DMatrix::from_fn(d, d, |i, j| rows[i][j]);
    for i in 0..d {
        for j in 0..i {
            let (a, b) = (m[(i, j)], m[(j, i)]);
            if (a - b).abs() > 1e-12 * a.abs().max(b.abs()).max(1.0) {
                return Err(Error::NotPositiveDefinite(field));
            }
        }
    }
    Ok(m)
}

impl MvnPairModel {
    /// Covariances are given as row lists. `Sigma_w` must be positive definite,
    /// `Sigma_b` positive semidefinite.
    pub fn new(
        mu_x: Vec<f64>,
        mu_b: Vec<f64>,
        sigma_w: &[Vec<f64>],
        sigma_b: &[Vec<f64>],
    ) -> Result<Self> {
        let d = mu_x.len();
        if d == 0 {
            return Err(Error::DimensionMismatch {
                field: "mu_x",
                expected: 1,
                found: 0,
            });
        }
        if mu_b.len() != d {
            return Err(Error::DimensionMismatch {
                field: "mu_b",
                expected: d,
                found: mu_b.len(),
            });
        }
        for &v in &mu_x {
            check_finite(v, "mu_x")?;
        }
        for &v in &mu_b {
            check_finite(v, "mu_b")?;
        }
        let sw = matrix_from_rows(sigma_w, d, "Sigma_w")?;
        let sb = matrix_from_rows(sigma_b, d, "Sigma_b")?;
        let known = GaussianFactor::new(DVector::from_vec(mu_x.clone()), sw.clone(), "Sigma_w")?;
        let alternative = GaussianFactor::new(
            DVector::from_vec(mu_b.clone()),
            &sw + &sb,
            "Sigma_w + Sigma_b",
        )?;
        let eig = nalgebra::SymmetricEigen::new(sb.clone());
        let scale = eig.eigenvalues.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        if eig.eigenvalues.iter().any(|&v| v < -1e-10 * scale) {
            return Err(Error::NotPositiveDefinite("Sigma_b"));
        }
        let mut between_root = eig.eigenvectors.clone();
        for (j, &lambda) in eig.eigenvalues.iter().enumerate() {
            let s = libm::sqrt(lambda.max(0.0));
            for i in 0..d {
                between_root[(i, j)] *= s;
            }
        }
        Ok(MvnPairModel {
            mu_x,
            mu_b,
            sigma_w: sw,
            sigma_b: sb,
            known,
            alternative,
            between_root,
        })
    }

    /// `mu_x = mx * 1`, `mu_b = mb * 1`, `Sigma_w = var_w * I`, `Sigma_b = var_b * I`.
    pub fn isotropic(d: usize, mx: f64, mb: f64, var_w: f64, var_b: f64) -> Result<Self> {
        let eye = |s: f64| -> Vec<Vec<f64>> {
            (0..d)
                .map(|i| (0..d).map(|j| if i == j { s } else { 0.0 }).collect())
                .collect()
        };
        Self::new(alloc::vec![mx; d], alloc::vec![mb; d], &eye(var_w), &eye(var_b))
    }

    pub fn dim(&self) -> usize {
        self.mu_x.len()
    }

    pub fn mu_x(&self) -> &[f64] {
        &self.mu_x
    }

    pub fn mu_b(&self) -> &[f64] {
        &self.mu_b
    }

    pub fn sigma_w(&self) -> &DMatrix<f64> {
        &self.sigma_w
    }

    pub fn sigma_b(&self) -> &DMatrix<f64> {
        &self.sigma_b
    }

    /// Covariance of `Y` under the given hypothesis.
    pub fn cov_y(&self, h: Hypothesis) -> DMatrix<f64> {
        match h {
            Hypothesis::Hp => self.sigma_w.clone(),
            Hypothesis::Hd => &self.sigma_w + &self.sigma_b,
        }
    }

    pub fn mean_y(&self, h: Hypothesis) -> &[f64] {
        match h {
            Hypothesis::Hp => &self.mu_x,
            Hypothesis::Hd => &self.mu_b,
        }
    }

    pub fn log_det_y(&self, h: Hypothesis) -> f64 {
        match h {
            Hypothesis::Hp => self.known.log_det,
            Hypothesis::Hd => self.alternative.log_det,
        }
    }

    pub fn log_density_y(&self, h: Hypothesis, y: &[f64]) -> f64 {
        match h {
            Hypothesis::Hp => self.known.log_pdf(y),
            Hypothesis::Hd => self.alternative.log_pdf(y),
        }
    }

    pub fn sample_pair<R: Rng + ?Sized>(
        &self,
        h: Hypothesis,
        mode: SamplingMode,
        rng: &mut R,
    ) -> EvidencePair {
        let d = self.dim();
        let mut x = Vec::with_capacity(d);
        self.known.sample_into(rng, &mut x);
        let mut y = Vec::with_capacity(d);
        match (h, mode) {
            (Hypothesis::Hp, _) => self.known.sample_into(rng, &mut y),
            (Hypothesis::Hd, SamplingMode::Marginal) => self.alternative.sample_into(rng, &mut y),
            (Hypothesis::Hd, SamplingMode::Hierarchical) => {
                let mut source = Vec::with_capacity(d);
                sample_with_factor(&self.alternative.mean, &self.between_root, rng, &mut source);
                sample_with_factor(&DVector::from_vec(source), &self.known.lower, rng, &mut y);
            }
        }
        EvidencePair { x, y }
    }
}

// ---------------------------------------------------------------------------
// Beta vectors
// ---------------------------------------------------------------------------

/// `Hp: X_i, Y_i ~ Beta(alpha_x, beta_x)`; `Hd: X_i ~ Beta(alpha_x, beta_x), Y_i ~ Beta(alpha_y, beta_y)`,
/// all coordinates iid, `i = 1..d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BetaVectorPairModel {
    pub alpha_x: f64,
    pub beta_x: f64,
    pub alpha_y: f64,
    pub beta_y: f64,
    pub d: usize,
}

impl BetaVectorPairModel {
    pub fn new(alpha_x: f64, beta_x: f64, alpha_y: f64, beta_y: f64, d: usize) -> Result<Self> {
        let m = BetaVectorPairModel {
            alpha_x,
            beta_x,
            alpha_y,
            beta_y,
            d,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        for (v, name) in [
            (self.alpha_x, "alpha_x"),
            (self.beta_x, "beta_x"),
            (self.alpha_y, "alpha_y"),
            (self.beta_y, "beta_y"),
        ] {
            check_finite(v, name)?;
            if !(v > 0.0) {
                return Err(Error::NonPositiveShape(name));
            }
        }
        if self.d == 0 {
            return Err(Error::DimensionMismatch {
                field: "d",
                expected: 1,
                found: 0,
            });
        }
        Ok(())
    }

    /// Shape parameters of `Y` under the given hypothesis.
    pub fn shapes(&self, h: Hypothesis) -> (f64, f64) {
        match h {
            Hypothesis::Hp => (self.alpha_x, self.beta_x),
            Hypothesis::Hd => (self.alpha_y, self.beta_y),
        }
    }

    pub fn log_density_y(&self, h: Hypothesis, y: &[f64]) -> f64 {
        let (a, b) = self.shapes(h);
        y.iter().map(|&v| beta_logpdf(v, a, b)).sum()
    }

    pub fn sample_pair<R: Rng + ?Sized>(&self, h: Hypothesis, rng: &mut R) -> EvidencePair {
        let (ay, by) = self.shapes(h);
        let x = sample_beta_vec(self.alpha_x, self.beta_x, self.d, rng);
        let y = sample_beta_vec(ay, by, self.d, rng);
        EvidencePair { x, y }
    }
}

/// Ratio-of-gammas Beta draws, redrawn until strictly inside `(0, 1)`.
fn sample_beta_vec<R: Rng + ?Sized>(a: f64, b: f64, d: usize, rng: &mut R) -> Vec<f64> {
    // shapes are validated positive, so construction cannot fail
    let ga = Gamma::new(a, 1.0).expect("validated shape");
    let gb = Gamma::new(b, 1.0).expect("validated shape");
    (0..d)
        .map(|_| loop {
            let u: f64 = ga.sample(rng);
            let v: f64 = gb.sample(rng);
            let s = u + v;
            if s > 0.0 {
                let z = u / s;
                if z > 0.0 && z < 1.0 {
                    break z;
                }
            }
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Family dispatch
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub enum PairModel {
    Univariate(UnivariateGaussianPairModel),
    Mvn(MvnPairModel),
    Beta(BetaVectorPairModel),
}

impl From<UnivariateGaussianPairModel> for PairModel {
    fn from(m: UnivariateGaussianPairModel) -> Self {
        PairModel::Univariate(m)
    }
}

impl From<MvnPairModel> for PairModel {
    fn from(m: MvnPairModel) -> Self {
        PairModel::Mvn(m)
    }
}

impl From<BetaVectorPairModel> for PairModel {
    fn from(m: BetaVectorPairModel) -> Self {
        PairModel::Beta(m)
    }
}

impl PairModel {
    /// Configuration name of the family.
    pub fn family(&self) -> &'static str {
        match self {
            PairModel::Univariate(_) => "univariate_gaussian",
            PairModel::Mvn(_) => "mvn",
            PairModel::Beta(_) => "beta",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            PairModel::Univariate(m) => m.validate(),
            // factorizations succeeded at construction
            PairModel::Mvn(_) => Ok(()),
            PairModel::Beta(m) => m.validate(),
        }
    }

    /// Length of each of `x` and `y`.
    pub fn dim(&self) -> usize {
        match self {
            PairModel::Univariate(_) => 1,
            PairModel::Mvn(m) => m.dim(),
            PairModel::Beta(m) => m.d,
        }
    }

    pub fn sample_pair<R: Rng + ?Sized>(&self, h: Hypothesis, rng: &mut R) -> EvidencePair {
        self.sample_pair_with(h, SamplingMode::Marginal, rng)
    }

    /// `mode` only affects the Gaussian families under `Hd`.
    pub fn sample_pair_with<R: Rng + ?Sized>(
        &self,
        h: Hypothesis,
        mode: SamplingMode,
        rng: &mut R,
    ) -> EvidencePair {
        match self {
            PairModel::Univariate(m) => m.sample_pair(h, mode, rng),
            PairModel::Mvn(m) => m.sample_pair(h, mode, rng),
            PairModel::Beta(m) => m.sample_pair(h, rng),
        }
    }

    pub fn check_pair(&self, pair: &EvidencePair) -> Result<()> {
        let d = self.dim();
        if pair.x.len() != d {
            return Err(Error::DimensionMismatch {
                field: "x",
                expected: d,
                found: pair.x.len(),
            });
        }
        if pair.y.len() != d {
            return Err(Error::DimensionMismatch {
                field: "y",
                expected: d,
                found: pair.y.len(),
            });
        }
        Ok(())
    }

    /// `log p(y | h)`.
    pub fn log_density_y(&self, h: Hypothesis, y: &[f64]) -> Result<LogValue> {
        let d = self.dim();
        if y.len() != d {
            return Err(Error::DimensionMismatch {
                field: "y",
                expected: d,
                found: y.len(),
            });
        }
        let v = match self {
            PairModel::Univariate(m) => m.log_density_y(h, y[0]),
            PairModel::Mvn(m) => m.log_density_y(h, y),
            PairModel::Beta(m) => {
                if let Some(bad) = y.iter().find(|v| !(**v > 0.0 && **v < 1.0)) {
                    return Err(Error::domain(alloc::format!(
                        "Beta coordinate {bad} outside (0, 1)"
                    )));
                }
                m.log_density_y(h, y)
            }
        };
        Ok(LogValue(v))
    }

    /// Exact `log p(y | Hp) - log p(y | Hd)`. Depends on `y` only; `x` is
    /// checked for length and otherwise ignored.
    pub fn log_lr(&self, pair: &EvidencePair) -> Result<LogValue> {
        self.check_pair(pair)?;
        Ok(self.log_density_y(Hypothesis::Hp, &pair.y)?
            - self.log_density_y(Hypothesis::Hd, &pair.y)?)
    }
}
