//! First-stage regularized covariance estimators: the sample covariance,
//! universal and adaptive thresholding, banding and tapering.
//!
//! Every estimator here is an elementwise operation on the sample
//! covariance, so none of them is guaranteed to be positive definite.

use crate::error::{Error, Result};
use crate::linalg::SymmetricMatrix;

/// `n x p` observations, one row per sample.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    n: usize,
    p: usize,
    values: Vec<f64>,
}

impl DataMatrix {
    pub fn new(n: usize, p: usize, values: Vec<f64>) -> Result<Self> {
        if n < 2 {
            return Err(Error::Dimension(format!("need at least 2 observations, got {n}")));
        }
        if p == 0 {
            return Err(Error::Dimension("need at least one variable".into()));
        }
        if values.len() != n * p {
            return Err(Error::Dimension(format!(
                "expected {n}x{p} = {} values, got {}",
                n * p,
                values.len()
            )));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { row: k / p, col: k % p });
        }
        Ok(Self { n, p, values })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let p = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != p) {
            return Err(Error::Dimension("rows have unequal lengths".into()));
        }
        Self::new(rows.len(), p, rows.iter().flatten().copied().collect())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    #[inline]
    pub fn get(&self, k: usize, j: usize) -> f64 {
        self.values[k * self.p + j]
    }

    pub fn row(&self, k: usize) -> &[f64] {
        &self.values[k * self.p..(k + 1) * self.p]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn column_means(&self) -> Vec<f64> {
        let mut means = vec![0.0; self.p];
        for k in 0..self.n {
            for (m, v) in means.iter_mut().zip(self.row(k)) {
                *m += v;
            }
        }
        means.iter_mut().for_each(|m| *m /= self.n as f64);
        means
    }

    /// Rows `indices` in the given order.
    pub fn select_rows(&self, indices: &[usize]) -> Result<Self> {
        let mut values = Vec::with_capacity(indices.len() * self.p);
        for &k in indices {
            values.extend_from_slice(self.row(k));
        }
        Self::new(indices.len(), self.p, values)
    }

    /// Contiguous rows `start..end`.
    pub fn slice_rows(&self, start: usize, end: usize) -> Result<Self> {
        Self::new(end - start, self.p, self.values[start * self.p..end * self.p].to_vec())
    }

    fn centered(&self) -> Vec<f64> {
        let means = self.column_means();
        let mut c = self.values.clone();
        for k in 0..self.n {
            for j in 0..self.p {
                c[k * self.p + j] -= means[j];
            }
        }
        c
    }
}

/// Sample covariance with the unbiased `1 / (n - 1)` denominator.
pub fn sample_cov(data: &DataMatrix) -> Result<SymmetricMatrix> {
    if data.n < 2 {
        return Err(Error::Dimension(format!("need at least 2 observations, got {}", data.n)));
    }
    let (n, p) = (data.n, data.p);
    let c = data.centered();
    let mut acc = vec![0.0; p * p];
    for k in 0..n {
        let row = &c[k * p..(k + 1) * p];
        for i in 0..p {
            let xi = row[i];
            if xi == 0.0 {
                continue;
            }
            let out = &mut acc[i * p..(i + 1) * p];
            for j in i..p {
                out[j] += xi * row[j];
            }
        }
    }
    let denom = (n - 1) as f64;
    SymmetricMatrix::from_fn(p, |i, j| acc[i * p + j] / denom)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThresholdRule {
    Hard,
    Soft,
    Scad,
}

pub const DEFAULT_SCAD_A: f64 = 3.7;
pub const DEFAULT_ADAPTIVE_DELTA: f64 = 2.0;

/// Elementwise thresholding function `T_lambda(s)`.
///
/// SCAD uses the soft rule on `|s| <= 2 lambda`, the linear interpolation on
/// `2 lambda < |s| <= a lambda`, and the identity beyond.
pub fn apply_threshold_rule(s: f64, lambda: f64, rule: ThresholdRule, scad_a: f64) -> f64 {
    let soft = |s: f64| s.signum() * (s.abs() - lambda).max(0.0);
    match rule {
        ThresholdRule::Hard => {
            if s.abs() >= lambda {
                s
            } else {
                0.0
            }
        }
        ThresholdRule::Soft => {
            if s == 0.0 {
                0.0
            } else {
                soft(s)
            }
        }
        ThresholdRule::Scad => {
            let a = s.abs();
            if s == 0.0 {
                0.0
            } else if a <= 2.0 * lambda {
                soft(s)
            } else if a <= scad_a * lambda {
                ((scad_a - 1.0) * s - s.signum() * scad_a * lambda) / (scad_a - 2.0)
            } else {
                s
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Sample,
    Threshold,
    Banding,
    Tapering,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Lambda {
    Fixed(f64),
    /// Element-adaptive thresholds computed from the data.
    Adaptive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiagonalPolicy {
    ThresholdAll,
    PreserveDiagonal,
}

/// Declarative description of a first-stage estimator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorConfig {
    pub family: Family,
    pub rule: ThresholdRule,
    pub scad_a: f64,
    pub lambda: Lambda,
    pub adaptive_delta: f64,
    pub bandwidth: usize,
    pub diagonal_policy: DiagonalPolicy,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            family: Family::Sample,
            rule: ThresholdRule::Soft,
            scad_a: DEFAULT_SCAD_A,
            lambda: Lambda::Fixed(0.0),
            adaptive_delta: DEFAULT_ADAPTIVE_DELTA,
            bandwidth: 0,
            diagonal_policy: DiagonalPolicy::PreserveDiagonal,
        }
    }
}

impl EstimatorConfig {
    pub fn sample() -> Self {
        Self::default()
    }

    pub fn threshold(rule: ThresholdRule, lambda: f64) -> Self {
        Self { family: Family::Threshold, rule, lambda: Lambda::Fixed(lambda), ..Self::default() }
    }

    pub fn soft(lambda: f64) -> Self {
        Self::threshold(ThresholdRule::Soft, lambda)
    }

    pub fn adaptive(delta: f64) -> Self {
        Self {
            family: Family::Threshold,
            rule: ThresholdRule::Soft,
            lambda: Lambda::Adaptive,
            adaptive_delta: delta,
            ..Self::default()
        }
    }

    pub fn banding(bandwidth: usize) -> Self {
        Self { family: Family::Banding, bandwidth, ..Self::default() }
    }

    pub fn tapering(bandwidth: usize) -> Self {
        Self { family: Family::Tapering, bandwidth, ..Self::default() }
    }

    pub fn with_diagonal_policy(mut self, policy: DiagonalPolicy) -> Self {
        self.diagonal_policy = policy;
        self
    }

    pub fn with_scad_a(mut self, a: f64) -> Self {
        self.scad_a = a;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.family == Family::Threshold {
            if !(self.scad_a > 2.0) {
                return Err(Error::Config(format!("SCAD parameter a must exceed 2, got {}", self.scad_a)));
            }
            match self.lambda {
                Lambda::Fixed(l) if !(l >= 0.0) || !l.is_finite() => {
                    return Err(Error::Config(format!("threshold must be finite and nonnegative, got {l}")));
                }
                Lambda::Adaptive if !(self.adaptive_delta > 0.0) => {
                    return Err(Error::Config(format!(
                        "adaptive delta must be positive, got {}",
                        self.adaptive_delta
                    )));
                }
                _ => {}
            }
        }
        Ok(())
    }
}

/// `[T_lambda(s_ij)]` for a fixed universal threshold.
pub fn threshold_estimator(s: &SymmetricMatrix, config: &EstimatorConfig) -> Result<SymmetricMatrix> {
    config.validate()?;
    let lambda = match config.lambda {
        Lambda::Fixed(l) => l,
        Lambda::Adaptive => {
            return Err(Error::Config(
                "adaptive thresholds need the data matrix; use adaptive_threshold_estimator".into(),
            ))
        }
    };
    let preserve = config.diagonal_policy == DiagonalPolicy::PreserveDiagonal;
    s.map_entries(|i, j, v| {
        if i == j && preserve {
            v
        } else {
            apply_threshold_rule(v, lambda, config.rule, config.scad_a)
        }
    })
}

/// Element-adaptive soft thresholding with
/// `lambda_ij = delta * sqrt(theta_ij * ln(p) / n)` and
/// `theta_ij = mean_k [(x_ki - xbar_i)(x_kj - xbar_j) - s_ij]^2`.
/// The diagonal is kept.
pub fn adaptive_threshold_estimator(data: &DataMatrix, delta: f64) -> Result<SymmetricMatrix> {
    if !(delta > 0.0) {
        return Err(Error::Config(format!("adaptive delta must be positive, got {delta}")));
    }
    let s = sample_cov(data)?;
    let lambdas = adaptive_thresholds(data, &s, delta);
    let p = data.p;
    s.map_entries(|i, j, v| {
        if i == j {
            v
        } else {
            apply_threshold_rule(v, lambdas[i * p + j], ThresholdRule::Soft, DEFAULT_SCAD_A)
        }
    })
}

fn adaptive_thresholds(data: &DataMatrix, s: &SymmetricMatrix, delta: f64) -> Vec<f64> {
    let (n, p) = (data.n, data.p);
    let c = data.centered();
    let mut theta = vec![0.0; p * p];
    for k in 0..n {
        let row = &c[k * p..(k + 1) * p];
        for i in 0..p {
            for j in i + 1..p {
                let d = row[i] * row[j] - s.get(i, j);
                theta[i * p + j] += d * d;
            }
        }
    }
    let log_p = (p as f64).ln();
    let mut lambdas = vec![0.0; p * p];
    for i in 0..p {
        for j in i + 1..p {
            let l = delta * (theta[i * p + j] / n as f64 * log_p / n as f64).sqrt();
            lambdas[i * p + j] = l;
            lambdas[j * p + i] = l;
        }
    }
    lambdas
}

/// `w_m = 1{m <= h}`.
pub fn banding_weight(m: usize, h: usize) -> f64 {
    if m <= h {
        1.0
    } else {
        0.0
    }
}

/// `1` for `m <= h/2`, `2 - 2m/h` for `h/2 < m <= h`, `0` beyond.
pub fn tapering_weight(m: usize, h: usize) -> f64 {
    let (m, h) = (m as f64, h as f64);
    if m <= h / 2.0 {
        1.0
    } else if m <= h {
        2.0 - 2.0 * m / h
    } else {
        0.0
    }
}

pub fn banding_estimator(s: &SymmetricMatrix, h: usize) -> Result<SymmetricMatrix> {
    let p = s.dim();
    if h > p - 1 {
        return Err(Error::Config(format!("bandwidth {h} exceeds p - 1 = {}", p - 1)));
    }
    s.map_entries(|i, j, v| v * banding_weight(j - i, h))
}

pub fn tapering_estimator(s: &SymmetricMatrix, h: usize) -> Result<SymmetricMatrix> {
    let p = s.dim();
    if h == 0 || h > p - 1 {
        return Err(Error::Config(format!("tapering bandwidth must lie in 1..={}, got {h}", p - 1)));
    }
    s.map_entries(|i, j, v| v * tapering_weight(j - i, h))
}

/// Fits `config` on raw data.
pub fn fit(data: &DataMatrix, config: &EstimatorConfig) -> Result<SymmetricMatrix> {
    config.validate()?;
    match config.family {
        Family::Sample => sample_cov(data),
        Family::Threshold => match config.lambda {
            Lambda::Adaptive => adaptive_threshold_estimator(data, config.adaptive_delta),
            Lambda::Fixed(_) => threshold_estimator(&sample_cov(data)?, config),
        },
        Family::Banding => banding_estimator(&sample_cov(data)?, config.bandwidth),
        Family::Tapering => tapering_estimator(&sample_cov(data)?, config.bandwidth),
    }
}

/// Applies `config` to an already computed sample covariance. Adaptive
/// thresholding is rejected because it needs the raw data.
pub fn apply_to_covariance(s: &SymmetricMatrix, config: &EstimatorConfig) -> Result<SymmetricMatrix> {
    config.validate()?;
    match config.family {
        Family::Sample => Ok(s.clone()),
        Family::Threshold => threshold_estimator(s, config),
        Family::Banding => banding_estimator(s, config.bandwidth),
        Family::Tapering => tapering_estimator(s, config.bandwidth),
    }
}
