//! K-fold cross-validation for tuning parameters.
//!
//! For each fold the estimator is fit on the training rows and scored by
//! the squared unscaled Frobenius distance to the sample covariance of the
//! held-out rows. The selected parameter minimizes the fold-averaged loss;
//! exact ties go to the larger (sparser) parameter.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::SymmetricMatrix;
use crate::regularizers::{
    adaptive_threshold_estimator, banding_estimator, sample_cov, tapering_estimator, threshold_estimator,
    DataMatrix, DiagonalPolicy, EstimatorConfig, ThresholdRule,
};

pub const DEFAULT_FOLDS: usize = 5;
pub const GRID_STEPS: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct CvSpec {
    pub folds: usize,
    pub grid: Vec<f64>,
    pub rng_seed: u64,
}

impl CvSpec {
    pub fn new(grid: Vec<f64>, rng_seed: u64) -> Self {
        Self { folds: DEFAULT_FOLDS, grid, rng_seed }
    }

    fn validate(&self, n: usize) -> Result<()> {
        if self.folds < 2 {
            return Err(Error::Config(format!("need at least 2 folds, got {}", self.folds)));
        }
        if self.grid.is_empty() {
            return Err(Error::Config("parameter grid is empty".into()));
        }
        if n / self.folds < 2 {
            return Err(Error::Config(format!(
                "{} observations in {} folds leaves fewer than 2 test rows per fold",
                n, self.folds
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvResult {
    pub best_param: f64,
    /// Fold-averaged loss, one entry per grid point in grid order.
    pub loss_curve: Vec<f64>,
}

/// `{ (k / 100) * max_{i<j} |s_ij| : k = 0..=100 }`.
pub fn default_lambda_grid(s: &SymmetricMatrix) -> Result<Vec<f64>> {
    let p = s.dim();
    if p < 2 {
        return Err(Error::Dimension("lambda grid needs p >= 2".into()));
    }
    let mut max_off = 0.0_f64;
    for i in 0..p {
        for j in i + 1..p {
            max_off = max_off.max(s.get(i, j).abs());
        }
    }
    Ok((0..=GRID_STEPS).map(|k| k as f64 / GRID_STEPS as f64 * max_off).collect())
}

/// Random partition of `0..n` into `k` folds whose sizes differ by at most one.
pub fn make_folds(n: usize, k: usize, seed: u64) -> Vec<Vec<usize>> {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    (0..k).map(|f| idx[f * n / k..(f + 1) * n / k].to_vec()).collect()
}

/// A parametric estimator that can reuse per-fold work across the grid.
pub trait CvEstimator {
    type Prepared;

    fn prepare(&self, train: &DataMatrix) -> Result<Self::Prepared>;

    fn estimate(&self, prepared: &Self::Prepared, param: f64) -> Result<SymmetricMatrix>;
}

/// Universal thresholding over `lambda`.
#[derive(Debug, Clone, Copy)]
pub struct ThresholdCv {
    pub rule: ThresholdRule,
    pub scad_a: f64,
    pub diagonal_policy: DiagonalPolicy,
}

impl ThresholdCv {
    pub fn soft() -> Self {
        let d = EstimatorConfig::soft(0.0);
        Self { rule: ThresholdRule::Soft, scad_a: d.scad_a, diagonal_policy: d.diagonal_policy }
    }
}

impl CvEstimator for ThresholdCv {
    type Prepared = SymmetricMatrix;

    fn prepare(&self, train: &DataMatrix) -> Result<SymmetricMatrix> {
        sample_cov(train)
    }

    fn estimate(&self, s: &SymmetricMatrix, lambda: f64) -> Result<SymmetricMatrix> {
        let cfg = EstimatorConfig::threshold(self.rule, lambda)
            .with_scad_a(self.scad_a)
            .with_diagonal_policy(self.diagonal_policy);
        threshold_estimator(s, &cfg)
    }
}

/// Adaptive thresholding over `delta`.
#[derive(Debug, Clone, Copy)]
pub struct AdaptiveCv;

impl CvEstimator for AdaptiveCv {
    type Prepared = DataMatrix;

    fn prepare(&self, train: &DataMatrix) -> Result<DataMatrix> {
        Ok(train.clone())
    }

    fn estimate(&self, train: &DataMatrix, delta: f64) -> Result<SymmetricMatrix> {
        adaptive_threshold_estimator(train, delta)
    }
}

/// Banding (or tapering) over the bandwidth; grid values are rounded to integers.
#[derive(Debug, Clone, Copy)]
pub struct BandwidthCv {
    pub tapering: bool,
}

impl CvEstimator for BandwidthCv {
    type Prepared = SymmetricMatrix;

    fn prepare(&self, train: &DataMatrix) -> Result<SymmetricMatrix> {
        sample_cov(train)
    }

    fn estimate(&self, s: &SymmetricMatrix, h: f64) -> Result<SymmetricMatrix> {
        if !(h >= 0.0) {
            return Err(Error::Config(format!("bandwidth must be nonnegative, got {h}")));
        }
        let h = h.round() as usize;
        if self.tapering {
            tapering_estimator(s, h)
        } else {
            banding_estimator(s, h)
        }
    }
}

/// Wraps a plain `(train, param) -> estimate` closure.
pub struct FnEstimator<F>(pub F);

impl<F> CvEstimator for FnEstimator<F>
where
    F: Fn(&DataMatrix, f64) -> Result<SymmetricMatrix>,
{
    type Prepared = DataMatrix;

    fn prepare(&self, train: &DataMatrix) -> Result<DataMatrix> {
        Ok(train.clone())
    }

    fn estimate(&self, train: &DataMatrix, param: f64) -> Result<SymmetricMatrix> {
        (self.0)(train, param)
    }
}

fn squared_frobenius_distance(a: &SymmetricMatrix, b: &SymmetricMatrix) -> f64 {
    a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub fn cross_validate<E: CvEstimator>(data: &DataMatrix, estimator: &E, spec: &CvSpec) -> Result<CvResult> {
    spec.validate(data.n())?;
    let folds = make_folds(data.n(), spec.folds, spec.rng_seed);
    let mut totals = vec![0.0; spec.grid.len()];

    for test_idx in &folds {
        let mut in_test = vec![false; data.n()];
        test_idx.iter().for_each(|&k| in_test[k] = true);
        let train_idx: Vec<usize> = (0..data.n()).filter(|&k| !in_test[k]).collect();
        let train = data.select_rows(&train_idx)?;
        let test_cov = sample_cov(&data.select_rows(test_idx)?)?;
        let prepared = estimator.prepare(&train)?;
        for (total, &param) in totals.iter_mut().zip(&spec.grid) {
            let est = estimator.estimate(&prepared, param)?;
            *total += squared_frobenius_distance(&est, &test_cov);
        }
    }

    let loss_curve: Vec<f64> = totals.iter().map(|t| t / spec.folds as f64).collect();
    if let Some(k) = loss_curve.iter().position(|l| !l.is_finite()) {
        return Err(Error::Config(format!("non-finite CV loss at grid point {}", spec.grid[k])));
    }
    let mut best = 0;
    for k in 1..loss_curve.len() {
        let (l, b) = (loss_curve[k], loss_curve[best]);
        if l < b || (l == b && spec.grid[k] > spec.grid[best]) {
            best = k;
        }
    }
    Ok(CvResult { best_param: spec.grid[best], loss_curve })
}
