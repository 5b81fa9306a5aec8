//! Minimum-variance portfolios and a rolling-window backtest.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::baselines::{eig_constraint_estimator, AdmmConfig};
use crate::error::{Error, Result};
use crate::fspd::{fspd_apply, MuChoice, DEFAULT_EPSILON};
use crate::linalg::{extreme_eigen, min_eigenvalue, Cholesky, SymmetricMatrix, Which};
use crate::regularizers::{sample_cov, DataMatrix};
use crate::selection::{cross_validate, default_lambda_grid, AdaptiveCv, CvEstimator, CvSpec, ThresholdCv};

pub const TRADING_DAYS: f64 = 252.0;
pub const DEFAULT_RISK_FREE: f64 = 0.05;
pub const DEFAULT_HOLD: usize = 60;
pub const DEFAULT_NO_SHORT_TOL: f64 = 1e-10;
/// Natural-residual level at which a no-short solve counts as converged.
pub const KKT_TOL: f64 = 1e-8;
const MAX_PG_ITER: usize = 200_000;
const POLISH_EVERY: usize = 25;

#[derive(Debug, Clone, PartialEq)]
pub struct PortfolioWeights {
    pub weights: Vec<f64>,
    /// `w' Sigma w`.
    pub objective: f64,
    /// Indices held at exactly zero by the no-short constraint.
    pub active_constraints: Vec<usize>,
    pub iterations: usize,
    pub converged: bool,
    pub kkt_residual: f64,
}

fn factor_pd(sigma: &SymmetricMatrix) -> Result<Cholesky> {
    Cholesky::factor(sigma).map_err(|_| {
        let min_eigenvalue = min_eigenvalue(sigma).unwrap_or(f64::NAN);
        Error::NotPositiveDefinite { min_eigenvalue }
    })
}

/// `w = Sigma^{-1} 1 / (1' Sigma^{-1} 1)`. Refuses input that is not PD;
/// repair it with [`fspd_apply`] first.
pub fn mvp_simple(sigma: &SymmetricMatrix) -> Result<PortfolioWeights> {
    let p = sigma.dim();
    let chol = factor_pd(sigma)?;
    let x = chol.solve(&vec![1.0; p]);
    let total: f64 = x.iter().sum();
    let weights: Vec<f64> = x.iter().map(|v| v / total).collect();
    Ok(PortfolioWeights {
        objective: sigma.quadratic_form(&weights),
        weights,
        active_constraints: Vec::new(),
        iterations: 0,
        converged: true,
        kkt_residual: 0.0,
    })
}

/// Euclidean projection onto `{w : w >= 0, sum w = 1}`.
pub fn project_simplex(v: &[f64]) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_unstable_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (j, &uj) in u.iter().enumerate() {
        cum += uj;
        let t = (cum - 1.0) / (j + 1) as f64;
        if uj - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|&x| (x - theta).max(0.0)).collect()
}

fn gradient(sigma: &SymmetricMatrix, w: &[f64]) -> Vec<f64> {
    let mut g = vec![0.0; w.len()];
    sigma.mul_vec(w, &mut g);
    g.iter_mut().for_each(|v| *v *= 2.0);
    g
}

/// `max |w - P(w - grad f(w))|`, zero exactly at a KKT point.
fn natural_residual(sigma: &SymmetricMatrix, w: &[f64]) -> f64 {
    let g = gradient(sigma, w);
    let step: Vec<f64> = w.iter().zip(&g).map(|(a, b)| a - b).collect();
    project_simplex(&step).iter().zip(w).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
}

/// Minimum-variance weights restricted to `support` (equality constraint only).
fn support_solution(sigma: &SymmetricMatrix, support: &[usize]) -> Option<Vec<f64>> {
    let sub = SymmetricMatrix::from_fn(support.len(), |a, b| sigma.get(support[a], support[b])).ok()?;
    let chol = Cholesky::factor(&sub).ok()?;
    let x = chol.solve(&vec![1.0; support.len()]);
    let total: f64 = x.iter().sum();
    if !(total > 0.0) {
        return None;
    }
    let mut w = vec![0.0; sigma.dim()];
    for (k, &i) in support.iter().enumerate() {
        w[i] = x[k] / total;
    }
    Some(w)
}

/// Minimum-variance weights with `w >= 0` by projected gradient (step
/// `1 / L`, `L = 2 lambda_max`, backtracking). Every few iterations the
/// current support is solved exactly and accepted if it is feasible and
/// no worse.
pub fn mvp_no_short(sigma: &SymmetricMatrix, tol: f64) -> Result<PortfolioWeights> {
    let p = sigma.dim();
    factor_pd(sigma)?;
    let lmax = extreme_eigen(sigma, Which::Largest)?.largest.expect("requested");
    let mut step = 1.0 / (2.0 * lmax);
    let mut w = vec![1.0 / p as f64; p];
    let mut f = sigma.quadratic_form(&w);
    let mut iterations = 0;
    let mut residual = natural_residual(sigma, &w);

    while iterations < MAX_PG_ITER && residual > tol {
        iterations += 1;
        let g = gradient(sigma, &w);
        loop {
            let trial: Vec<f64> = w.iter().zip(&g).map(|(a, b)| a - step * b).collect();
            let next = project_simplex(&trial);
            let d: Vec<f64> = next.iter().zip(&w).map(|(a, b)| a - b).collect();
            let f_next = sigma.quadratic_form(&next);
            let model = f + g.iter().zip(&d).map(|(a, b)| a * b).sum::<f64>()
                + d.iter().map(|v| v * v).sum::<f64>() / (2.0 * step);
            if f_next <= model + 1e-15 * f.abs() || step < 1e-30 {
                w = next;
                f = f_next;
                break;
            }
            step *= 0.5;
        }
        if iterations % POLISH_EVERY == 0 {
            let support: Vec<usize> = (0..p).filter(|&i| w[i] > 0.0).collect();
            if let Some(cand) = support_solution(sigma, &support) {
                if cand.iter().all(|&v| v >= 0.0) {
                    let fc = sigma.quadratic_form(&cand);
                    if fc <= f {
                        w = cand;
                        f = fc;
                    }
                }
            }
        }
        residual = natural_residual(sigma, &w);
    }

    let active_constraints = (0..p).filter(|&i| w[i] == 0.0).collect();
    Ok(PortfolioWeights {
        objective: f,
        weights: w,
        active_constraints,
        iterations,
        converged: residual <= KKT_TOL.max(tol),
        kkt_residual: residual,
    })
}

/// Annualized summary of a daily return series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Performance {
    pub annual_return: f64,
    pub annual_risk: f64,
    /// `None` when the realized risk is zero.
    pub sharpe: Option<f64>,
    pub days: usize,
}

impl Performance {
    pub fn from_daily_moments(mean: f64, sd: f64, days: usize, risk_free: f64) -> Self {
        let annual_return = mean * TRADING_DAYS;
        let annual_risk = sd * TRADING_DAYS.sqrt();
        let sharpe = (annual_risk > 0.0).then(|| (annual_return - risk_free) / annual_risk);
        Self { annual_return, annual_risk, sharpe, days }
    }

    /// Mean and sample standard deviation of `daily`, annualized.
    pub fn from_daily(daily: &[f64], risk_free: f64) -> Result<Self> {
        let n = daily.len();
        if n < 2 {
            return Err(Error::Config(format!("need at least 2 daily returns, got {n}")));
        }
        // shifted by the first value so a constant series has exactly zero spread
        let r0 = daily[0];
        let shift = daily.iter().map(|r| r - r0).sum::<f64>() / n as f64;
        let var = daily.iter().map(|r| (r - r0 - shift).powi(2)).sum::<f64>() / (n - 1) as f64;
        Ok(Self::from_daily_moments(r0 + shift, var.sqrt(), n, risk_free))
    }
}

/// Covariance pipeline fitted on each training window.
///
/// `epsilon` is relative: the cut-point applied is `epsilon * tr(S) / p`
/// for the window's sample covariance `S`, so the pipelines behave the same
/// whether returns are fractions or percentages.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Method {
    Sample,
    /// Adaptive thresholding with CV-selected delta, then FSPD.
    AdaptiveFspd { epsilon: f64, mu: MuChoice },
    /// Soft thresholding with CV-selected lambda, then FSPD.
    SoftFspd { epsilon: f64, mu: MuChoice },
    /// Eigenvalue-constrained ADMM at the soft-threshold CV lambda.
    SoftEigCon { epsilon: f64 },
}

impl Method {
    pub const ALL: [Method; 4] = [
        Method::Sample,
        Method::AdaptiveFspd { epsilon: DEFAULT_EPSILON, mu: MuChoice::SpectralFrobenius },
        Method::SoftFspd { epsilon: DEFAULT_EPSILON, mu: MuChoice::SpectralFrobenius },
        Method::SoftEigCon { epsilon: DEFAULT_EPSILON },
    ];

    pub fn label(&self) -> &'static str {
        match self {
            Method::Sample => "Sample",
            Method::AdaptiveFspd { .. } => "Adap.+FSPD",
            Method::SoftFspd { .. } => "Soft+FSPD",
            Method::SoftEigCon { .. } => "Soft+EigCon",
        }
    }
}

/// Values of the adaptive-threshold multiplier searched by CV.
pub fn adaptive_delta_grid() -> Vec<f64> {
    (1..=40).map(|k| k as f64 / 10.0).collect()
}

/// Fit the method's covariance estimate to `train`.
pub fn estimate_covariance(train: &DataMatrix, method: Method, folds: usize, seed: u64) -> Result<SymmetricMatrix> {
    let soft_cv = |train: &DataMatrix| -> Result<(SymmetricMatrix, f64)> {
        let s = sample_cov(train)?;
        let spec = CvSpec { folds, ..CvSpec::new(default_lambda_grid(&s)?, seed) };
        let lambda = cross_validate(train, &ThresholdCv::soft(), &spec)?.best_param;
        Ok((s, lambda))
    };
    let scale = |epsilon: f64| -> Result<f64> {
        let s = sample_cov(train)?;
        Ok(epsilon * s.trace() / s.dim() as f64)
    };
    match method {
        Method::Sample => sample_cov(train),
        Method::AdaptiveFspd { epsilon, mu } => {
            let epsilon = scale(epsilon)?;
            let spec = CvSpec { folds, ..CvSpec::new(adaptive_delta_grid(), seed) };
            let delta = cross_validate(train, &AdaptiveCv, &spec)?.best_param;
            let est = AdaptiveCv.estimate(train, delta)?;
            Ok(fspd_apply(&est, epsilon, mu)?.0)
        }
        Method::SoftFspd { epsilon, mu } => {
            let epsilon = scale(epsilon)?;
            let (s, lambda) = soft_cv(train)?;
            let est = ThresholdCv::soft().estimate(&s, lambda)?;
            Ok(fspd_apply(&est, epsilon, mu)?.0)
        }
        Method::SoftEigCon { epsilon } => {
            let epsilon = scale(epsilon)?;
            let (s, lambda) = soft_cv(train)?;
            let out = eig_constraint_estimator(&s, &AdmmConfig::new(lambda, epsilon))?;
            if !out.converged {
                return Err(Error::EigenNoConvergence { dim: s.dim() });
            }
            Ok(out.estimate)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BacktestSpec {
    pub train_window: usize,
    pub hold_window: usize,
    /// Row index of the first held day; at least `train_window`.
    pub start: usize,
    pub risk_free_rate: f64,
    pub method: Method,
    pub cv_folds: usize,
    pub rng_seed: u64,
}

impl BacktestSpec {
    pub fn new(train_window: usize, method: Method) -> Self {
        Self {
            train_window,
            hold_window: DEFAULT_HOLD,
            start: train_window,
            risk_free_rate: DEFAULT_RISK_FREE,
            method,
            cv_folds: crate::selection::DEFAULT_FOLDS,
            rng_seed: 0,
        }
    }

    fn periods(&self, days: usize) -> Result<Vec<usize>> {
        if self.train_window < 2 || self.hold_window == 0 {
            return Err(Error::Config("train window must be >= 2 and hold window >= 1".into()));
        }
        if self.start < self.train_window {
            return Err(Error::Config(format!(
                "start {} leaves less than {} days of history",
                self.start, self.train_window
            )));
        }
        if self.start + self.hold_window > days {
            return Err(Error::Config(format!(
                "series of {days} days is too short for train {} + hold {} from day {}",
                self.train_window, self.hold_window, self.start
            )));
        }
        Ok((0..).map(|k| self.start + k * self.hold_window).take_while(|&t| t + self.hold_window <= days).collect())
    }
}

/// One holding period. `error` is set when the fit or a solve failed; the
/// corresponding returns are then missing.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodOutcome {
    pub first_day: usize,
    pub simple: Option<Vec<f64>>,
    pub no_short: Option<Vec<f64>>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BacktestReport {
    pub method: Method,
    pub train_window: usize,
    pub simple: Performance,
    pub no_short: Performance,
    pub periods: Vec<PeriodOutcome>,
}

impl BacktestReport {
    pub fn skipped(&self) -> usize {
        self.periods.iter().filter(|p| p.error.is_some()).count()
    }
}

fn hold_returns(returns: &DataMatrix, first: usize, len: usize, w: &[f64]) -> Vec<f64> {
    (first..first + len).map(|t| returns.row(t).iter().zip(w).map(|(r, x)| r * x).sum()).collect()
}

fn run_period(returns: &DataMatrix, spec: &BacktestSpec, index: usize, first: usize) -> PeriodOutcome {
    let attempt = || -> Result<(Vec<f64>, Vec<f64>)> {
        let train = returns.slice_rows(first - spec.train_window, first)?;
        let seed = spec.rng_seed.wrapping_add(index as u64);
        let sigma = estimate_covariance(&train, spec.method, spec.cv_folds, seed)?;
        let simple = mvp_simple(&sigma)?;
        let no_short = mvp_no_short(&sigma, DEFAULT_NO_SHORT_TOL)?;
        if !no_short.converged {
            return Err(Error::Config(format!("no-short solve stopped at residual {:e}", no_short.kkt_residual)));
        }
        Ok((
            hold_returns(returns, first, spec.hold_window, &simple.weights),
            hold_returns(returns, first, spec.hold_window, &no_short.weights),
        ))
    };
    match attempt() {
        Ok((s, n)) => PeriodOutcome { first_day: first, simple: Some(s), no_short: Some(n), error: None },
        Err(e) => PeriodOutcome { first_day: first, simple: None, no_short: None, error: Some(e.to_string()) },
    }
}

/// Non-overlapping rolling backtest. Periods run in parallel; failed
/// periods are skipped and reported in `periods`.
pub fn backtest(returns: &DataMatrix, spec: &BacktestSpec) -> Result<BacktestReport> {
    let starts = spec.periods(returns.n())?;
    let periods: Vec<PeriodOutcome> =
        starts.par_iter().enumerate().map(|(k, &t)| run_period(returns, spec, k, t)).collect();
    let collect = |pick: fn(&PeriodOutcome) -> &Option<Vec<f64>>| -> Vec<f64> {
        periods.iter().filter_map(|p| pick(p).as_ref()).flatten().copied().collect()
    };
    let simple = collect(|p| &p.simple);
    let no_short = collect(|p| &p.no_short);
    if simple.is_empty() {
        let first = periods.iter().find_map(|p| p.error.clone()).unwrap_or_default();
        return Err(Error::Config(format!("every holding period failed; first error: {first}")));
    }
    Ok(BacktestReport {
        method: spec.method,
        train_window: spec.train_window,
        simple: Performance::from_daily(&simple, spec.risk_free_rate)?,
        no_short: Performance::from_daily(&no_short, spec.risk_free_rate)?,
        periods,
    })
}

/// Daily returns from a one-factor model: `r_t = mu + beta f_t + e_t`.
/// Loadings, drifts and idiosyncratic scales are drawn once from `seed`.
pub fn synthetic_factor_returns(days: usize, assets: usize, seed: u64) -> Result<DataMatrix> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let beta: Vec<f64> = (0..assets).map(|_| rng.random_range(0.5..1.5)).collect();
    let drift: Vec<f64> = (0..assets).map(|_| rng.random_range(0.0002..0.0008)).collect();
    let idio: Vec<f64> = (0..assets).map(|_| rng.random_range(0.005..0.02)).collect();
    let mut values = Vec::with_capacity(days * assets);
    for _ in 0..days {
        let f: f64 = 0.01 * rng.sample::<f64, _>(StandardNormal);
        for j in 0..assets {
            let e: f64 = rng.sample(StandardNormal);
            values.push(drift[j] + beta[j] * f + idio[j] * e);
        }
    }
    DataMatrix::new(days, assets, values)
}

/// Report rows: method, train window, then return %, risk % and Sharpe for
/// the simple and no-short portfolios.
pub fn backtest_csv(reports: &[BacktestReport]) -> String {
    let mut out = String::from(
        "method,train_window,return_pct_simple,return_pct_no_short,risk_pct_simple,risk_pct_no_short,\
         sharpe_simple,sharpe_no_short,skipped_periods\n",
    );
    let num = crate::io::format_f64;
    let sharpe = |s: Option<f64>| s.map_or_else(|| "undefined".to_string(), num);
    for r in reports {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            r.method.label(),
            r.train_window,
            num(100.0 * r.simple.annual_return),
            num(100.0 * r.no_short.annual_return),
            num(100.0 * r.simple.annual_risk),
            num(100.0 * r.no_short.annual_risk),
            sharpe(r.simple.sharpe),
            sharpe(r.no_short.sharpe),
            r.skipped(),
        ));
    }
    out
}

pub fn backtest_table(reports: &[BacktestReport]) -> String {
    let mut out = format!(
        "{:<14} {:>6} | {:>8} {:>8} | {:>8} {:>8} | {:>8} {:>8}\n",
        "", "train", "ret S", "ret NS", "risk S", "risk NS", "SR S", "SR NS"
    );
    let sharpe = |s: Option<f64>| s.map_or_else(|| "undef".to_string(), |v| format!("{v:.2}"));
    for r in reports {
        out.push_str(&format!(
            "{:<14} {:>6} | {:>8.2} {:>8.2} | {:>8.2} {:>8.2} | {:>8} {:>8}\n",
            r.method.label(),
            r.train_window,
            100.0 * r.simple.annual_return,
            100.0 * r.no_short.annual_return,
            100.0 * r.simple.annual_risk,
            100.0 * r.no_short.annual_risk,
            sharpe(r.simple.sharpe),
            sharpe(r.no_short.sharpe),
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::{prop_assert, proptest};

    fn m(rows: &[Vec<f64>]) -> SymmetricMatrix {
        SymmetricMatrix::from_rows(rows, 0.0).unwrap()
    }

    fn random_pd(rng: &mut impl Rng, p: usize) -> SymmetricMatrix {
        let a: Vec<f64> = (0..p * p).map(|_| rng.random_range(-1.0..1.0)).collect();
        let shift = rng.random_range(0.01..0.5);
        SymmetricMatrix::from_fn(p, |i, j| {
            (0..p).map(|k| a[i * p + k] * a[j * p + k]).sum::<f64>() + if i == j { shift } else { 0.0 }
        })
        .unwrap()
    }

    /// Best feasible equality-constrained solution over every support.
    fn enumerate_active_sets(sigma: &SymmetricMatrix) -> (Vec<f64>, f64) {
        let p = sigma.dim();
        let mut best = (Vec::new(), f64::INFINITY);
        for mask in 1u32..(1 << p) {
            let support: Vec<usize> = (0..p).filter(|&i| mask & (1 << i) != 0).collect();
            let sub = SymmetricMatrix::from_fn(support.len(), |a, b| sigma.get(support[a], support[b])).unwrap();
            let x = Cholesky::factor(&sub).unwrap().solve(&vec![1.0; support.len()]);
            let total: f64 = x.iter().sum();
            if x.iter().any(|&v| v / total < 0.0) {
                continue;
            }
            let mut w = vec![0.0; p];
            support.iter().zip(&x).for_each(|(&i, v)| w[i] = v / total);
            let f = sigma.quadratic_form(&w);
            if f < best.1 {
                best = (w, f);
            }
        }
        best
    }

    #[test]
    fn simple_examples() {
        let w = mvp_simple(&SymmetricMatrix::identity(3)).unwrap();
        w.weights.iter().for_each(|v| assert!((v - 1.0 / 3.0).abs() < 1e-15));
        let w = mvp_simple(&SymmetricMatrix::diagonal(&[1.0, 2.0]).unwrap()).unwrap();
        assert!((w.weights[0] - 2.0 / 3.0).abs() < 1e-15 && (w.weights[1] - 1.0 / 3.0).abs() < 1e-15);
        let w = mvp_simple(&m(&[vec![1.0, 1.5], vec![1.5, 4.0]])).unwrap();
        assert!((w.weights[0] - 1.25).abs() < 1e-14 && (w.weights[1] + 0.25).abs() < 1e-14);
        assert!((w.objective - 0.875).abs() < 1e-14);
    }

    #[test]
    fn refuses_non_pd() {
        let err = mvp_simple(&m(&[vec![2.0, 3.0], vec![3.0, 2.0]])).unwrap_err();
        match err {
            Error::NotPositiveDefinite { min_eigenvalue } => assert!((min_eigenvalue + 1.0).abs() < 1e-10),
            e => panic!("unexpected {e:?}"),
        }
        assert!(mvp_no_short(&m(&[vec![2.0, 3.0], vec![3.0, 2.0]]), 1e-10).is_err());
    }

    #[test]
    fn no_short_examples() {
        let w = mvp_no_short(&m(&[vec![1.0, 1.5], vec![1.5, 4.0]]), 1e-10).unwrap();
        assert!(w.converged);
        assert!((w.weights[0] - 1.0).abs() < 1e-10 && w.weights[1].abs() < 1e-10);
        assert!((w.objective - 1.0).abs() < 1e-10);
        assert_eq!(w.active_constraints, vec![1]);

        let d = SymmetricMatrix::diagonal(&[1.0, 2.0, 4.0, 0.5]).unwrap();
        let ns = mvp_no_short(&d, 1e-10).unwrap();
        let s = mvp_simple(&d).unwrap();
        assert!(ns.active_constraints.is_empty());
        for (a, b) in ns.weights.iter().zip(&s.weights) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn no_short_matches_active_set_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let p = rng.random_range(2..=6);
            let sigma = random_pd(&mut rng, p);
            let (w_ref, f_ref) = enumerate_active_sets(&sigma);
            let w = mvp_no_short(&sigma, 1e-10).unwrap();
            assert!(w.converged, "residual {}", w.kkt_residual);
            for (a, b) in w.weights.iter().zip(&w_ref) {
                assert!((a - b).abs() < 1e-7, "{:?} vs {:?}", w.weights, w_ref);
            }
            assert!((w.objective - f_ref).abs() < 1e-7);
        }
    }

    #[test]
    fn simple_stationarity() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..50 {
            let p = rng.random_range(2..=20);
            let sigma = random_pd(&mut rng, p);
            let w = mvp_simple(&sigma).unwrap();
            let mut g = vec![0.0; p];
            sigma.mul_vec(&w.weights, &mut g);
            // Sigma w = objective * 1
            g.iter().for_each(|v| assert!((v - w.objective).abs() < 1e-8 * (1.0 + w.objective)));
        }
    }

    #[test]
    fn annualization_hand_example() {
        let perf = Performance::from_daily_moments(0.001, 0.01, 60, 0.05);
        assert!((perf.annual_return - 0.252).abs() < 1e-12);
        assert!((perf.annual_risk - 0.158_745).abs() < 1e-6);
        assert!((perf.sharpe.unwrap() - 1.2725).abs() < 1e-4);
        // the same through a daily series with exactly that mean and sd
        let n = 100;
        let sd_scale = 0.01 * ((n - 1) as f64 / n as f64).sqrt();
        let daily: Vec<f64> = (0..n).map(|k| 0.001 + if k % 2 == 0 { sd_scale } else { -sd_scale }).collect();
        let perf = Performance::from_daily(&daily, 0.05).unwrap();
        assert!((perf.sharpe.unwrap() - 1.2725).abs() < 1e-4);
    }

    #[test]
    fn zero_risk_gives_undefined_sharpe() {
        let perf = Performance::from_daily(&[0.001; 30], 0.05).unwrap();
        assert_eq!(perf.annual_risk, 0.0);
        assert_eq!(perf.sharpe, None);
        let report = BacktestReport {
            method: Method::Sample,
            train_window: 60,
            simple: perf,
            no_short: perf,
            periods: vec![],
        };
        assert!(backtest_csv(&[report.clone()]).contains("undefined"));
        assert!(backtest_table(&[report]).contains("undef"));
    }

    #[test]
    fn window_overrun_is_config_error() {
        let r = synthetic_factor_returns(100, 5, 0).unwrap();
        assert!(matches!(backtest(&r, &BacktestSpec::new(60, Method::Sample)), Err(Error::Config(_))));
        let spec = BacktestSpec { start: 10, ..BacktestSpec::new(60, Method::Sample) };
        assert!(backtest(&r, &spec).is_err());
    }

    #[test]
    fn backtest_periods_and_determinism() {
        let r = synthetic_factor_returns(60 + 3 * 60 + 17, 8, 3).unwrap();
        let spec = BacktestSpec { rng_seed: 9, ..BacktestSpec::new(60, Method::SoftFspd { epsilon: 0.01, mu: MuChoice::SpectralFrobenius }) };
        let a = backtest(&r, &spec).unwrap();
        assert_eq!(a.periods.len(), 3);
        assert_eq!(a.periods.iter().map(|p| p.first_day).collect::<Vec<_>>(), vec![60, 120, 180]);
        assert_eq!(a.simple.days, 180);
        let b = backtest(&r, &spec).unwrap();
        assert_eq!(backtest_csv(&[a]), backtest_csv(&[b]));
    }

    #[test]
    fn all_methods_run_and_no_short_risk_is_competitive() {
        let r = synthetic_factor_returns(60 + 4 * 60, 10, 21).unwrap();
        for method in Method::ALL {
            let rep = backtest(&r, &BacktestSpec::new(60, method)).unwrap();
            assert_eq!(rep.skipped(), 0, "{:?}", rep.periods);
            // soft check: no-short risk not far above simple risk
            assert!(rep.no_short.annual_risk <= 1.2 * rep.simple.annual_risk + 1e-12, "{}", method.label());
        }
    }

    #[test]
    fn failed_periods_are_skipped() {
        // 3 assets, 2 of them identical: the sample covariance is singular.
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut rows = Vec::new();
        for _ in 0..200 {
            let a: f64 = rng.sample(StandardNormal);
            let b: f64 = rng.sample(StandardNormal);
            rows.push(vec![0.01 * a, 0.01 * a, 0.01 * b]);
        }
        let r = DataMatrix::from_rows(&rows).unwrap();
        assert!(backtest(&r, &BacktestSpec::new(60, Method::Sample)).is_err());
        let rep = backtest(&r, &BacktestSpec::new(60, Method::SoftFspd { epsilon: 1e-6, mu: MuChoice::Infinite })).unwrap();
        assert_eq!(rep.skipped(), 0);
    }

    proptest! {
        #[test]
        fn simplex_projection_is_nearest(v in proptest::collection::vec(-3.0f64..3.0, 1..12), seed in 0u64..1000) {
            let w = project_simplex(&v);
            prop_assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            prop_assert!(w.iter().all(|&x| x >= 0.0));
            let d0: f64 = w.iter().zip(&v).map(|(a, b)| (a - b) * (a - b)).sum();
            // no random simplex point is closer
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..50 {
                let raw: Vec<f64> = v.iter().map(|_| -rng.random::<f64>().ln()).collect();
                let s: f64 = raw.iter().sum();
                let d: f64 = raw.iter().zip(&v).map(|(a, b)| (a / s - b) * (a / s - b)).sum();
                prop_assert!(d0 <= d + 1e-12);
            }
        }

        #[test]
        fn no_short_objective_dominates_simple(seed in 0u64..200) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let p = rng.random_range(2..=12);
            let sigma = random_pd(&mut rng, p);
            let s = mvp_simple(&sigma).unwrap();
            let ns = mvp_no_short(&sigma, 1e-10).unwrap();
            prop_assert!(ns.objective >= s.objective - 1e-10);
            prop_assert!((ns.weights.iter().sum::<f64>() - 1.0).abs() < 1e-10);
            prop_assert!(ns.weights.iter().all(|&x| x >= -1e-10));
            prop_assert!(ns.kkt_residual <= KKT_TOL);
        }
    }
}
