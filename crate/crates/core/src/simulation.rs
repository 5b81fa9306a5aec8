//! Monte Carlo harness: true covariance models, samplers, risk metrics and
//! the replication engine that compares estimators.

use std::fmt::Write as _;
use std::time::Instant;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, Distribution as _, StandardNormal};
use rayon::prelude::*;

use crate::baselines::{eig_constraint_estimator, logdet_barrier_estimator, AdmmConfig, BarrierConfig};
use crate::error::{Error, Result};
use crate::fspd::{fspd_apply, MuChoice, DEFAULT_EPSILON};
use crate::io::{format_f64, parse_f64};
use crate::linalg::{eigenvalues, norm, Cholesky, NormKind, SymmetricMatrix};
use crate::regularizers::{
    apply_threshold_rule, banding_estimator, sample_cov, tapering_estimator, DataMatrix, ThresholdRule,
    DEFAULT_SCAD_A,
};
use crate::selection::{cross_validate, default_lambda_grid, CvEstimator, CvSpec, ThresholdCv, DEFAULT_FOLDS};

pub const M2_BLOCK: usize = 20;
pub const STUDENT_T_DF: f64 = 5.0;
pub const DEFAULT_TAU: f64 = 1e-2;

/// `(1 - |i - j| / 10)_+`.
pub fn make_m1(p: usize) -> SymmetricMatrix {
    SymmetricMatrix::from_fn(p, |i, j| (1.0 - (j as f64 - i as f64).abs() / 10.0).max(0.0))
        .expect("finite entries")
}

/// Identity plus `0.4` on every `(I_k + {next index}) x (I_k + {next index})`
/// block, where `I_k` are consecutive blocks of 20 indices. Overlapping
/// blocks do not add up: an entry is `0.4` if some block covers it.
pub fn make_m2(p: usize) -> Result<SymmetricMatrix> {
    if p == 0 || p % M2_BLOCK != 0 {
        return Err(Error::Config(format!("M2 needs p divisible by {M2_BLOCK}, got {p}")));
    }
    let covered = |i: usize, j: usize| {
        (0..p / M2_BLOCK).any(|k| {
            let (lo, hi) = (k * M2_BLOCK, (k + 1) * M2_BLOCK);
            let inside = |x: usize| (lo..=hi).contains(&x) && x < p;
            inside(i) && inside(j)
        })
    };
    SymmetricMatrix::from_fn(p, |i, j| f64::from(u8::from(i == j)) + if covered(i, j) { 0.4 } else { 0.0 })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Truth {
    M1,
    M2,
}

impl Truth {
    pub fn build(self, p: usize) -> Result<SymmetricMatrix> {
        match self {
            Truth::M1 => Ok(make_m1(p)),
            Truth::M2 => make_m2(p),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Truth::M1 => "M1",
            Truth::M2 => "M2",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SampleDistribution {
    Gaussian,
    StudentT { df: f64 },
}

impl SampleDistribution {
    pub fn label(self) -> String {
        match self {
            SampleDistribution::Gaussian => "gaussian".into(),
            SampleDistribution::StudentT { df } => format!("t{df}"),
        }
    }
}

fn factor_truth(truth: &SymmetricMatrix) -> Result<Cholesky> {
    Cholesky::factor(truth).map_err(|e| Error::Config(format!("true covariance is not positive definite: {e}")))
}

fn draw_rows(chol: &Cholesky, n: usize, rng: &mut impl Rng, dist: SampleDistribution) -> Result<DataMatrix> {
    let p = chol.dim();
    let (scale, chi) = match dist {
        SampleDistribution::Gaussian => (1.0, None),
        SampleDistribution::StudentT { df } => {
            if !(df > 2.0) {
                return Err(Error::Config(format!("t degrees of freedom must exceed 2, got {df}")));
            }
            let chi = ChiSquared::new(df).map_err(|e| Error::Config(e.to_string()))?;
            (((df - 2.0) / df).sqrt(), Some((chi, df)))
        }
    };
    let mut values = Vec::with_capacity(n * p);
    let mut z = vec![0.0; p];
    let mut x = vec![0.0; p];
    for _ in 0..n {
        z.iter_mut().for_each(|v| *v = rng.sample(StandardNormal));
        chol.mul_lower(&z, &mut x);
        let mix = match &chi {
            None => 1.0,
            Some((chi, df)) => (df / chi.sample(rng)).sqrt(),
        };
        values.extend(x.iter().map(|v| v * scale * mix));
    }
    DataMatrix::new(n, p, values)
}

/// `n` draws from `N(0, truth)`.
pub fn sample_gaussian(truth: &SymmetricMatrix, n: usize, seed: u64) -> Result<DataMatrix> {
    draw_rows(&factor_truth(truth)?, n, &mut ChaCha8Rng::seed_from_u64(seed), SampleDistribution::Gaussian)
}

/// `n` draws from a multivariate t with `df` degrees of freedom whose
/// covariance (not scale matrix) equals `truth`.
pub fn sample_student_t(truth: &SymmetricMatrix, df: f64, n: usize, seed: u64) -> Result<DataMatrix> {
    draw_rows(&factor_truth(truth)?, n, &mut ChaCha8Rng::seed_from_u64(seed), SampleDistribution::StudentT { df })
}

/// Estimators compared in a scenario. All but `Oracle` start from the
/// thresholded sample covariance at the CV-selected lambda.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EstimatorKind {
    /// Returns the true covariance; a harness self-check.
    Oracle,
    Initial,
    Fspd(MuChoice),
    EigCon,
    LogDet,
}

impl EstimatorKind {
    pub fn label(self) -> String {
        match self {
            EstimatorKind::Oracle => "oracle".into(),
            EstimatorKind::Initial => "soft".into(),
            EstimatorKind::Fspd(mu) => format!("fspd_{}", mu_tag(mu)),
            EstimatorKind::EigCon => "eigcon".into(),
            EstimatorKind::LogDet => "logdet".into(),
        }
    }

    pub fn parse(label: &str) -> Result<Self> {
        Ok(match label {
            "oracle" => EstimatorKind::Oracle,
            "soft" => EstimatorKind::Initial,
            "eigcon" => EstimatorKind::EigCon,
            "logdet" => EstimatorKind::LogDet,
            other => match other.strip_prefix("fspd_") {
                Some(mu) => EstimatorKind::Fspd(mu.parse()?),
                None => return Err(Error::Parse(format!("unknown estimator '{label}'"))),
            },
        })
    }
}

fn mu_tag(mu: MuChoice) -> String {
    match mu {
        MuChoice::Spectral => "s".into(),
        MuChoice::Frobenius => "f".into(),
        MuChoice::SpectralFrobenius => "sf".into(),
        MuChoice::Infinite => "inf".into(),
        MuChoice::Explicit(v) => format!("{v}"),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpec {
    pub truth: Truth,
    pub distribution: SampleDistribution,
    pub n: usize,
    pub p: usize,
    pub replications: usize,
    pub rng_seed: u64,
    pub estimators: Vec<EstimatorKind>,
    pub initial_rule: ThresholdRule,
    pub epsilon: f64,
    pub tau: f64,
    pub cv_folds: usize,
}

impl ScenarioSpec {
    pub fn new(truth: Truth, distribution: SampleDistribution, n: usize, p: usize, replications: usize) -> Self {
        Self {
            truth,
            distribution,
            n,
            p,
            replications,
            rng_seed: 0,
            estimators: vec![
                EstimatorKind::Initial,
                EstimatorKind::Fspd(MuChoice::SpectralFrobenius),
                EstimatorKind::Fspd(MuChoice::Infinite),
                EstimatorKind::EigCon,
                EstimatorKind::LogDet,
            ],
            initial_rule: ThresholdRule::Soft,
            epsilon: DEFAULT_EPSILON,
            tau: DEFAULT_TAU,
            cv_folds: DEFAULT_FOLDS,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 || self.p < 2 {
            return Err(Error::Config(format!("need n >= 2 and p >= 2, got n={} p={}", self.n, self.p)));
        }
        if self.replications == 0 {
            return Err(Error::Config("need at least one replication".into()));
        }
        if self.truth == Truth::M2 && self.p % M2_BLOCK != 0 {
            return Err(Error::Config(format!("M2 needs p divisible by {M2_BLOCK}, got {}", self.p)));
        }
        if self.estimators.is_empty() {
            return Err(Error::Config("no estimators configured".into()));
        }
        Ok(())
    }

    pub fn describe(&self) -> String {
        format!(
            "{}, {}, n={}, p={}, {} replications",
            self.truth.label(),
            self.distribution.label(),
            self.n,
            self.p,
            self.replications
        )
    }
}

/// Independent generator for replication `r`.
pub fn replication_rng(seed: u64, r: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(r as u64);
    rng
}

/// Metrics of one estimate in one replication.
#[derive(Debug, Clone, PartialEq)]
pub struct FitMetrics {
    pub operator_l1: f64,
    pub spectral: f64,
    pub frobenius: f64,
    pub min_eigenvalue: f64,
    pub negative_eigenvalue_fraction: f64,
    pub is_pd: bool,
    /// Off-diagonal support equals that of the initial estimate.
    pub support_preserved: bool,
    pub converged: bool,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Replication {
    pub lambda: f64,
    /// One entry per configured estimator; `Err` carries the fit error.
    pub fits: Vec<std::result::Result<FitMetrics, String>>,
}

fn metrics(est: &SymmetricMatrix, truth: &SymmetricMatrix, initial: &SymmetricMatrix) -> Result<FitMetrics> {
    let diff = est.sub(truth)?;
    let eigs = eigenvalues(est)?;
    let negative = eigs.iter().filter(|&&g| g < 0.0).count();
    Ok(FitMetrics {
        operator_l1: norm(&diff, NormKind::OperatorL1)?,
        spectral: norm(&diff, NormKind::Spectral)?,
        frobenius: norm(&diff, NormKind::FrobeniusUnscaled)?,
        min_eigenvalue: eigs[0],
        negative_eigenvalue_fraction: negative as f64 / eigs.len() as f64,
        is_pd: eigs[0] > 0.0,
        support_preserved: est.same_off_diagonal_support(initial),
        converged: true,
        seconds: 0.0,
    })
}

fn fit_one(
    kind: EstimatorKind,
    spec: &ScenarioSpec,
    truth: &SymmetricMatrix,
    s: &SymmetricMatrix,
    initial: &SymmetricMatrix,
    lambda: f64,
) -> Result<FitMetrics> {
    let started = Instant::now();
    let (est, converged) = match kind {
        EstimatorKind::Oracle => (truth.clone(), true),
        EstimatorKind::Initial => (threshold_matrix(s, lambda, spec.initial_rule)?, true),
        EstimatorKind::Fspd(mu) => {
            let init = threshold_matrix(s, lambda, spec.initial_rule)?;
            (fspd_apply(&init, spec.epsilon, mu)?.0, true)
        }
        EstimatorKind::EigCon => {
            let out = eig_constraint_estimator(s, &AdmmConfig::new(lambda, spec.epsilon))?;
            (out.estimate, out.converged)
        }
        EstimatorKind::LogDet => {
            let out = logdet_barrier_estimator(s, &BarrierConfig::new(lambda, spec.tau))?;
            (out.estimate, out.converged)
        }
    };
    let seconds = started.elapsed().as_secs_f64();
    let mut m = metrics(&est, truth, initial)?;
    m.converged = converged;
    m.seconds = seconds;
    Ok(m)
}

fn threshold_matrix(s: &SymmetricMatrix, lambda: f64, rule: ThresholdRule) -> Result<SymmetricMatrix> {
    ThresholdCv { rule, ..ThresholdCv::soft() }.estimate(s, lambda)
}

fn run_replication(spec: &ScenarioSpec, truth: &SymmetricMatrix, chol: &Cholesky, r: usize) -> Result<Replication> {
    let mut rng = replication_rng(spec.rng_seed, r);
    let data = draw_rows(chol, spec.n, &mut rng, spec.distribution)?;
    let cv_seed = rng.next_u64();
    let s = sample_cov(&data)?;
    let grid = default_lambda_grid(&s)?;
    let cv = CvSpec { folds: spec.cv_folds, ..CvSpec::new(grid, cv_seed) };
    let estimator = ThresholdCv { rule: spec.initial_rule, ..ThresholdCv::soft() };
    let lambda = cross_validate(&data, &estimator, &cv)?.best_param;
    let initial = estimator.estimate(&s, lambda)?;
    let fits = spec
        .estimators
        .iter()
        .map(|&k| fit_one(k, spec, truth, &s, &initial, lambda).map_err(|e| e.to_string()))
        .collect();
    Ok(Replication { lambda, fits })
}

/// Mean and standard error (`sd / sqrt(count)`) over successful fits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aggregate {
    pub mean: f64,
    pub std_error: f64,
}

impl Aggregate {
    pub fn of(values: &[f64]) -> Self {
        let k = values.len();
        if k == 0 {
            return Self { mean: f64::NAN, std_error: f64::NAN };
        }
        let mean = values.iter().sum::<f64>() / k as f64;
        if k == 1 {
            return Self { mean, std_error: f64::NAN };
        }
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (k - 1) as f64;
        Self { mean, std_error: (var / k as f64).sqrt() }
    }
}

/// Fields reported per estimator, in report order.
pub const METRICS: [&str; 8] = [
    "matrix_l1",
    "spectral",
    "frobenius",
    "min_eigenvalue",
    "negative_eigenvalue_fraction",
    "pd_fraction",
    "support_preserved_fraction",
    "converged_fraction",
];

fn metric_value(m: &FitMetrics, name: &str) -> f64 {
    match name {
        "matrix_l1" => m.operator_l1,
        "spectral" => m.spectral,
        "frobenius" => m.frobenius,
        "min_eigenvalue" => m.min_eigenvalue,
        "negative_eigenvalue_fraction" => m.negative_eigenvalue_fraction,
        "pd_fraction" => f64::from(u8::from(m.is_pd)),
        "support_preserved_fraction" => f64::from(u8::from(m.support_preserved)),
        "converged_fraction" => f64::from(u8::from(m.converged)),
        "seconds" => m.seconds,
        _ => unreachable!("unknown metric {name}"),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorSummary {
    pub estimator: EstimatorKind,
    pub successes: usize,
    pub failures: usize,
    /// Aggregates in [`METRICS`] order.
    pub aggregates: Vec<Aggregate>,
    pub pd_count: usize,
    pub nonconverged: usize,
    pub mean_seconds: f64,
    pub errors: Vec<String>,
}

impl EstimatorSummary {
    pub fn metric(&self, name: &str) -> Aggregate {
        let k = METRICS.iter().position(|m| *m == name).unwrap_or_else(|| panic!("unknown metric {name}"));
        self.aggregates[k]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RiskReport {
    pub spec: ScenarioSpec,
    /// `Err` when the replication failed before any estimator ran.
    pub replications: Vec<std::result::Result<Replication, String>>,
    pub summaries: Vec<EstimatorSummary>,
}

impl RiskReport {
    pub fn summary(&self, kind: EstimatorKind) -> Option<&EstimatorSummary> {
        self.summaries.iter().find(|s| s.estimator == kind)
    }

    pub fn fits(&self, k: usize) -> Vec<&FitMetrics> {
        self.replications.iter().filter_map(|r| r.as_ref().ok()).filter_map(|r| r.fits[k].as_ref().ok()).collect()
    }

    pub fn any_nonconverged(&self) -> bool {
        self.summaries.iter().any(|s| s.nonconverged > 0)
    }
}

fn summarize(spec: &ScenarioSpec, reps: &[std::result::Result<Replication, String>]) -> Vec<EstimatorSummary> {
    spec.estimators
        .iter()
        .enumerate()
        .map(|(k, &estimator)| {
            let mut ok = Vec::new();
            let mut errors = Vec::new();
            for rep in reps {
                match rep {
                    Ok(r) => match &r.fits[k] {
                        Ok(m) => ok.push(m),
                        Err(e) => errors.push(e.clone()),
                    },
                    Err(e) => errors.push(e.clone()),
                }
            }
            let aggregates = METRICS
                .iter()
                .map(|name| Aggregate::of(&ok.iter().map(|m| metric_value(m, name)).collect::<Vec<_>>()))
                .collect();
            EstimatorSummary {
                estimator,
                successes: ok.len(),
                failures: errors.len(),
                aggregates,
                pd_count: ok.iter().filter(|m| m.is_pd).count(),
                nonconverged: ok.iter().filter(|m| !m.converged).count(),
                mean_seconds: Aggregate::of(&ok.iter().map(|m| m.seconds).collect::<Vec<_>>()).mean,
                errors,
            }
        })
        .collect()
}

/// Runs every replication (in parallel) and aggregates in replication order,
/// so the numbers depend only on the spec.
pub fn run_scenario(spec: &ScenarioSpec) -> Result<RiskReport> {
    spec.validate()?;
    let truth = spec.truth.build(spec.p)?;
    let chol = factor_truth(&truth)?;
    let replications: Vec<_> = (0..spec.replications)
        .into_par_iter()
        .map(|r| run_replication(spec, &truth, &chol, r).map_err(|e| e.to_string()))
        .collect();
    let summaries = summarize(spec, &replications);
    Ok(RiskReport { spec: spec.clone(), replications, summaries })
}

pub const REPORT_HEADER: &str = "truth,distribution,n,p,replications,estimator,metric,mean,std_error,successes,failures";

/// One row per estimator and metric. Timing is left out so the file is
/// reproducible; see [`timing_csv`].
pub fn report_csv(reports: &[RiskReport]) -> String {
    let mut out = format!("{REPORT_HEADER}\n");
    for r in reports {
        let s = &r.spec;
        for summ in &r.summaries {
            for (name, agg) in METRICS.iter().zip(&summ.aggregates) {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{},{},{},{},{},{}",
                    s.truth.label(),
                    s.distribution.label(),
                    s.n,
                    s.p,
                    s.replications,
                    summ.estimator.label(),
                    name,
                    format_f64(agg.mean),
                    format_f64(agg.std_error),
                    summ.successes,
                    summ.failures
                );
            }
        }
    }
    out
}

/// A parsed row of [`report_csv`].
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub truth: String,
    pub distribution: String,
    pub n: usize,
    pub p: usize,
    pub replications: usize,
    pub estimator: EstimatorKind,
    pub metric: String,
    pub aggregate: Aggregate,
    pub successes: usize,
    pub failures: usize,
}

pub fn parse_report_csv(text: &str) -> Result<Vec<ReportRow>> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    match lines.next() {
        Some((_, h)) if h.trim() == REPORT_HEADER => {}
        _ => return Err(Error::Parse("missing report header".into())),
    }
    let count = |f: &str, ln: usize| {
        f.trim().parse::<usize>().map_err(|_| Error::Parse(format!("line {ln}: bad count '{f}'")))
    };
    lines
        .map(|(k, line)| {
            let ln = k + 1;
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 11 {
                return Err(Error::Parse(format!("line {ln}: expected 11 fields, got {}", f.len())));
            }
            Ok(ReportRow {
                truth: f[0].to_string(),
                distribution: f[1].to_string(),
                n: count(f[2], ln)?,
                p: count(f[3], ln)?,
                replications: count(f[4], ln)?,
                estimator: EstimatorKind::parse(f[5])?,
                metric: f[6].to_string(),
                aggregate: Aggregate { mean: parse_f64(f[7], ln, 8)?, std_error: parse_f64(f[8], ln, 9)? },
                successes: count(f[9], ln)?,
                failures: count(f[10], ln)?,
            })
        })
        .collect()
}

/// Mean wall-clock seconds per estimator fit (excluding CV).
pub fn timing_csv(reports: &[RiskReport]) -> String {
    let mut out = String::from("truth,distribution,n,p,estimator,mean_seconds\n");
    for r in reports {
        for summ in &r.summaries {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                r.spec.truth.label(),
                r.spec.distribution.label(),
                r.spec.n,
                r.spec.p,
                summ.estimator.label(),
                format_f64(summ.mean_seconds)
            );
        }
    }
    out
}

fn display_name(kind: EstimatorKind) -> String {
    match kind {
        EstimatorKind::Oracle => "Oracle".into(),
        EstimatorKind::Initial => "Soft thresholding".into(),
        EstimatorKind::Fspd(MuChoice::SpectralFrobenius) => "FSPD(mu_SF)".into(),
        EstimatorKind::Fspd(MuChoice::Infinite) => "FSPD(inf)".into(),
        EstimatorKind::Fspd(mu) => format!("FSPD({})", mu_tag(mu)),
        EstimatorKind::EigCon => "EigCon".into(),
        EstimatorKind::LogDet => "Log-det".into(),
    }
}

/// Aligned table: risks with standard errors in parentheses, then the PD
/// count and mean minimum eigenvalue.
pub fn report_table(reports: &[RiskReport]) -> String {
    let mut out = String::new();
    for r in reports {
        let _ = writeln!(out, "{}", r.spec.describe());
        let _ = writeln!(
            out,
            "  {:<18} {:>18} {:>18} {:>18} {:>9} {:>10}",
            "estimator", "matrix l1", "spectral", "frobenius", "PD", "min eig"
        );
        for s in &r.summaries {
            let cell = |name: &str| {
                let a = s.metric(name);
                format!("{:.2} ({:.2})", a.mean, a.std_error)
            };
            let _ = writeln!(
                out,
                "  {:<18} {:>18} {:>18} {:>18} {:>9} {:>10.4}",
                display_name(s.estimator),
                cell("matrix_l1"),
                cell("spectral"),
                cell("frobenius"),
                format!("{}/{}", s.pd_count, r.spec.replications),
                s.metric("min_eigenvalue").mean,
            );
            if s.failures > 0 {
                let _ = writeln!(out, "    {} failed fits, first: {}", s.failures, s.errors[0]);
            }
            if s.nonconverged > 0 {
                let _ = writeln!(out, "    {} fits hit the iteration limit", s.nonconverged);
            }
        }
        out.push('\n');
    }
    out
}

/// Desk-scale grid: both truths and both distributions at n = p = 100.
pub fn desk_scenarios(replications: usize, seed: u64) -> Vec<ScenarioSpec> {
    scenario_grid(&[100], &[100], replications, seed)
}

/// Full grid: both truths, both distributions, n and p in {100, 200, 400}.
pub fn paper_scenarios(replications: usize, seed: u64) -> Vec<ScenarioSpec> {
    scenario_grid(&[100, 200, 400], &[100, 200, 400], replications, seed)
}

fn scenario_grid(ns: &[usize], ps: &[usize], replications: usize, seed: u64) -> Vec<ScenarioSpec> {
    let mut out = Vec::new();
    for truth in [Truth::M1, Truth::M2] {
        for dist in [SampleDistribution::Gaussian, SampleDistribution::StudentT { df: STUDENT_T_DF }] {
            for &n in ns {
                for &p in ps {
                    let k = out.len() as u64;
                    out.push(ScenarioSpec {
                        rng_seed: seed.wrapping_mul(1_000_003).wrapping_add(k),
                        ..ScenarioSpec::new(truth, dist, n, p, replications)
                    });
                }
            }
        }
    }
    out
}

/// Minimum eigenvalue of first-stage estimators across their tuning
/// parameters, for one simulated dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub family: &'static str,
    pub param: f64,
    pub min_eigenvalue: f64,
}

pub fn min_eigenvalue_sweep(
    truth: Truth,
    distribution: SampleDistribution,
    n: usize,
    p: usize,
    seed: u64,
    lambda_steps: usize,
) -> Result<Vec<SweepPoint>> {
    let t = truth.build(p)?;
    let data = draw_rows(&factor_truth(&t)?, n, &mut replication_rng(seed, 0), distribution)?;
    let s = sample_cov(&data)?;
    let max_off = default_lambda_grid(&s)?.last().copied().unwrap_or(0.0);
    let mut out = Vec::new();
    for (family, rule) in [("hard", ThresholdRule::Hard), ("soft", ThresholdRule::Soft), ("scad", ThresholdRule::Scad)] {
        for k in 0..=lambda_steps {
            let lambda = k as f64 / lambda_steps as f64 * max_off;
            let est = s.map_entries(|i, j, v| {
                if i == j {
                    v
                } else {
                    apply_threshold_rule(v, lambda, rule, DEFAULT_SCAD_A)
                }
            })?;
            out.push(SweepPoint { family, param: lambda, min_eigenvalue: eigenvalues(&est)?[0] });
        }
    }
    for h in 1..p {
        out.push(SweepPoint { family: "banding", param: h as f64, min_eigenvalue: eigenvalues(&banding_estimator(&s, h)?)?[0] });
        out.push(SweepPoint {
            family: "tapering",
            param: h as f64,
            min_eigenvalue: eigenvalues(&tapering_estimator(&s, h)?)?[0],
        });
    }
    Ok(out)
}

pub fn sweep_csv(points: &[SweepPoint]) -> String {
    let mut out = String::from("family,param,min_eigenvalue\n");
    for pt in points {
        let _ = writeln!(out, "{},{},{}", pt.family, format_f64(pt.param), format_f64(pt.min_eigenvalue));
    }
    out
}
