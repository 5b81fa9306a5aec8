use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use pdcov::fspd::{distance_to_input, fspd_apply, MuChoice, DEFAULT_EPSILON};
use pdcov::io::{self, DataCsvOptions, DataTable};
use pdcov::linalg::NormKind;
use pdcov::portfolio::{self, BacktestSpec, Method};
use pdcov::regularizers::{sample_cov, DataMatrix, ThresholdRule, DEFAULT_ADAPTIVE_DELTA};
use pdcov::selection::{
    cross_validate, default_lambda_grid, AdaptiveCv, BandwidthCv, CvEstimator, CvSpec, ThresholdCv, DEFAULT_FOLDS,
};
use pdcov::simulation::{self, EstimatorKind, SampleDistribution, ScenarioSpec, Truth, STUDENT_T_DF};
use pdcov::{Error, Result, SymmetricMatrix};

const EXIT_INPUT: u8 = 1;
const EXIT_NONCONVERGED: u8 = 2;

/// Positive-definite covariance estimation toolkit.
#[derive(Debug, Parser)]
#[command(name = "pdcov", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Make a symmetric matrix positive definite without changing its support.
    Repair(RepairArgs),
    /// Fit a covariance estimator to observations.
    Estimate(EstimateArgs),
    /// Run the Monte Carlo comparison of estimators.
    Bench(BenchArgs),
    /// Backtest minimum-variance portfolios.
    Portfolio(PortfolioArgs),
}

#[derive(Debug, Args)]
struct RepairArgs {
    /// Input matrix CSV (p rows of p values).
    #[arg(long)]
    input: PathBuf,
    /// Where to write the repaired matrix.
    #[arg(long)]
    output: PathBuf,
    /// Plan sidecar path [default: <output>.plan].
    #[arg(long)]
    plan: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_EPSILON)]
    epsilon: f64,
    /// Shrinkage target: sf, s, f, inf or a number.
    #[arg(long, default_value = "sf")]
    mu: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum EstimatorArg {
    Sample,
    Hard,
    Soft,
    Scad,
    Adaptive,
    Banding,
    Tapering,
}

#[derive(Debug, Args)]
struct DataFlags {
    /// The first line holds column names.
    #[arg(long)]
    header: bool,
    /// The first column holds ISO dates.
    #[arg(long)]
    date_column: bool,
}

impl DataFlags {
    fn options(&self) -> DataCsvOptions {
        DataCsvOptions { header: self.header, date_column: self.date_column }
    }
}

#[derive(Debug, Args)]
struct EstimateArgs {
    /// Observations CSV, one row per observation.
    #[arg(long)]
    data: PathBuf,
    #[command(flatten)]
    format: DataFlags,
    #[arg(long)]
    output: PathBuf,
    #[arg(long, value_enum, default_value = "soft")]
    estimator: EstimatorArg,
    /// Threshold (or adaptive multiplier); chosen by cross-validation when absent.
    #[arg(long)]
    lambda: Option<f64>,
    /// Bandwidth for banding/tapering; chosen by cross-validation when absent.
    #[arg(long)]
    bandwidth: Option<usize>,
    /// Repair the estimate with this target (sf, s, f, inf or a number).
    #[arg(long)]
    repair: Option<String>,
    #[arg(long, default_value_t = DEFAULT_EPSILON)]
    epsilon: f64,
    /// Plan sidecar path when repairing [default: <output>.plan].
    #[arg(long)]
    plan: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_FOLDS)]
    cv_folds: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Scale {
    Desk,
    Paper,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TruthArg {
    M1,
    M2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum DistArg {
    Gaussian,
    T,
}

#[derive(Debug, Args)]
struct BenchArgs {
    /// Directory for report.csv, report.txt and the optional extras.
    #[arg(long, default_value = "bench-out")]
    out_dir: PathBuf,
    #[arg(long, value_enum, default_value = "desk")]
    scale: Scale,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Replications per scenario [default: 20 desk, 100 paper].
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_FOLDS)]
    cv_folds: usize,
    /// Restrict to these truths.
    #[arg(long, value_enum, value_delimiter = ',')]
    truth: Vec<TruthArg>,
    /// Restrict to these distributions.
    #[arg(long, value_enum, value_delimiter = ',')]
    dist: Vec<DistArg>,
    /// Override the dimensions.
    #[arg(long, value_delimiter = ',')]
    p: Vec<usize>,
    /// Override the sample sizes.
    #[arg(long, value_delimiter = ',')]
    n: Vec<usize>,
    /// Estimators to compare (soft, fspd_sf, fspd_inf, fspd_s, fspd_f, eigcon, logdet, oracle).
    #[arg(long, value_delimiter = ',')]
    estimators: Vec<String>,
    #[arg(long, default_value_t = DEFAULT_EPSILON)]
    epsilon: f64,
    /// Also write sweep.csv: minimum eigenvalue against the tuning parameter.
    #[arg(long)]
    sweep: bool,
    /// Also write timing.csv (wall-clock, not reproducible).
    #[arg(long)]
    timing: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Sample,
    AdapFspd,
    SoftFspd,
    SoftEigcon,
}

impl MethodArg {
    fn method(self, epsilon: f64, mu: MuChoice) -> Method {
        match self {
            MethodArg::Sample => Method::Sample,
            MethodArg::AdapFspd => Method::AdaptiveFspd { epsilon, mu },
            MethodArg::SoftFspd => Method::SoftFspd { epsilon, mu },
            MethodArg::SoftEigcon => Method::SoftEigCon { epsilon },
        }
    }
}

#[derive(Debug, Args)]
struct PortfolioArgs {
    /// Daily returns CSV (days x assets). Without it a synthetic factor
    /// series is generated from --seed.
    #[arg(long)]
    returns: Option<PathBuf>,
    #[command(flatten)]
    format: DataFlags,
    #[arg(long, default_value_t = 1500)]
    synthetic_days: usize,
    #[arg(long, default_value_t = 30)]
    synthetic_assets: usize,
    #[arg(long, default_value = "portfolio-out")]
    out_dir: PathBuf,
    /// Training window lengths in days.
    #[arg(long, value_delimiter = ',', default_values_t = [60usize, 240])]
    train: Vec<usize>,
    #[arg(long, default_value_t = portfolio::DEFAULT_HOLD)]
    hold: usize,
    #[arg(long, value_enum, value_delimiter = ',')]
    methods: Vec<MethodArg>,
    #[arg(long, default_value_t = DEFAULT_EPSILON)]
    epsilon: f64,
    #[arg(long, default_value = "sf")]
    mu: String,
    #[arg(long, default_value_t = portfolio::DEFAULT_RISK_FREE)]
    risk_free: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_FOLDS)]
    cv_folds: usize,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_INPUT } else { 0 });
        }
    };
    let outcome = match cli.command {
        Command::Repair(a) => repair(&a),
        Command::Estimate(a) => estimate(&a),
        Command::Bench(a) => bench(&a),
        Command::Portfolio(a) => run_portfolio(&a),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_INPUT)
        }
    }
}

fn require_file(path: &Path) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(Error::Io(format!("{}: no such file", path.display())))
    }
}

fn require_parent(path: &Path) -> Result<()> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() && !dir.is_dir() => {
            Err(Error::Io(format!("{}: directory does not exist", dir.display())))
        }
        _ => Ok(()),
    }
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn sidecar_path(plan: &Option<PathBuf>, output: &Path) -> PathBuf {
    plan.clone().unwrap_or_else(|| {
        let mut s = output.as_os_str().to_owned();
        s.push(".plan");
        PathBuf::from(s)
    })
}

/// Repairs `m` and writes the matrix and its plan with distances to `m`.
fn write_repaired(m: &SymmetricMatrix, epsilon: f64, mu: MuChoice, output: &Path, plan_path: &Path) -> Result<()> {
    let (fixed, plan) = fspd_apply(m, epsilon, mu)?;
    let mut extra = Vec::new();
    for kind in [NormKind::Spectral, NormKind::FrobeniusScaled, NormKind::FrobeniusUnscaled, NormKind::OperatorL1] {
        extra.push((format!("distance_{}", kind.label()), distance_to_input(&plan, m, kind)?));
    }
    io::write_matrix_csv(output, &fixed)?;
    write(plan_path, &io::plan_to_sidecar(&plan, &extra))?;
    eprintln!(
        "{}: gamma_min = {:.6e}, mu = {} ({}), alpha = {:.7}",
        if plan.repaired { "repaired" } else { "already positive definite" },
        plan.gamma_min,
        plan.mu,
        plan.mu_rule.label(),
        plan.alpha
    );
    Ok(())
}

fn repair(a: &RepairArgs) -> Result<u8> {
    require_file(&a.input)?;
    require_parent(&a.output)?;
    let plan_path = sidecar_path(&a.plan, &a.output);
    require_parent(&plan_path)?;
    let mu: MuChoice = a.mu.parse()?;
    let m = io::read_matrix_csv(&a.input)?;
    write_repaired(&m, a.epsilon, mu, &a.output, &plan_path)?;
    Ok(0)
}

fn cv_param<E: CvEstimator>(data: &DataMatrix, est: &E, grid: Vec<f64>, a: &EstimateArgs) -> Result<f64> {
    let spec = CvSpec { folds: a.cv_folds, ..CvSpec::new(grid, a.seed) };
    let best = cross_validate(data, est, &spec)?.best_param;
    eprintln!("cross-validation selected {best}");
    Ok(best)
}

fn estimate(a: &EstimateArgs) -> Result<u8> {
    require_file(&a.data)?;
    require_parent(&a.output)?;
    let repair_mu = a.repair.as_deref().map(str::parse::<MuChoice>).transpose()?;
    let data = io::read_data_csv(&a.data, a.format.options())?.data;
    let s = sample_cov(&data)?;
    let p = data.p();

    let est = match a.estimator {
        EstimatorArg::Sample => s,
        EstimatorArg::Hard | EstimatorArg::Soft | EstimatorArg::Scad => {
            let rule = match a.estimator {
                EstimatorArg::Hard => ThresholdRule::Hard,
                EstimatorArg::Scad => ThresholdRule::Scad,
                _ => ThresholdRule::Soft,
            };
            let cv = ThresholdCv { rule, ..ThresholdCv::soft() };
            let lambda = match a.lambda {
                Some(l) => l,
                None => cv_param(&data, &cv, default_lambda_grid(&s)?, a)?,
            };
            cv.estimate(&s, lambda)?
        }
        EstimatorArg::Adaptive => {
            let delta = match a.lambda {
                Some(d) => d,
                None if data.n() >= 2 * a.cv_folds => cv_param(&data, &AdaptiveCv, portfolio::adaptive_delta_grid(), a)?,
                None => DEFAULT_ADAPTIVE_DELTA,
            };
            AdaptiveCv.estimate(&data, delta)?
        }
        EstimatorArg::Banding | EstimatorArg::Tapering => {
            let cv = BandwidthCv { tapering: a.estimator == EstimatorArg::Tapering };
            let first = usize::from(cv.tapering);
            let h = match a.bandwidth {
                Some(h) => h as f64,
                None => cv_param(&data, &cv, (first..p).map(|h| h as f64).collect(), a)?,
            };
            cv.estimate(&s, h)?
        }
    };

    match repair_mu {
        Some(mu) => {
            let plan_path = sidecar_path(&a.plan, &a.output);
            require_parent(&plan_path)?;
            write_repaired(&est, a.epsilon, mu, &a.output, &plan_path)?;
        }
        None => io::write_matrix_csv(&a.output, &est)?,
    }
    Ok(0)
}

fn bench_scenarios(a: &BenchArgs) -> Result<Vec<ScenarioSpec>> {
    let reps = a.reps.unwrap_or(match a.scale {
        Scale::Desk => 20,
        Scale::Paper => 100,
    });
    let mut specs = match a.scale {
        Scale::Desk => simulation::desk_scenarios(reps, a.seed),
        Scale::Paper => simulation::paper_scenarios(reps, a.seed),
    };
    let truths: Vec<Truth> = a.truth.iter().map(|t| if *t == TruthArg::M1 { Truth::M1 } else { Truth::M2 }).collect();
    let t_dist = a.dist.contains(&DistArg::T);
    let gaussian = a.dist.contains(&DistArg::Gaussian);
    specs.retain(|s| truths.is_empty() || truths.contains(&s.truth));
    specs.retain(|s| {
        a.dist.is_empty()
            || match s.distribution {
                SampleDistribution::Gaussian => gaussian,
                SampleDistribution::StudentT { .. } => t_dist,
            }
    });
    let estimators = a.estimators.iter().map(|e| EstimatorKind::parse(e.trim())).collect::<Result<Vec<_>>>()?;

    // Dimension overrides replace the grid axis while keeping per-scenario seeds distinct.
    let mut out = Vec::new();
    let mut seen = Vec::new();
    for s in specs {
        let ns = if a.n.is_empty() { vec![s.n] } else { a.n.clone() };
        let ps = if a.p.is_empty() { vec![s.p] } else { a.p.clone() };
        for &n in &ns {
            for &p in &ps {
                let key = (s.truth, s.distribution.label(), n, p);
                if seen.contains(&key) {
                    continue;
                }
                seen.push(key);
                let mut spec = ScenarioSpec {
                    n,
                    p,
                    cv_folds: a.cv_folds,
                    epsilon: a.epsilon,
                    rng_seed: s.rng_seed.wrapping_add(1_000 * n as u64 + p as u64),
                    ..s.clone()
                };
                if !estimators.is_empty() {
                    spec.estimators = estimators.clone();
                }
                spec.validate()?;
                out.push(spec);
            }
        }
    }
    if out.is_empty() {
        return Err(Error::Config("the filters leave no scenario to run".into()));
    }
    Ok(out)
}

fn bench(a: &BenchArgs) -> Result<u8> {
    let specs = bench_scenarios(a)?;
    fs::create_dir_all(&a.out_dir).map_err(|e| Error::Io(format!("{}: {e}", a.out_dir.display())))?;
    let mut reports = Vec::new();
    for spec in &specs {
        eprintln!("running {}", spec.describe());
        reports.push(simulation::run_scenario(spec)?);
    }
    write(&a.out_dir.join("report.csv"), &simulation::report_csv(&reports))?;
    let table = simulation::report_table(&reports);
    write(&a.out_dir.join("report.txt"), &table)?;
    print!("{table}");
    if a.timing {
        write(&a.out_dir.join("timing.csv"), &simulation::timing_csv(&reports))?;
    }
    if a.sweep {
        let p = match (a.p.first(), a.scale) {
            (Some(&p), _) => p,
            (None, Scale::Desk) => 100,
            (None, Scale::Paper) => 400,
        };
        let points = simulation::min_eigenvalue_sweep(
            Truth::M1,
            SampleDistribution::StudentT { df: STUDENT_T_DF },
            100,
            p,
            a.seed,
            100,
        )?;
        write(&a.out_dir.join("sweep.csv"), &simulation::sweep_csv(&points))?;
    }
    if reports.iter().any(|r| r.any_nonconverged()) {
        eprintln!("warning: some baseline fits hit the iteration limit");
        return Ok(EXIT_NONCONVERGED);
    }
    Ok(0)
}

fn run_portfolio(a: &PortfolioArgs) -> Result<u8> {
    let returns = match &a.returns {
        Some(path) => {
            require_file(path)?;
            io::read_data_csv(path, a.format.options())?.data
        }
        None => portfolio::synthetic_factor_returns(a.synthetic_days, a.synthetic_assets, a.seed)?,
    };
    if a.train.is_empty() {
        return Err(Error::Config("no training window given".into()));
    }
    let mu: MuChoice = a.mu.parse()?;
    let methods: Vec<Method> = if a.methods.is_empty() {
        vec![MethodArg::Sample, MethodArg::AdapFspd, MethodArg::SoftFspd, MethodArg::SoftEigcon]
    } else {
        a.methods.clone()
    }
    .into_iter()
    .map(|m| m.method(a.epsilon, mu))
    .collect();
    fs::create_dir_all(&a.out_dir).map_err(|e| Error::Io(format!("{}: {e}", a.out_dir.display())))?;

    // Every window is evaluated over the same holding days.
    let start = *a.train.iter().max().expect("non-empty");
    let mut reports = Vec::new();
    for &train in &a.train {
        for &method in &methods {
            let spec = BacktestSpec {
                hold_window: a.hold,
                start,
                risk_free_rate: a.risk_free,
                cv_folds: a.cv_folds,
                rng_seed: a.seed,
                ..BacktestSpec::new(train, method)
            };
            let report = portfolio::backtest(&returns, &spec)?;
            for p in report.periods.iter().filter(|p| p.error.is_some()) {
                eprintln!(
                    "warning: {} (train {train}) skipped period at day {}: {}",
                    method.label(),
                    p.first_day,
                    p.error.as_deref().unwrap_or("")
                );
            }
            reports.push(report);
        }
    }
    write(&a.out_dir.join("portfolio.csv"), &portfolio::backtest_csv(&reports))?;
    let table = portfolio::backtest_table(&reports);
    write(&a.out_dir.join("portfolio.txt"), &table)?;
    print!("{table}");
    if a.returns.is_none() {
        let table = DataTable { data: returns, header: None, dates: None };
        write(&a.out_dir.join("returns.csv"), &io::data_to_csv(&table))?;
    }
    Ok(if reports.iter().any(|r| r.skipped() > 0) { EXIT_NONCONVERGED } else { 0 })
}
