//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each
//! and exits non-zero if any failed.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use pdcov::baselines::{
    eig_constraint_estimator, logdet_barrier_estimator, project_eigen_floor, AdmmConfig, BarrierConfig,
};
use pdcov::fspd::{fspd_apply, MuChoice};
use pdcov::linalg::{eigenvalues, Cholesky, SymmetricMatrix};
use pdcov::portfolio::{mvp_no_short, mvp_simple, Performance};
use pdcov::regularizers::sample_cov;
use pdcov::selection::{cross_validate, default_lambda_grid, CvEstimator, CvSpec, ThresholdCv};
use pdcov::simulation::{self, run_scenario, EstimatorKind, SampleDistribution, ScenarioSpec, Truth};

const EPS: f64 = 1e-2;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn random_symmetric(rng: &mut impl Rng, p: usize, density: f64) -> SymmetricMatrix {
    SymmetricMatrix::from_fn(p, |i, j| {
        if i == j {
            rng.random_range(-0.5..1.5)
        } else if rng.random::<f64>() < density {
            rng.random_range(-1.0..1.0)
        } else {
            0.0
        }
    })
    .unwrap()
}

fn spectral_norm(m: &SymmetricMatrix) -> f64 {
    let e = eigenvalues(m).unwrap();
    e[0].abs().max(e[e.len() - 1].abs())
}

fn scaled_frobenius(m: &SymmetricMatrix) -> f64 {
    (m.as_slice().iter().map(|v| v * v).sum::<f64>() / m.dim() as f64).sqrt()
}

/// Smallest scaled-Frobenius distance reachable by linear shrinkage:
/// `(eps - g1) sqrt(sum (g - mean)^2 / sum (g - g1)^2)`.
fn frobenius_floor(eigs: &[f64], eps: f64) -> f64 {
    let g1 = eigs[0];
    let mean = eigs.iter().sum::<f64>() / eigs.len() as f64;
    let num: f64 = eigs.iter().map(|g| (g - mean).powi(2)).sum();
    let den: f64 = eigs.iter().map(|g| (g - g1).powi(2)).sum();
    (eps - g1) * (num / den).sqrt()
}

fn fspd_correctness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = [0.0_f64; 4]; // floor deficit, spectral gap, frobenius gap, support failures
    let mut full_shrinkage = 0; // support failures where the target clamps to eps and alpha* = 0
    for k in 0..500 {
        let p = rng.random_range(5..=200);
        let density = if k % 2 == 0 { 1.0 } else { 0.15 };
        let m = loop {
            let m = random_symmetric(&mut rng, p, density);
            if eigenvalues(&m).unwrap()[0] < 0.0 {
                break m;
            }
        };
        let eigs = eigenvalues(&m).unwrap();
        let lift = EPS - eigs[0];
        for mu in [MuChoice::Spectral, MuChoice::SpectralFrobenius, MuChoice::Infinite, MuChoice::Frobenius] {
            let (out, plan) = fspd_apply(&m, EPS, mu).unwrap();
            let min = eigenvalues(&out).unwrap()[0];
            worst[0] = worst[0].max(EPS - 1e-8 - min);
            if !out.same_off_diagonal_support(&m) {
                worst[3] += 1.0;
                if plan.alpha == 0.0 && plan.mu == EPS {
                    full_shrinkage += 1;
                }
            }
            let diff = out.sub(&m).unwrap();
            if mu == MuChoice::Frobenius {
                worst[2] = worst[2].max((scaled_frobenius(&diff) - frobenius_floor(&eigs, EPS)).abs());
            } else {
                worst[1] = worst[1].max((spectral_norm(&diff) - lift).abs());
            }
        }
    }
    let pass = worst[0] <= 0.0 && worst[1] <= 1e-9 && worst[2] <= 1e-9 && worst[3] == 0.0;
    outcome(
        pass,
        format!(
            "500 matrices: floor deficit {:.1e}, spectral gap {:.1e}, frobenius gap {:.1e}, \
             support mismatches {} ({full_shrinkage} with mu = eps, alpha* = 0)",
            worst[0].max(0.0),
            worst[1],
            worst[2],
            worst[3]
        ),
    )
}

/// Spectral and scaled-Frobenius distance of `alpha S + (1 - alpha) mu I` to `S`.
fn shrink_distances(eigs: &[f64], mu: f64, alpha: f64) -> (f64, f64) {
    let spec = eigs.iter().map(|g| (mu - g).abs()).fold(0.0, f64::max);
    let frob = (eigs.iter().map(|g| (mu - g).powi(2)).sum::<f64>() / eigs.len() as f64).sqrt();
    ((1.0 - alpha) * spec, (1.0 - alpha) * frob)
}

fn optimality_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut worst_gain = f64::NEG_INFINITY;
    let mut worst_mu_f = 0.0_f64;
    let mut offset_free_hits = 0;
    for _ in 0..50 {
        let m = loop {
            let m = random_symmetric(&mut rng, 5, 1.0);
            if eigenvalues(&m).unwrap()[0] < 0.0 {
                break m;
            }
        };
        let eigs = eigenvalues(&m).unwrap();
        let (s_out, _) = fspd_apply(&m, EPS, MuChoice::Spectral).unwrap();
        let (f_out, f_plan) = fspd_apply(&m, EPS, MuChoice::Frobenius).unwrap();
        let best_spec = spectral_norm(&s_out.sub(&m).unwrap());
        let best_frob = scaled_frobenius(&f_out.sub(&m).unwrap());

        // 2-D grid over mu in (eps, 100] (log spaced) and alpha in [0, 1].
        let (mut grid_spec, mut grid_frob) = (f64::INFINITY, f64::INFINITY);
        for a in 1..=1000 {
            let mu = EPS * (100.0 / EPS).powf(a as f64 / 1000.0);
            for b in 0..=1000 {
                let alpha = b as f64 / 1000.0;
                if alpha * eigs[0] + (1.0 - alpha) * mu < EPS {
                    continue;
                }
                let (s, f) = shrink_distances(&eigs, mu, alpha);
                grid_spec = grid_spec.min(s);
                grid_frob = grid_frob.min(f);
            }
        }
        worst_gain = worst_gain.max(best_spec - grid_spec).max(best_frob - grid_frob);

        // 1-D grid over mu at alpha*(mu).
        let g1 = eigs[0];
        let (mut arg, mut val) = (f64::NAN, f64::INFINITY);
        let steps = ((100.0 - EPS) / 1e-4) as usize;
        for k in 1..=steps {
            let mu = EPS + k as f64 * 1e-4;
            let alpha = 1.0 - (EPS - g1) / (mu - g1);
            let f = shrink_distances(&eigs, mu, alpha).1;
            if f < val {
                val = f;
                arg = mu;
            }
        }
        let t: Vec<f64> = eigs.iter().map(|g| g - g1).collect();
        let ratio = t.iter().map(|v| v * v).sum::<f64>() / t.iter().sum::<f64>();
        let with_offset = (g1 + ratio).max(EPS);
        worst_mu_f = worst_mu_f.max((arg - with_offset).abs()).max((f_plan.mu - with_offset).abs());
        if (arg - ratio.max(EPS)).abs() <= 2e-4 {
            offset_free_hits += 1;
        }
    }
    let pass = worst_gain <= 1e-3 && worst_mu_f <= 2e-4 && offset_free_hits == 0;
    outcome(
        pass,
        format!(
            "50 instances: best grid gain {worst_gain:.1e}, mu_F vs 1-D argmin {worst_mu_f:.1e}, \
             offset-free form matched {offset_free_hits}/50"
        ),
    )
}

fn spectral_risk_inequality() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let mut violations = 0;
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..500 {
        let p = rng.random_range(5..=60);
        let a: Vec<f64> = (0..p * p).map(|_| rng.random_range(-1.0..1.0)).collect();
        let floor = EPS + rng.random_range(0.01..0.5);
        let truth = SymmetricMatrix::from_fn(p, |i, j| {
            (0..p).map(|k| a[i * p + k] * a[j * p + k]).sum::<f64>() / p as f64 + if i == j { floor } else { 0.0 }
        })
        .unwrap();
        assert!(eigenvalues(&truth).unwrap()[0] > EPS);
        let noise = rng.random_range(0.05..0.6);
        let est = truth.map_entries(|_, _, v| v + noise * rng.random_range(-1.0..1.0)).unwrap();
        let base = spectral_norm(&est.sub(&truth).unwrap());
        let mu_sf = match fspd_apply(&est, EPS, MuChoice::SpectralFrobenius).unwrap().1.mu {
            mu if mu.is_finite() => mu,
            _ => EPS,
        };
        for mu in [MuChoice::SpectralFrobenius, MuChoice::Infinite, MuChoice::Explicit(mu_sf + 1.0)] {
            let (out, _) = fspd_apply(&est, EPS, mu).unwrap();
            let d = spectral_norm(&out.sub(&truth).unwrap());
            worst = worst.max(d - 2.0 * base);
            if d > 2.0 * base + 1e-9 {
                violations += 1;
            }
        }
    }
    outcome(violations == 0, format!("500 pairs x 3 targets: {violations} violations, max excess {worst:.2e}"))
}

fn pd_fraction(p: usize, seed: u64) -> f64 {
    let spec = ScenarioSpec {
        estimators: vec![EstimatorKind::Initial],
        rng_seed: seed,
        ..ScenarioSpec::new(Truth::M1, SampleDistribution::Gaussian, 100, p, 20)
    };
    let rep = run_scenario(&spec).unwrap();
    let s = &rep.summaries[0];
    assert_eq!(s.failures, 0, "{:?}", s.errors);
    s.pd_count as f64 / 20.0
}

fn census() -> Outcome {
    let f100 = pd_fraction(100, 100);
    let f200 = pd_fraction(200, 200);
    outcome(f100 <= 0.5 && f200 <= 0.25, format!("PD fraction p=100: {f100:.2} (<= 0.5), p=200: {f200:.2} (<= 0.25)"))
}

fn risk_comparability() -> Outcome {
    let spec = ScenarioSpec {
        rng_seed: 5,
        estimators: vec![
            EstimatorKind::Initial,
            EstimatorKind::Fspd(MuChoice::SpectralFrobenius),
            EstimatorKind::Fspd(MuChoice::Infinite),
            EstimatorKind::EigCon,
        ],
        ..ScenarioSpec::new(Truth::M1, SampleDistribution::Gaussian, 100, 100, 20)
    };
    let rep = run_scenario(&spec).unwrap();
    let soft = rep.summary(EstimatorKind::Initial).unwrap();
    let mut worst = (0.0_f64, String::new());
    let mut failures = 0;
    for s in &rep.summaries[1..] {
        failures += s.failures;
        for norm in ["matrix_l1", "spectral", "frobenius"] {
            let rel = (s.metric(norm).mean / soft.metric(norm).mean - 1.0).abs();
            if rel > worst.0 {
                worst = (rel, format!("{} {norm}", s.estimator.label()));
            }
        }
    }
    outcome(
        worst.0 <= 0.10 && failures == 0,
        format!("max relative risk difference {:.2}% ({}), {failures} failed fits", 100.0 * worst.0, worst.1),
    )
}

fn median(mut v: Vec<Duration>) -> Duration {
    v.sort();
    v[v.len() / 2]
}

fn timing_separation() -> Outcome {
    let truth = simulation::make_m1(200);
    let data = simulation::sample_gaussian(&truth, 100, 11).unwrap();
    let s = sample_cov(&data).unwrap();
    let lambda = cross_validate(&data, &ThresholdCv::soft(), &CvSpec::new(default_lambda_grid(&s).unwrap(), 1))
        .unwrap()
        .best_param;
    let init = ThresholdCv::soft().estimate(&s, lambda).unwrap();
    let fspd = median(
        (0..7)
            .map(|_| {
                let t = Instant::now();
                fspd_apply(&init, EPS, MuChoice::SpectralFrobenius).unwrap();
                t.elapsed()
            })
            .collect(),
    );
    let mut converged = true;
    let admm = median(
        (0..3)
            .map(|_| {
                let t = Instant::now();
                let out = eig_constraint_estimator(&s, &AdmmConfig::new(lambda, EPS)).unwrap();
                converged &= out.converged;
                t.elapsed()
            })
            .collect(),
    );
    let ratio = admm.as_secs_f64() / fspd.as_secs_f64();
    outcome(
        ratio >= 10.0 && converged,
        format!("p=200: FSPD {:.2} ms, ADMM {:.1} ms, ratio {ratio:.0}x (ADMM converged: {converged})",
            1e3 * fspd.as_secs_f64(), 1e3 * admm.as_secs_f64()),
    )
}

fn baseline_validity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst_admm = 0.0_f64;
    for _ in 0..20 {
        let p = rng.random_range(3..=30);
        let m = random_symmetric(&mut rng, p, 1.0);
        let out = eig_constraint_estimator(&m, &AdmmConfig::new(0.0, EPS)).unwrap();
        let clamp = project_eigen_floor(&m, EPS).unwrap();
        worst_admm = worst_admm.max(out.estimate.max_abs_diff(&clamp));
    }
    let tau = 1e-2;
    let out = logdet_barrier_estimator(&SymmetricMatrix::identity(4), &BarrierConfig::new(0.0, tau)).unwrap();
    let c = (1.0 + (1.0 + 2.0 * tau).sqrt()) / 2.0;
    let barrier_err = out.estimate.max_abs_diff(&SymmetricMatrix::diagonal(&[c; 4]).unwrap());
    outcome(
        worst_admm <= 1e-6 && barrier_err <= 1e-6,
        format!("ADMM vs eigen clamp {worst_admm:.1e}, barrier vs c = {c:.7}: {barrier_err:.1e}"),
    )
}

fn enumerate_active_sets(sigma: &SymmetricMatrix) -> Vec<f64> {
    let p = sigma.dim();
    let mut best = (Vec::new(), f64::INFINITY);
    for mask in 1u32..(1 << p) {
        let support: Vec<usize> = (0..p).filter(|&i| mask & (1 << i) != 0).collect();
        let sub = SymmetricMatrix::from_fn(support.len(), |a, b| sigma.get(support[a], support[b])).unwrap();
        let x = Cholesky::factor(&sub).unwrap().solve(&vec![1.0; support.len()]);
        let total: f64 = x.iter().sum();
        if x.iter().any(|v| v / total < 0.0) {
            continue;
        }
        let mut w = vec![0.0; p];
        support.iter().zip(&x).for_each(|(&i, v)| w[i] = v / total);
        let f = sigma.quadratic_form(&w);
        if f < best.1 {
            best = (w, f);
        }
    }
    best.0
}

fn portfolio_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(55);
    let (mut worst_w, mut worst_sum, mut worst_neg, mut worst_obj) = (0.0_f64, 0.0_f64, 0.0_f64, f64::NEG_INFINITY);
    for _ in 0..100 {
        let p = rng.random_range(2..=6);
        let a: Vec<f64> = (0..p * p).map(|_| rng.random_range(-1.0..1.0)).collect();
        let shift = rng.random_range(0.01..0.5);
        let sigma = SymmetricMatrix::from_fn(p, |i, j| {
            (0..p).map(|k| a[i * p + k] * a[j * p + k]).sum::<f64>() + if i == j { shift } else { 0.0 }
        })
        .unwrap();
        let ns = mvp_no_short(&sigma, 1e-10).unwrap();
        let simple = mvp_simple(&sigma).unwrap();
        let oracle = enumerate_active_sets(&sigma);
        worst_w = ns.weights.iter().zip(&oracle).map(|(x, y)| (x - y).abs()).fold(worst_w, f64::max);
        worst_sum = worst_sum.max((ns.weights.iter().sum::<f64>() - 1.0).abs());
        worst_neg = ns.weights.iter().fold(worst_neg, |m, &w| m.max(-w));
        worst_obj = worst_obj.max(simple.objective - ns.objective);
    }
    let sharpe = Performance::from_daily_moments(0.001, 0.01, 60, 0.05).sharpe.unwrap();
    let pass = worst_w <= 1e-7 && worst_sum <= 1e-10 && worst_neg <= 1e-10 && worst_obj <= 1e-10
        && (sharpe - 1.2725).abs() <= 1e-4;
    outcome(
        pass,
        format!(
            "100 instances: weights vs enumeration {worst_w:.1e}, |sum-1| {worst_sum:.1e}, \
             min weight {:.1e}, simple - no-short objective {worst_obj:.1e}; Sharpe {sharpe:.4}",
            -worst_neg
        ),
    )
}

fn run_cli(args: &[&str], dir: &Path) -> bool {
    Command::new(env!("CARGO_BIN_EXE_pdcov"))
        .args(args)
        .arg("--out-dir")
        .arg(dir)
        .output()
        .map(|o| o.status.code() == Some(0))
        .unwrap_or(false)
}

fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let mut same = Vec::new();
    for (name, args, files) in [
        ("bench", vec!["bench", "--scale", "desk", "--seed", "7"], ["report.csv", "report.txt"]),
        ("portfolio", vec!["portfolio", "--seed", "7"], ["portfolio.csv", "portfolio.txt"]),
    ] {
        let (a, b) = (tmp.path().join(format!("{name}_a")), tmp.path().join(format!("{name}_b")));
        if !run_cli(&args, &a) || !run_cli(&args, &b) {
            return outcome(false, format!("{name} did not exit cleanly"));
        }
        for f in files {
            let same_bytes = std::fs::read(a.join(f)).unwrap() == std::fs::read(b.join(f)).unwrap();
            same.push((format!("{name}/{f}"), same_bytes));
        }
    }
    let differing: Vec<&str> = same.iter().filter(|(_, s)| !s).map(|(n, _)| n.as_str()).collect();
    outcome(
        differing.is_empty(),
        if differing.is_empty() {
            format!("{} report files byte-identical across two runs", same.len())
        } else {
            format!("differing: {}", differing.join(", "))
        },
    )
}

fn main() {
    // `cargo test` passes harness flags such as --list; only run on a plain invocation.
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    let criteria: [(&str, fn() -> Outcome, Duration); 9] = [
        ("FSPD correctness", fspd_correctness, Duration::from_secs(60)),
        ("optimality oracle", optimality_oracle, Duration::from_secs(120)),
        ("spectral risk inequality", spectral_risk_inequality, Duration::MAX),
        ("non-PD census", census, Duration::from_secs(600)),
        ("risk comparability", risk_comparability, Duration::MAX),
        ("timing separation", timing_separation, Duration::MAX),
        ("baseline validity", baseline_validity, Duration::MAX),
        ("portfolio", portfolio_suite, Duration::MAX),
        ("determinism", determinism, Duration::MAX),
    ];
    let mut failed = 0;
    for (k, (name, check, budget)) in criteria.iter().enumerate() {
        let started = Instant::now();
        let mut result = check();
        let elapsed = started.elapsed();
        if elapsed > *budget {
            result.pass = false;
            result.detail.push_str(&format!("; over time budget of {}s", budget.as_secs()));
        }
        failed += usize::from(!result.pass);
        println!(
            "{} [{}] {name}: {} ({:.1}s)",
            if result.pass { "PASS" } else { "FAIL" },
            k + 1,
            result.detail,
            elapsed.as_secs_f64()
        );
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
