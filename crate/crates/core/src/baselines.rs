//! Optimization-based positive-definite sparse covariance estimators, used
//! as comparison baselines for the shrinkage repair.
//!
//! Both minimize the soft-thresholding objective
//!
//! ```text
//! ||Sigma - S||_F^2 + 2 lambda sum_{i != j} |sigma_ij|
//! ```
//!
//! (unscaled Frobenius norm, diagonal unpenalized), whose unconstrained
//! minimizer is exactly the soft-threshold estimator at `lambda`. The
//! eigenvalue-constraint estimator adds `Sigma >= epsilon I` and is solved by
//! ADMM; the log-det estimator adds the barrier `-tau log det Sigma` and is
//! solved by proximal gradient with backtracking.

use crate::error::{Error, Result};
use crate::fspd::DEFAULT_EPSILON;
use crate::linalg::{full_eigen, min_eigenvalue, Cholesky, SymmetricMatrix};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdmmConfig {
    pub lambda: f64,
    pub epsilon: f64,
    pub rho: f64,
    pub rel_tol: f64,
    pub max_iter: usize,
}

impl Default for AdmmConfig {
    fn default() -> Self {
        Self { lambda: 0.0, epsilon: DEFAULT_EPSILON, rho: 2.0, rel_tol: 1e-7, max_iter: 5000 }
    }
}

impl AdmmConfig {
    pub fn new(lambda: f64, epsilon: f64) -> Self {
        Self { lambda, epsilon, ..Self::default() }
    }

    fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0) {
            return Err(Error::Config(format!("lambda must be nonnegative, got {}", self.lambda)));
        }
        if !(self.rho > 0.0) || !(self.rel_tol > 0.0) {
            return Err(Error::Config("rho and rel_tol must be positive".into()));
        }
        if !self.epsilon.is_finite() {
            return Err(Error::Config("epsilon must be finite".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BarrierConfig {
    pub lambda: f64,
    pub tau: f64,
    /// Initial trial step of the backtracking line search.
    pub initial_step: f64,
    /// Step shrink factor on a rejected trial point.
    pub backtrack: f64,
    pub rel_tol: f64,
    pub max_iter: usize,
}

impl Default for BarrierConfig {
    fn default() -> Self {
        Self { lambda: 0.0, tau: 1e-2, initial_step: 0.5, backtrack: 0.5, rel_tol: 1e-7, max_iter: 5000 }
    }
}

impl BarrierConfig {
    pub fn new(lambda: f64, tau: f64) -> Self {
        Self { lambda, tau, ..Self::default() }
    }

    fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0) {
            return Err(Error::Config(format!("lambda must be nonnegative, got {}", self.lambda)));
        }
        if !(self.tau > 0.0) {
            return Err(Error::Config(format!("tau must be positive, got {}", self.tau)));
        }
        if !(self.initial_step > 0.0) || !(self.backtrack > 0.0 && self.backtrack < 1.0) || !(self.rel_tol > 0.0) {
            return Err(Error::Config("invalid step or tolerance settings".into()));
        }
        Ok(())
    }
}

/// Result of an iterative baseline solve. Non-convergence is reported, not
/// hidden: `converged == false` means `max_iter` was hit.
#[derive(Debug, Clone)]
pub struct SolverOutput {
    pub estimate: SymmetricMatrix,
    pub iterations: usize,
    pub converged: bool,
    pub objective: f64,
    pub min_eigenvalue: f64,
    /// ADMM: `||Sigma - Theta||_F`; barrier: last relative step.
    pub primal_residual: f64,
    /// ADMM: `rho ||Theta_k - Theta_{k-1}||_F`; barrier: proximal-gradient
    /// mapping norm at the returned point.
    pub dual_residual: f64,
}

/// `||Sigma - S||_F^2 + 2 lambda sum_{i != j} |sigma_ij|`.
pub fn penalized_objective(sigma: &SymmetricMatrix, s: &SymmetricMatrix, lambda: f64) -> f64 {
    let p = s.dim();
    let mut fit = 0.0;
    let mut pen = 0.0;
    for i in 0..p {
        for j in 0..p {
            let d = sigma.get(i, j) - s.get(i, j);
            fit += d * d;
            if i != j {
                pen += sigma.get(i, j).abs();
            }
        }
    }
    fit + 2.0 * lambda * pen
}

/// Penalized objective plus `-tau log det Sigma`; `+inf` outside the PD cone.
pub fn barrier_objective(sigma: &SymmetricMatrix, s: &SymmetricMatrix, lambda: f64, tau: f64) -> f64 {
    match log_det(sigma) {
        Some(ld) => penalized_objective(sigma, s, lambda) - tau * ld,
        None => f64::INFINITY,
    }
}

fn log_det(sigma: &SymmetricMatrix) -> Option<f64> {
    let c = Cholesky::factor(sigma).ok()?;
    Some((0..sigma.dim()).map(|i| 2.0 * c.get(i, i).ln()).sum())
}

fn soft(x: f64, t: f64) -> f64 {
    if x > t {
        x - t
    } else if x < -t {
        x + t
    } else {
        0.0
    }
}

fn frob(m: &SymmetricMatrix) -> f64 {
    m.trace_of_square().sqrt()
}

fn frob_diff(a: &SymmetricMatrix, b: &SymmetricMatrix) -> f64 {
    a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Euclidean projection onto `{X : X >= epsilon I}` by eigenvalue clamping.
pub fn project_eigen_floor(m: &SymmetricMatrix, epsilon: f64) -> Result<SymmetricMatrix> {
    let eig = full_eigen(m)?;
    if eig.values[0] >= epsilon {
        return Ok(m.clone());
    }
    eig.reconstruct_with(|v| v.max(epsilon))
}

/// Eigenvalue-constraint estimator by ADMM on the splitting `Sigma = Theta`,
/// `Theta >= epsilon I`:
///
/// * `Sigma`: entrywise soft threshold of `(2S + rho(Theta - U)) / (2 + rho)`
///   at `2 lambda / (2 + rho)`, diagonal untouched;
/// * `Theta`: eigenvalue clamp of `Sigma + U` at `epsilon`;
/// * `U += Sigma - Theta`.
///
/// Stops when both the primal residual and the dual residual fall below
/// `rel_tol * ||Sigma||_F`. Returns the sparse iterate `Sigma`.
pub fn eig_constraint_estimator(s: &SymmetricMatrix, cfg: &AdmmConfig) -> Result<SolverOutput> {
    cfg.validate()?;
    let p = s.dim();
    let rho = cfg.rho;
    let thr = 2.0 * cfg.lambda / (2.0 + rho);

    let mut sigma = s.clone();
    let mut theta = project_eigen_floor(s, cfg.epsilon)?;
    let mut u = SymmetricMatrix::zeros(p);
    let mut iterations = 0;
    let mut converged = false;
    let mut primal = f64::INFINITY;
    let mut dual = f64::INFINITY;

    while iterations < cfg.max_iter {
        iterations += 1;
        sigma = SymmetricMatrix::from_fn(p, |i, j| {
            let z = (2.0 * s.get(i, j) + rho * (theta.get(i, j) - u.get(i, j))) / (2.0 + rho);
            if i == j {
                z
            } else {
                soft(z, thr)
            }
        })?;
        let shifted = sigma.add(&u)?;
        let theta_next = project_eigen_floor(&shifted, cfg.epsilon)?;
        u = shifted.sub(&theta_next)?;
        primal = frob_diff(&sigma, &theta_next);
        dual = rho * frob_diff(&theta_next, &theta);
        theta = theta_next;

        let scale = frob(&sigma).max(f64::MIN_POSITIVE);
        if primal <= cfg.rel_tol * scale && dual <= cfg.rel_tol * scale {
            converged = true;
            break;
        }
    }

    Ok(SolverOutput {
        objective: penalized_objective(&sigma, s, cfg.lambda),
        min_eigenvalue: min_eigenvalue(&sigma)?,
        estimate: sigma,
        iterations,
        converged,
        primal_residual: primal,
        dual_residual: dual,
    })
}

/// Log-determinant barrier estimator by proximal gradient.
///
/// Smooth part `||Sigma - S||_F^2 - tau log det Sigma` with gradient
/// `2(Sigma - S) - tau Sigma^{-1}`; the prox of the off-diagonal l1 penalty is
/// entrywise soft thresholding at `2 lambda t`. Trial points that are not PD
/// or fail the sufficient-decrease test halve the step. Starts from
/// `diag(S) + 0.01 I` and stops when the relative change of the iterate drops
/// below `rel_tol`.
pub fn logdet_barrier_estimator(s: &SymmetricMatrix, cfg: &BarrierConfig) -> Result<SolverOutput> {
    cfg.validate()?;
    let p = s.dim();
    let smooth = |x: &SymmetricMatrix| -> Option<f64> {
        let ld = log_det(x)?;
        let fit: f64 = x.as_slice().iter().zip(s.as_slice()).map(|(a, b)| (a - b) * (a - b)).sum();
        Some(fit - cfg.tau * ld)
    };
    let gradient = |x: &SymmetricMatrix| -> Result<SymmetricMatrix> {
        let inv = Cholesky::factor(x)?.inverse()?;
        SymmetricMatrix::from_fn(p, |i, j| 2.0 * (x.get(i, j) - s.get(i, j)) - cfg.tau * inv.get(i, j))
    };
    let prox = |y: &SymmetricMatrix, t: f64| -> Result<SymmetricMatrix> {
        y.map_entries(|i, j, v| if i == j { v } else { soft(v, 2.0 * cfg.lambda * t) })
    };

    let mut x = SymmetricMatrix::diagonal(&s.diag().iter().map(|d| d.max(0.0) + DEFAULT_EPSILON).collect::<Vec<_>>())?;
    let mut fx = smooth(&x).ok_or(Error::NotPositiveDefinite { min_eigenvalue: f64::NAN })?;
    let mut step = cfg.initial_step;
    let mut iterations = 0;
    let mut converged = false;
    let mut rel_change = f64::INFINITY;

    while iterations < cfg.max_iter {
        iterations += 1;
        let g = gradient(&x)?;
        // Let the step grow back after a run of easy iterations.
        step = (step / cfg.backtrack).min(cfg.initial_step * 4.0);
        let (z, fz) = loop {
            let y = SymmetricMatrix::from_fn(p, |i, j| x.get(i, j) - step * g.get(i, j))?;
            let z = prox(&y, step)?;
            if let Some(fz) = smooth(&z) {
                let mut lin = 0.0;
                let mut quad = 0.0;
                for ((zi, xi), gi) in z.as_slice().iter().zip(x.as_slice()).zip(g.as_slice()) {
                    let d = zi - xi;
                    lin += gi * d;
                    quad += d * d;
                }
                if fz <= fx + lin + quad / (2.0 * step) + 1e-15 * fx.abs() {
                    break (z, fz);
                }
            }
            step *= cfg.backtrack;
            if step < 1e-20 {
                return Err(Error::Config("barrier line search collapsed".into()));
            }
        };
        rel_change = frob_diff(&z, &x) / frob(&x).max(f64::MIN_POSITIVE);
        x = z;
        fx = fz;
        if rel_change < cfg.rel_tol {
            converged = true;
            break;
        }
    }

    let g = gradient(&x)?;
    let t = step;
    let y = SymmetricMatrix::from_fn(p, |i, j| x.get(i, j) - t * g.get(i, j))?;
    let mapping = frob_diff(&x, &prox(&y, t)?) / t;

    Ok(SolverOutput {
        objective: barrier_objective(&x, s, cfg.lambda, cfg.tau),
        min_eigenvalue: min_eigenvalue(&x)?,
        estimate: x,
        iterations,
        converged,
        primal_residual: rel_change,
        dual_residual: mapping,
    })
}
