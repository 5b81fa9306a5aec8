//! Extreme eigenvalues by restarted Lanczos with full reorthogonalization.
//!
//! The smallest eigenvalue of `A` is obtained as the largest eigenvalue of
//! `cI - A`, where `c` is the Gershgorin upper bound, so no factorization is
//! needed. Converged Ritz vectors are re-evaluated as a Rayleigh quotient on
//! `A` itself to avoid the cancellation in `c - theta`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::eigen::{eigenvalues, tridiagonal_eigen};
use super::SymmetricMatrix;
use crate::error::Result;

/// Matrices at or below this size go straight to the dense solver.
pub const DENSE_FALLBACK_DIM: usize = 64;
const KRYLOV_CAP: usize = 100;
const MAX_RESTARTS: usize = 5;
/// Residual tolerance relative to the Gershgorin scale of the matrix.
const RESIDUAL_TOL: f64 = 1e-12;
const START_SEED: u64 = 0x5eed_1a2c;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Which {
    Smallest,
    Largest,
    Both,
}

/// Extreme eigenvalue(s) as `(smallest, largest)`; the side that was not
/// requested is `None`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extremes {
    pub smallest: Option<f64>,
    pub largest: Option<f64>,
}

pub fn extreme_eigen(m: &SymmetricMatrix, which: Which) -> Result<Extremes> {
    let want_small = matches!(which, Which::Smallest | Which::Both);
    let want_large = matches!(which, Which::Largest | Which::Both);

    if m.dim() <= DENSE_FALLBACK_DIM {
        return dense_extremes(m, want_small, want_large);
    }

    let (lo, hi) = m.gershgorin_bounds();
    let scale = lo.abs().max(hi.abs()).max(f64::MIN_POSITIVE);

    let largest = if want_large {
        match lanczos_top(m, 0.0, 1.0, scale) {
            Some(v) => Some(v),
            None => return dense_extremes(m, want_small, want_large),
        }
    } else {
        None
    };
    let smallest = if want_small {
        match lanczos_top(m, hi, -1.0, scale) {
            Some(v) => Some(v),
            None => return dense_extremes(m, want_small, want_large),
        }
    } else {
        None
    };
    Ok(Extremes { smallest, largest })
}

fn dense_extremes(m: &SymmetricMatrix, want_small: bool, want_large: bool) -> Result<Extremes> {
    let vals = eigenvalues(m)?;
    Ok(Extremes {
        smallest: want_small.then(|| vals[0]),
        largest: want_large.then(|| vals[vals.len() - 1]),
    })
}

/// Largest eigenvalue of `shift * I + sign * A`, mapped back to the matching
/// eigenvalue of `A` via the Rayleigh quotient of the converged Ritz vector.
/// Returns `None` when no restart reaches the residual tolerance.
fn lanczos_top(a: &SymmetricMatrix, shift: f64, sign: f64, scale: f64) -> Option<f64> {
    let p = a.dim();
    let k_max = p.min(KRYLOV_CAP);
    let tol = RESIDUAL_TOL * scale;
    let apply = |x: &[f64], y: &mut [f64]| {
        a.mul_vec(x, y);
        for (yi, xi) in y.iter_mut().zip(x) {
            *yi = shift * xi + sign * *yi;
        }
    };

    let mut rng = ChaCha8Rng::seed_from_u64(START_SEED ^ p as u64);
    let mut start: Vec<f64> = (0..p).map(|_| rng.random::<f64>() - 0.5).collect();

    for _ in 0..=MAX_RESTARTS {
        let run = lanczos_run(&apply, &start, k_max, tol)?;
        if run.converged {
            let num = a.quadratic_form(&run.ritz_vector);
            let den: f64 = run.ritz_vector.iter().map(|v| v * v).sum();
            return Some(num / den);
        }
        start = run.ritz_vector;
    }
    None
}

struct LanczosRun {
    ritz_vector: Vec<f64>,
    converged: bool,
}

fn lanczos_run(
    apply: &impl Fn(&[f64], &mut [f64]),
    start: &[f64],
    k_max: usize,
    tol: f64,
) -> Option<LanczosRun> {
    let p = start.len();
    let norm0 = norm(start);
    if !(norm0 > 0.0) || !norm0.is_finite() {
        return None;
    }
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(k_max);
    basis.push(start.iter().map(|v| v / norm0).collect());
    let mut alphas: Vec<f64> = Vec::with_capacity(k_max);
    let mut betas: Vec<f64> = Vec::with_capacity(k_max);
    let mut w = vec![0.0; p];

    for j in 0..k_max {
        apply(&basis[j], &mut w);
        let alpha = dot(&basis[j], &w);
        alphas.push(alpha);
        // Two passes of classical Gram-Schmidt against the whole basis.
        for _ in 0..2 {
            for q in &basis {
                let c = dot(q, &w);
                axpy(-c, q, &mut w);
            }
        }
        let beta = norm(&w);

        let (_, theta_vecs) = tridiagonal_eigen(&alphas, &betas).ok()?;
        let k = alphas.len();
        let top = k - 1;
        // Residual norm of the top Ritz pair; beta == 0 means the Krylov space is invariant.
        let residual = beta * theta_vecs[(k - 1) * k + top].abs();
        let converged = residual <= tol;

        if converged || j + 1 == k_max {
            let mut ritz = vec![0.0; p];
            for (i, q) in basis.iter().enumerate() {
                axpy(theta_vecs[i * k + top], q, &mut ritz);
            }
            return Some(LanczosRun { ritz_vector: ritz, converged });
        }
        betas.push(beta);
        basis.push(w.iter().map(|v| v / beta).collect());
    }
    None
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::eigen::full_eigen;
    use crate::linalg::test_support::{random_sparse_soft_thresholded, random_symmetric};

    fn close(a: f64, b: f64) -> bool {
        let d = (a - b).abs();
        if b.abs() < 1e-2 {
            d <= 1e-12 || d <= 1e-10 * b.abs()
        } else {
            d <= 1e-10 * b.abs()
        }
    }

    #[test]
    fn two_by_two_smallest() {
        let m = SymmetricMatrix::from_rows(&[vec![2.0, 3.0], vec![3.0, 2.0]], 0.0).unwrap();
        let ex = extreme_eigen(&m, Which::Smallest).unwrap();
        assert!((ex.smallest.unwrap() + 1.0).abs() < 1e-14);
        assert!(ex.largest.is_none());
    }

    #[test]
    fn identity_50_both() {
        let ex = extreme_eigen(&SymmetricMatrix::identity(50), Which::Both).unwrap();
        assert_eq!((ex.smallest, ex.largest), (Some(1.0), Some(1.0)));
    }

    #[test]
    fn identity_above_dense_cutoff_uses_invariant_subspace() {
        let ex = extreme_eigen(&SymmetricMatrix::identity(120), Which::Both).unwrap();
        assert!((ex.smallest.unwrap() - 1.0).abs() < 1e-14);
        assert!((ex.largest.unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn lanczos_path_matches_dense_on_large_matrices() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for &p in &[65usize, 100, 180] {
            let m = random_symmetric(&mut rng, p);
            let eig = full_eigen(&m).unwrap();
            let ex = extreme_eigen(&m, Which::Both).unwrap();
            assert!(close(ex.smallest.unwrap(), eig.values[0]), "p={p}");
            assert!(close(ex.largest.unwrap(), eig.values[p - 1]), "p={p}");
        }
    }

    #[test]
    fn sparse_soft_thresholded_smallest() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..5 {
            let m = random_sparse_soft_thresholded(&mut rng, 120);
            let eig = full_eigen(&m).unwrap();
            let ex = extreme_eigen(&m, Which::Smallest).unwrap();
            assert!(close(ex.smallest.unwrap(), eig.values[0]));
        }
    }
}
