use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use pdcov::linalg::{eigenvalues, extreme_eigen, full_eigen, SymmetricMatrix, Which};
use pdcov::regularizers::{sample_cov, threshold_estimator, EstimatorConfig};
use pdcov::simulation::{make_m1, sample_gaussian};

#[test]
fn lanczos_extremes_match_dense_spectrum() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for k in 0..200 {
        let p = rng.random_range(65..=160);
        let density = if k % 2 == 0 { 1.0 } else { 0.05 };
        let m = SymmetricMatrix::from_fn(p, |i, j| {
            if i == j || rng.random::<f64>() < density {
                rng.random_range(-1.0..1.0)
            } else {
                0.0
            }
        })
        .unwrap();
        let dense = eigenvalues(&m).unwrap();
        let ex = extreme_eigen(&m, Which::Both).unwrap();
        let scale = dense[0].abs().max(dense[p - 1].abs()).max(1.0);
        assert!((ex.smallest.unwrap() - dense[0]).abs() <= 1e-8 * scale, "case {k}");
        assert!((ex.largest.unwrap() - dense[p - 1]).abs() <= 1e-8 * scale, "case {k}");
    }
}

#[test]
fn lanczos_handles_thresholded_covariances() {
    for seed in 0..5 {
        let data = sample_gaussian(&make_m1(100), 50, seed).unwrap();
        let est = threshold_estimator(&sample_cov(&data).unwrap(), &EstimatorConfig::soft(0.2)).unwrap();
        let dense = eigenvalues(&est).unwrap();
        let ex = extreme_eigen(&est, Which::Smallest).unwrap();
        assert!((ex.smallest.unwrap() - dense[0]).abs() < 1e-9);
    }
}

#[test]
fn full_decomposition_values_agree_with_values_only_path() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let m = SymmetricMatrix::from_fn(30, |_, _| rng.random_range(-1.0..1.0)).unwrap();
    let full = full_eigen(&m).unwrap();
    for (a, b) in full.values.iter().zip(eigenvalues(&m).unwrap()) {
        assert!((a - b).abs() < 1e-12);
    }
}
