use super::lanczos::{extreme_eigen, Which};
use super::SymmetricMatrix;
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NormKind {
    /// `max_i |gamma_i|`.
    Spectral,
    /// `sqrt(tr(A^T A) / p)`.
    FrobeniusScaled,
    /// `sqrt(tr(A^T A))`.
    FrobeniusUnscaled,
    /// Maximum absolute column sum.
    OperatorL1,
}

impl NormKind {
    pub const RISK_NORMS: [NormKind; 3] =
        [NormKind::OperatorL1, NormKind::Spectral, NormKind::FrobeniusUnscaled];

    pub fn label(self) -> &'static str {
        match self {
            NormKind::Spectral => "spectral",
            NormKind::FrobeniusScaled => "frobenius_scaled",
            NormKind::FrobeniusUnscaled => "frobenius",
            NormKind::OperatorL1 => "matrix_l1",
        }
    }
}

pub fn norm(m: &SymmetricMatrix, kind: NormKind) -> Result<f64> {
    Ok(match kind {
        NormKind::Spectral => {
            let ex = extreme_eigen(m, Which::Both)?;
            let lo = ex.smallest.unwrap_or(0.0).abs();
            let hi = ex.largest.unwrap_or(0.0).abs();
            lo.max(hi)
        }
        NormKind::FrobeniusScaled => (m.trace_of_square() / m.dim() as f64).sqrt(),
        NormKind::FrobeniusUnscaled => m.trace_of_square().sqrt(),
        NormKind::OperatorL1 => (0..m.dim())
            .map(|j| m.row(j).iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max),
    })
}

/// The four spectral functionals that drive the shrinkage repair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralSummary {
    pub gamma_min: f64,
    pub gamma_max: f64,
    /// `tr(m) / p`.
    pub gamma_mean: f64,
    /// `tr(m^2) / p - gamma_mean^2`.
    pub gamma_var: f64,
}

impl SpectralSummary {
    /// Summary of an explicit ascending eigenvalue list.
    pub fn from_eigenvalues(values: &[f64]) -> Self {
        let p = values.len() as f64;
        let mean = values.iter().sum::<f64>() / p;
        let var = (values.iter().map(|v| v * v).sum::<f64>() / p - mean * mean).max(0.0);
        Self { gamma_min: values[0], gamma_max: values[values.len() - 1], gamma_mean: mean, gamma_var: var }
    }
}

/// Mean and variance come from traces; only the two extremes need an
/// eigensolver.
pub fn spectral_summary(m: &SymmetricMatrix) -> Result<SpectralSummary> {
    let p = m.dim() as f64;
    let mean = m.trace() / p;
    let var = (m.trace_of_square() / p - mean * mean).max(0.0);
    let ex = extreme_eigen(m, Which::Both)?;
    let gamma_min = ex.smallest.expect("requested");
    let gamma_max = ex.largest.expect("requested");
    Ok(SpectralSummary {
        // Rounding can push the trace mean a hair outside [min, max] for cI.
        gamma_min: gamma_min.min(mean),
        gamma_max: gamma_max.max(mean),
        gamma_mean: mean,
        gamma_var: var,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::eigen::eigenvalues;
    use crate::linalg::test_support::random_symmetric;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn diagonal_summary() {
        let s = spectral_summary(&SymmetricMatrix::diagonal(&[1.0, 3.0]).unwrap()).unwrap();
        assert_eq!((s.gamma_min, s.gamma_max, s.gamma_mean, s.gamma_var), (1.0, 3.0, 2.0, 1.0));
    }

    #[test]
    fn two_by_two_summary() {
        let m = SymmetricMatrix::from_rows(&[vec![2.0, 3.0], vec![3.0, 2.0]], 0.0).unwrap();
        let s = spectral_summary(&m).unwrap();
        assert!((s.gamma_min + 1.0).abs() < 1e-14);
        assert!((s.gamma_max - 5.0).abs() < 1e-14);
        assert_eq!(s.gamma_mean, 2.0);
        assert_eq!(s.gamma_var, 9.0);
    }

    #[test]
    fn identity_summary() {
        for p in [1usize, 4, 70, 130] {
            let s = spectral_summary(&SymmetricMatrix::identity(p)).unwrap();
            assert!((s.gamma_min - 1.0).abs() < 1e-14);
            assert!((s.gamma_max - 1.0).abs() < 1e-14);
            assert_eq!(s.gamma_mean, 1.0);
            assert_eq!(s.gamma_var, 0.0);
        }
    }

    #[test]
    fn trace_moments_match_eigen_moments() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for p in [3usize, 17, 90] {
            let m = random_symmetric(&mut rng, p);
            let s = spectral_summary(&m).unwrap();
            let e = SpectralSummary::from_eigenvalues(&eigenvalues(&m).unwrap());
            assert!((s.gamma_mean - e.gamma_mean).abs() <= 1e-10 * e.gamma_mean.abs().max(1e-2));
            assert!((s.gamma_var - e.gamma_var).abs() <= 1e-10 * e.gamma_var.abs());
        }
    }

    #[test]
    fn norm_examples() {
        let id4 = SymmetricMatrix::identity(4);
        assert_eq!(norm(&id4, NormKind::FrobeniusScaled).unwrap(), 1.0);
        assert_eq!(norm(&id4, NormKind::FrobeniusUnscaled).unwrap(), 2.0);
        let m = SymmetricMatrix::from_rows(&[vec![2.0, 3.0], vec![3.0, 2.0]], 0.0).unwrap();
        assert!((norm(&m, NormKind::Spectral).unwrap() - 5.0).abs() < 1e-14);
        let m = SymmetricMatrix::from_rows(&[vec![1.0, -2.0], vec![-2.0, 0.0]], 0.0).unwrap();
        assert_eq!(norm(&m, NormKind::OperatorL1).unwrap(), 3.0);
    }
}
