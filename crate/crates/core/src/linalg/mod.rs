//! Dense symmetric matrices, eigensolvers, norms and trace moments.

mod cholesky;
mod eigen;
mod lanczos;
mod matrix;
mod norms;

pub use cholesky::Cholesky;
pub use eigen::{eigenvalues, full_eigen, EigenDecomposition};
pub use lanczos::{extreme_eigen, Extremes, Which, DENSE_FALLBACK_DIM};
pub use matrix::SymmetricMatrix;
pub use norms::{norm, spectral_summary, NormKind, SpectralSummary};

/// Smallest eigenvalue, via [`extreme_eigen`].
pub fn min_eigenvalue(m: &SymmetricMatrix) -> crate::Result<f64> {
    Ok(extreme_eigen(m, Which::Smallest)?.smallest.expect("requested"))
}
