use thiserror::Error;

/// Errors raised across the estimation toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("non-finite value at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("matrix is not symmetric: max asymmetry {max_asymmetry:e} exceeds {tolerance:e}")]
    Asymmetric { max_asymmetry: f64, tolerance: f64 },

    #[error("eigensolver did not converge for a {dim}x{dim} matrix")]
    EigenNoConvergence { dim: usize },

    #[error("matrix is not positive definite (smallest eigenvalue {min_eigenvalue:e}); repair it with fspd_apply first")]
    NotPositiveDefinite { min_eigenvalue: f64 },

    #[error("eigenvalues are all equal; mu_F is undefined for a multiple of the identity, use mu_S")]
    DegenerateSpectrum,

    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
