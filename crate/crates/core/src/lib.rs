//! Positive-definite covariance and precision matrix estimation.
//!
//! The crate covers first-stage regularized estimators (thresholding,
//! banding, tapering), the fixed-support linear-shrinkage repair in
//! [`fspd`], optimization-based positive-definite baselines for comparison,
//! cross-validation, a Monte Carlo harness and a minimum-variance portfolio
//! backtest.

pub mod baselines;
pub mod error;
pub mod fspd;
pub mod io;
pub mod linalg;
pub mod portfolio;
pub mod regularizers;
pub mod selection;
pub mod simulation;

pub use error::{Error, Result};
pub use linalg::SymmetricMatrix;
