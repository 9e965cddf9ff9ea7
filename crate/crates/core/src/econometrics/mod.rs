//! Numerical core: multivariate least squares, triangular factorization of a
//! covariance matrix, structural shock recovery and the ADF unit-root test.
//!
//! Everything here is a pure function of its inputs.

mod adf;
mod cholesky;
mod ols;

pub use adf::{adf_test, AdfResult, ADF_CRITICAL_5PCT, DEFAULT_ADF_LAG};
pub use cholesky::{cholesky_lower, structural_shocks, TriangularFactor};
pub use ols::{ols_multivariate, LeastSquaresFit, RANK_TOLERANCE};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EconError {
    #[error("design matrix is rank deficient (column {column})")]
    RankDeficient { column: usize },

    #[error("need more observations than regressors: {n_obs} observations, {n_regressors} regressors")]
    TooFewObservations { n_obs: usize, n_regressors: usize },

    #[error("matrix is not positive definite (pivot {pivot})")]
    NotPositiveDefinite { pivot: usize },

    #[error("matrix is not symmetric")]
    NotSymmetric,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: String, found: String },

    #[error("triangular factor has a zero diagonal entry at {index}")]
    SingularFactor { index: usize },

    #[error("series too short: {len} values, need at least {min}")]
    SeriesTooShort { len: usize, min: usize },

    #[error("series is constant")]
    ConstantSeries,
}
