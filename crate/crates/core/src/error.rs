use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("empty scan")]
    EmptyScan,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("numerical overflow in scan")]
    ScanOverflow,

    #[error("invalid permutation: {0}")]
    InvalidPermutation(String),

    #[error("analytic jacobian requested but dynamics provide none")]
    MissingJacobian,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("diverged at iteration {iteration} (merit {merit:e})")]
    Diverged { iteration: usize, merit: f64 },

    #[error("covariance {0} is not symmetric positive definite")]
    NotPositiveDefinite(usize),

    #[error("state {t} is not a permutation of the initial vocabulary")]
    NotAPermutation { t: usize },

    #[error("block system too large: {size} > {limit}")]
    SizeGuard { size: usize, limit: usize },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}

pub(crate) fn check_finite(values: &[f64], what: &'static str) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}
