use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{what}: expected length {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("invalid {name} = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("modulation matrix is singular (smallest singular value {smallest:e} <= tolerance {tolerance:e})")]
    SingularModulation { smallest: f64, tolerance: f64 },

    #[error("X^T X has eigenvalue {eigenvalue:e} below -{threshold:e}; not positive semidefinite")]
    NotPositiveSemidefinite { eigenvalue: f64, threshold: f64 },

    #[error("all {count} seeds diverged")]
    AllSeedsDiverged { count: usize },

    #[error("coupled block system is singular: b1 * b2 = {product} >= 1 (b1 = {b1}, b2 = {b2})")]
    CoupledSingularity { b1: f64, b2: f64, product: f64 },

    #[error("block {block} hits the pole a^2 <= alpha (a = {a}, alpha = {alpha})")]
    BlockPole { block: usize, a: f64, alpha: f64 },

    #[error("saddle-point iteration did not converge after {iterations} iterations (last step {residual:e})")]
    SaddleNotConverged { iterations: usize, residual: f64 },

    #[error("curve needs at least {required} points, found {found}")]
    TooFewPoints { required: usize, found: usize },

    #[error("table row has {found} values, schema has {expected} columns")]
    RowWidth { expected: usize, found: usize },
}

impl Error {
    /// True for errors caused by bad inputs rather than by the numerics.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::DimensionMismatch { .. }
                | Error::InvalidParameter { .. }
                | Error::InvalidGrid(_)
                | Error::TooFewPoints { .. }
                | Error::RowWidth { .. }
        )
    }
}

pub(crate) fn check_param(
    name: &'static str,
    value: f64,
    ok: bool,
    reason: &'static str,
) -> Result<()> {
    if ok && !value.is_nan() {
        Ok(())
    } else {
        Err(Error::InvalidParameter { name, value, reason })
    }
}
