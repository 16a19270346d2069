use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid time grid: {0}")]
    InvalidGrid(String),

    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: &'static str,
        expected: String,
        got: String,
    },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("integration diverged at step {step}")]
    IntegrationDiverged { step: usize },

    #[error("matrix is not symmetric ({context})")]
    NotSymmetric { context: &'static str },

    #[error("matrix is not positive definite (pivot {pivot})")]
    NotPositiveDefinite { pivot: usize },

    #[error("singular matrix in {0}")]
    Singular(&'static str),

    #[error("prior covariance is singular; the minimum-energy cost needs its inverse")]
    SingularPrior,

    #[error("filter covariance is ill-conditioned at grid index {index} (condition number {condition:e})")]
    SingularCovariance { index: usize, condition: f64 },

    #[error("negative transition rate {value} at ({row}, {col})")]
    NegativeRate { row: usize, col: usize, value: f64 },

    #[error("rate matrix row {row} sums to {sum}, expected 0")]
    RowSum { row: usize, sum: f64 },

    #[error("prior is not a probability vector: {0}")]
    PriorSimplex(String),

    #[error("observation noise covariance is not symmetric positive definite")]
    NoiseNotSpd,

    #[error("state path ends at {horizon} but the grid extends to {t1}")]
    PathTooShort { horizon: f64, t1: f64 },

    #[error("filter degenerated at step {step}: total mass {mass:e}")]
    FilterDegenerate { step: usize, mass: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    /// True for failures caused by numerics (divergence, singularity) rather than bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::IntegrationDiverged { .. }
                | Error::NotPositiveDefinite { .. }
                | Error::Singular(_)
                | Error::SingularPrior
                | Error::SingularCovariance { .. }
                | Error::FilterDegenerate { .. }
        )
    }
}

pub(crate) fn check_dims(
    context: &'static str,
    expected: (usize, usize),
    got: (usize, usize),
) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            context,
            expected: format!("{}x{}", expected.0, expected.1),
            got: format!("{}x{}", got.0, got.1),
        })
    }
}
