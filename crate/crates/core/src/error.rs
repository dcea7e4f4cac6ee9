use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid spec: {0}")]
    InvalidSpec(String),

    #[error("evaluation budget {budget} is below the cost of one iteration ({per_iteration})")]
    InvalidBudget { budget: u64, per_iteration: u64 },

    /// Every weight in a normalization group is zero (log weight -inf or NaN).
    #[error("degenerate weights: no finite log-weight in group {group}")]
    DegenerateWeights { group: usize },

    /// The accumulator holds no positive weight, so a self-normalized estimate is undefined.
    #[error("degenerate estimate: total importance weight is zero")]
    DegenerateEstimate,
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}
