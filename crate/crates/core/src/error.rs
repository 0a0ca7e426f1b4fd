use thiserror::Error;

/// Errors produced by parameter validation, key loading and file handling.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied value violates a documented precondition or invariant.
    #[error("parameter error: {0}")]
    Parameter(String),

    /// The input key stream ran out before the requested number of blocks was
    /// accepted. `filled` counts the blocks that were loaded successfully.
    #[error("insufficient input: stream exhausted after {filled} of {needed} blocks")]
    InsufficientInput { filled: usize, needed: usize },

    /// An enumeration oracle was asked for more work than its budget allows.
    /// `estimate` is the number of evaluations the request would have cost.
    #[error("enumeration budget exceeded: ~{estimate} evaluations (budget {budget})")]
    BudgetExceeded { estimate: u128, budget: u128 },

    /// Malformed key or seed file.
    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn parameter(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
