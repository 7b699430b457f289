use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("weights sum to {sum}, expected 1 within {tolerance:e}")]
    Normalization { sum: f64, tolerance: f64 },

    #[error("negative or non-finite weight {value} at index {index}")]
    NegativeWeight { index: usize, value: f64 },

    #[error("shape mismatch: {0}")]
    Shape(String),

    /// An enumeration would exceed its configured budget.
    #[error("{what}: {count} items exceeds the enumeration budget of {budget}")]
    Budget {
        what: String,
        count: String,
        budget: u64,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn argument(msg: impl Into<String>) -> Error {
    Error::Argument(msg.into())
}
