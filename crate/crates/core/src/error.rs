use thiserror::Error;

/// Errors produced by the simulation and bound-evaluation routines.
#[derive(Debug, Error)]
pub enum Error {
    /// Vectors (or a vector and a codebook) disagree on block length.
    #[error("dimension mismatch: expected length {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    /// A message or key index outside its valid 1-based range.
    #[error("{what} index {index} out of range 1..={bound}")]
    Index {
        what: &'static str,
        index: u128,
        bound: u128,
    },

    /// Malformed or inconsistent configuration.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// A named parameter constraint does not hold.
    #[error("constraint violated: {0}")]
    Constraint(String),

    /// An argument outside the validity range of a bound.
    #[error("domain error: {0}")]
    Domain(String),

    /// A probability-zero degenerate input (e.g. a zero row centroid).
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// A computation that would exceed the memory or point budget.
    #[error("resource budget exceeded: {what} requires {required}, budget is {budget}")]
    Budget {
        what: &'static str,
        required: f64,
        budget: f64,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
