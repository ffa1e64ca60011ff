use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Input data violates a numeric or parameter contract.
    #[error("validation error: {0}")]
    Validation(String),

    #[error("row {row} is not stochastic: sum = {sum:.17e}")]
    NonStochasticRow { row: usize, sum: f64 },

    /// The chain (or tree) does not have the required structure.
    #[error("structural error: {0}")]
    Structural(String),

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    /// An iterative scan ran past its step cap without meeting its criterion.
    #[error("{what} did not converge within {cap} steps")]
    Divergence { what: String, cap: u64 },

    #[error("budget exceeded: {0}")]
    Budget(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
