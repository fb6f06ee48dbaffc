use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Parameters leave no room for the construction (A < 1, B < 1, or
    /// hyperplanes escaping the grid).
    #[error("range too tight: {0}")]
    RangeTooTight(String),

    #[error("arithmetic overflow while computing {0}")]
    ArithmeticOverflow(&'static str),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    /// A parametrically generated incident point fell outside the grid.
    #[error("point {coords:?} escapes the grid (last axis limit {limit})")]
    PointEscapesGrid { coords: Vec<i64>, limit: i64 },

    #[error("instance too large: needs {required} work units, budget is {budget}")]
    InstanceTooLarge { required: u128, budget: u64 },

    #[error("search budget of {0} nodes exceeded")]
    BudgetExceeded(u64),

    #[error("empty input")]
    EmptyInput,

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Validation failures (exit code 2) versus resource limits (exit code 3).
    pub fn is_budget(&self) -> bool {
        matches!(self, Error::InstanceTooLarge { .. } | Error::BudgetExceeded(_))
    }
}
