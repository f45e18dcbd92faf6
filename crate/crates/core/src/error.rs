use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("row count mismatch: left={left}, right={right}")]
    SizeMismatch { left: usize, right: usize },

    #[error("index {index} out of range for length {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("row {row} is not covered by the column")]
    UncoveredRow { row: usize },

    #[error("arithmetic overflow in {0}")]
    Overflow(&'static str),

    #[error("integer division by zero")]
    DivisionByZero,

    #[error("expansion to {requested} elements exceeds the budget of {budget}")]
    BudgetExceeded { requested: usize, budget: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("type mismatch: {0}")]
    TypeMismatch(String),

    #[error("join columns use different dictionaries ({left} vs {right})")]
    DictionaryMismatch { left: String, right: String },

    #[error("parse error at row {row}, column {column}: {message}")]
    Parse {
        row: usize,
        column: usize,
        message: String,
    },

    #[error("plan error: {0}")]
    Plan(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
