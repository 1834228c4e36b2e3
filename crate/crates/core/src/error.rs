use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension error: {0}")]
    Dimension(String),
    #[error("parameter error: {0}")]
    Parameter(String),
    #[error("validation error: {0}")]
    Validation(String),
    #[error("framing error: {len} bits is not a multiple of {bits_per_symbol} bits per symbol")]
    Framing { len: usize, bits_per_symbol: usize },
    #[error("{factor} is singular or ill-conditioned (condition number {condition:e})")]
    Singular { factor: &'static str, condition: f64 },
    #[error("{what} needs {cost} evaluations, above the budget of {budget}")]
    Budget { what: &'static str, cost: f64, budget: f64 },
    #[error("merge error: {0}")]
    Merge(String),
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid configuration field `{field}`: {message}")]
    Config { field: String, message: String },
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }
}
