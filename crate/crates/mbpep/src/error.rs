//! Error type shared across the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter fell outside its documented domain (sizes, fractions, rates...).
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Two buffers that must agree in shape do not.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// CSV input rejected. `row` counts data rows from 1 (the header is row 0);
    /// `col` counts columns from 1.
    #[error("csv row {row}, col {col}: {msg}")]
    Csv { row: usize, col: usize, msg: String },

    /// Dataset-level problem that is not tied to one CSV cell.
    #[error("data error: {0}")]
    Data(String),

    /// A loss or gradient went NaN/Inf during training; the learner is abandoned.
    #[error("learner {learner}: non-finite {what} at epoch {epoch}")]
    NonFinite {
        learner: usize,
        epoch: usize,
        what: &'static str,
    },

    /// Model file rejected (bad version tag, malformed JSON, inconsistent shapes).
    #[error("model file: {0}")]
    Model(String),

    /// An undefined quantity was requested (e.g. a ratio with zero denominator).
    #[error("undefined value: {0}")]
    Undefined(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
