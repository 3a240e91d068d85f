use thiserror::Error;

/// Errors raised anywhere in the numerical pipeline.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { name: String, offset: usize },
    #[error("function `{name}` at byte {offset} takes 1 argument, found {found}")]
    Arity {
        name: String,
        offset: usize,
        found: usize,
    },
    #[error("domain error at byte {offset}: {message}")]
    Domain { offset: usize, message: String },
    #[error("grid error: {0}")]
    Grid(String),
    #[error("metric is not positive-definite at {point:?}")]
    NotPositiveDefinite { point: [f64; 3] },
    #[error("vector field is not unit at {point:?}: g(T,T) = {norm2}")]
    NonUnitField { point: [f64; 3], norm2: f64 },
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("scenario error (line {line}): {message}")]
    Scenario { line: usize, message: String },
    #[error("ODE blow-up at s = {s} inside requested range")]
    BlowUp { s: f64 },
    #[error("first-integral drift {drift:e} exceeds {limit:e}; refine the step")]
    Drift { drift: f64, limit: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
