use thiserror::Error;

use crate::dsl::DslError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("size must be a power of two, got {0}")]
    NotPowerOfTwo(usize),
    #[error("grid size must be at least {min}, got {got}")]
    GridTooSmall { got: usize, min: usize },
    #[error("grid mismatch: {left} vs {right}")]
    GridMismatch { left: usize, right: usize },
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("exponent p must lie in (1, inf), got {0}")]
    InvalidExponent(f64),
    #[error("{what} out of range: {value}")]
    OutOfRange { what: &'static str, value: f64 },
    #[error("not a mollifier: profile at 0 is {0}, expected 1")]
    NotAMollifier(f64),
    #[error("mollifier {0} does not have vanishing moments")]
    MomentsNotVanishing(String),
    #[error("seminorm depth {got} exceeds maximum {max}")]
    DepthExceeded { got: usize, max: usize },
    #[error("unknown name `{0}`")]
    UnknownName(String),
    #[error(transparent)]
    Dsl(#[from] DslError),
    #[error("domain error at x_{x_index} = {x}, k = {k}: {reason}")]
    Domain {
        x_index: usize,
        x: f64,
        k: i64,
        reason: String,
    },
    #[error("support violation in block {block}: frequency {freq} exceeds bound {bound}")]
    SupportViolation { block: usize, freq: i64, bound: f64 },
    #[error("symbol is not of order 0 (fitted order {0:.3})")]
    NotOrderZero(f64),
    #[error("smoothness gate failed: {0}")]
    GateFailed(String),
    #[error("method mismatch: {0}")]
    MethodMismatch(String),
    #[error("zero seminorm at eps = {0}")]
    ZeroSeminorm(f64),
    #[error("malformed eps grid at offset {offset}: expected {expected}")]
    EpsSyntax { offset: usize, expected: String },
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
