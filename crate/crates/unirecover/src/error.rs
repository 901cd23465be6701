//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// An enumeration would materialize more frequencies than the configured cap.
    #[error("enumeration needs {needed} elements, cap is {cap}")]
    CapExceeded { needed: u128, cap: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("non-finite input at coordinate {0}")]
    NonFinite(usize),

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    /// Integer overflow in an exact computation (Fibonacci numbers, cardinalities).
    #[error("integer overflow in {0}")]
    Overflow(&'static str),

    /// The minimax solver exceeded its iteration budget or lost feasibility.
    #[error("linear program did not converge: {0}")]
    NoConvergence(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
