//! Error type shared across the crate.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A parameter violates its domain (σ ≤ 0, θ outside prior support, ...).
    InvalidParam(String),
    /// Vector/matrix dimensions do not line up.
    Dimension { expected: usize, got: usize },
    /// A matrix failed to factorize even after the jitter escalation.
    /// Carries the offending matrix (row-major) for the error report.
    NotPositiveDefinite { dim: usize, matrix: Vec<f64> },
    /// A sampler hit a structurally degenerate state (all SMC weights
    /// zero, zero-variance input, empty window, ...).
    Degenerate(String),
    /// A bounded search ran out of attempts.
    Exhausted(String),
    /// Malformed input data.
    Data(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidParam(msg) => write!(f, "invalid parameter: {msg}"),
            Error::Dimension { expected, got } => {
                write!(f, "dimension mismatch: expected {expected}, got {got}")
            }
            Error::NotPositiveDefinite { dim, matrix } => {
                write!(f, "{dim}x{dim} matrix not positive definite after jitter: [")?;
                for (i, v) in matrix.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{v:e}")?;
                }
                write!(f, "]")
            }
            Error::Degenerate(msg) => write!(f, "degenerate state: {msg}"),
            Error::Exhausted(msg) => write!(f, "search exhausted: {msg}"),
            Error::Data(msg) => write!(f, "bad data: {msg}"),
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;
