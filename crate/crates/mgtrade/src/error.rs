//! Crate error type.

use std::fmt;

/// Errors raised by the library layers.
#[derive(Debug)]
pub enum Error {
    /// A parameter was outside its documented range.
    InvalidParameter(String),
    /// A quantity left the domain of the operation (e.g. negative battery).
    Domain(String),
    /// The utility's log argument was non-positive for the given state.
    InfeasibleState {
        log_argument: f64,
    },
    /// The equilibrium existence condition does not hold.
    ConditionNotSatisfied(String),
    /// Tensor or weight shapes do not line up.
    ShapeMismatch {
        expected: String,
        found: String,
    },
    /// A backward pass was attempted with a cache from different weights.
    StaleCache,
    /// A gradient or loss became non-finite; training must stop.
    NonFinite(String),
    /// Trace file problem; `line` is 1-based when it refers to a data row.
    Trace {
        line: Option<usize>,
        message: String,
    },
    /// Run configuration problem detected before any simulation started.
    Config(String),
    /// Checkpoint serialization problem.
    Checkpoint(String),
    Io(std::io::Error),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidParameter(msg) => write!(f, "invalid parameter: {msg}"),
            Error::Domain(msg) => write!(f, "domain error: {msg}"),
            Error::InfeasibleState { log_argument } => {
                write!(
                    f,
                    "infeasible state: log argument {log_argument} is not positive"
                )
            }
            Error::ConditionNotSatisfied(msg) => {
                write!(f, "equilibrium condition not satisfied: {msg}")
            }
            Error::ShapeMismatch { expected, found } => {
                write!(f, "shape mismatch: expected {expected}, found {found}")
            }
            Error::StaleCache => write!(f, "stale activation cache: weights changed since forward"),
            Error::NonFinite(msg) => write!(f, "non-finite value: {msg}"),
            Error::Trace {
                line: Some(line),
                message,
            } => {
                write!(f, "trace error at line {line}: {message}")
            }
            Error::Trace {
                line: None,
                message,
            } => write!(f, "trace error: {message}"),
            Error::Config(msg) => write!(f, "configuration error: {msg}"),
            Error::Checkpoint(msg) => write!(f, "checkpoint error: {msg}"),
            Error::Io(err) => write!(f, "io error: {err}"),
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::Io(err) => Some(err),
            _ => None,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err)
    }
}
