use thiserror::Error;

use crate::space::PointId;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// The point cloud violates a quasi-metric measure space axiom.
    #[error("invalid space: {reason}")]
    InvalidSpace { reason: String },

    #[error("unknown point id {0}")]
    UnknownPoint(PointId),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("set has zero measure")]
    ZeroMeasure,

    #[error("cube {0} is at the coarsest level and has no parent")]
    NoParent(usize),

    #[error("no family ball contains point {0}")]
    NoContainingBall(PointId),

    /// The stopping time did not decay (c >= 1), so no Gehring constant exists.
    #[error("stopping time is not decaying: measured c = {0}")]
    NoDecay(f64),

    #[error("degenerate constant: {0}")]
    Degenerate(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("i/o error: {0}")]
    Io(String),

    /// Internal consistency failure; indicates a bug rather than bad input.
    #[error("internal invariant violated: {0}")]
    Internal(String),
}

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }

    pub(crate) fn invalid_space(reason: impl Into<String>) -> Self {
        Error::InvalidSpace { reason: reason.into() }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
