// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

/// Errors raised by the simulator and optimizer.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument violated a documented precondition.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A special-function argument fell outside the supported range.
    #[error("argument out of supported range: {0}")]
    OutOfRange(String),

    /// The dense eigensolver did not converge.
    #[error("eigensolver failed to converge ({0})")]
    NoConvergence(String),

    /// A grid or objective evaluation failed at a specific point.
    #[error("evaluation failed at eps0 = {eps0}, delta = {delta}: {source}")]
    AtPoint {
        eps0: f64,
        delta: f64,
        #[source]
        source: Box<Error>,
    },

    /// An objective evaluation failed for a specific decision vector.
    #[error("objective evaluation failed for decision vector {vector:?}: {source}")]
    AtVector {
        vector: Vec<f64>,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    /// True when the failure is numerical rather than a bad argument.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::NoConvergence(_) => true,
            Error::AtPoint { source, .. } | Error::AtVector { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
