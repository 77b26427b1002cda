use std::path::PathBuf;

use thiserror::Error;

use crate::regularizer::NetworkWeights;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Per-iteration record of the TV-minimization solver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub iteration: usize,
    /// Anisotropic TV of the current primal iterate.
    pub objective: f64,
    /// `‖Au − d‖ − ε`; non-positive once the data constraint holds.
    pub feasibility_gap: f64,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("bad magic: expected {expected:?}, found {found:?}")]
    BadMagic { expected: [u8; 4], found: [u8; 4] },

    #[error("truncated payload: expected {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },

    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },

    #[error("unsupported format version {0}")]
    UnsupportedVersion(u8),

    #[error("malformed input: {0}")]
    Malformed(String),

    #[error("iteration diverged (non-finite iterate) at step {iteration}")]
    Diverged { iteration: usize },

    #[error("ADMM diverged at step {iteration}")]
    AdmmDiverged {
        iteration: usize,
        trace: Vec<TraceRow>,
    },

    #[error("training diverged in epoch {epoch}, batch {batch}")]
    TrainingDiverged {
        epoch: usize,
        batch: usize,
        /// Weights before the failing batch.
        last_good: Box<NetworkWeights>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures of the numerics themselves (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Diverged { .. } | Error::AdmmDiverged { .. } | Error::TrainingDiverged { .. }
        )
    }
}

pub(crate) fn check_len(context: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            context,
            expected,
            found,
        })
    }
}
