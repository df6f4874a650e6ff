use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("failed to access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("config parse error: {0}")]
    Parse(String),

    #[error("invalid configuration: {0}")]
    Validation(String),

    /// Cable index is 1-based, matching the numbering used in reports.
    #[error("cable {index} is degenerate (zero length)")]
    DegenerateCable { index: usize },

    #[error("pose outside workspace: {0}")]
    Workspace(String),

    #[error("cable lengths {0:?} have no real intersection")]
    InfeasibleLengths([f64; 3]),

    #[error("forward kinematics did not converge after {0} iterations")]
    NoConvergence(usize),

    #[error("cable direction matrix is singular at this pose")]
    Singular,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("at t = {t:.6} s: {source}")]
    AtTime {
        t: f64,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn at(self, t: f64) -> Self {
        Error::AtTime {
            t,
            source: Box::new(self),
        }
    }

    /// Strips any timestamp wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtTime { source, .. } => source.root(),
            other => other,
        }
    }
}
