use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("eigenvalue iteration did not converge after {iterations} iterations (n = {n})")]
    Convergence { n: usize, iterations: usize },

    #[error("gain synthesis failed: {0}")]
    Synthesis(String),

    #[error("singular matrix: {0}")]
    Singular(String),

    /// `node` is a zero-based index; messages print it as a 1-based label.
    #[error("topology error at agent {}: {reason}", .node + 1)]
    Topology { node: usize, reason: String },

    #[error("wiring error for agent {}: {reason}", .agent + 1)]
    Wiring { agent: usize, reason: String },

    #[error("model assumption violated: {0}")]
    Model(String),

    #[error("homogenization failed: {0}")]
    Homogenization(String),

    #[error("scenario validation failed: {0}")]
    Validation(String),

    #[error("simulation diverged at step {step}: non-finite value in {signal}")]
    Divergence { step: usize, signal: String },

    #[error("certificate error: {0}")]
    Certificate(String),

    #[error("invalid argument: {0}")]
    Usage(String),

    #[error("parse error in {path}: {message}")]
    Parse { path: String, message: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn dim(msg: impl Into<String>) -> Self {
        Error::Dimension(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
