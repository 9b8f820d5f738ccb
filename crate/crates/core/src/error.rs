use std::path::PathBuf;

use thiserror::Error;

/// Which block of an alternating step failed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlockId {
    X,
    Y,
}

impl std::fmt::Display for BlockId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BlockId::X => f.write_str("x"),
            BlockId::Y => f.write_str("y"),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("ill-posed system: smallest spectral value {min_eigenvalue:e} <= 1e-12")]
    IllPosed { min_eigenvalue: f64 },
    #[error("inner solver `{solver}` did not converge in {iterations} iterations (residual {residual:e})")]
    InnerSolver {
        solver: &'static str,
        iterations: usize,
        residual: f64,
    },
    #[error("line search exhausted {doublings} doublings at iteration {iteration}")]
    LineSearch { iteration: usize, doublings: usize },
    #[error("{block}-update failed: {source}")]
    Step {
        block: BlockId,
        #[source]
        source: Box<Error>,
    },
    #[error("format error: {0}")]
    Format(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("i/o error on {path}: {source}")]
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
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
