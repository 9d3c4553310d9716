use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error in {path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("topological ball needs {needed} active agents, only {available} available")]
    InsufficientAgents { needed: usize, available: usize },

    #[error("target topological mass {target} exceeds available mass {available}")]
    InsufficientMass { target: f64, available: f64 },

    #[error("batch size {batch} exceeds population {population}")]
    BatchTooLarge { batch: usize, population: usize },

    #[error("no active followers")]
    NoActiveFollowers,

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Short machine-readable category used by the CLI error line.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Parse { .. } => "parse",
            Error::Validation(_) => "validation",
            Error::InsufficientAgents { .. } => "insufficient_agents",
            Error::InsufficientMass { .. } => "insufficient_mass",
            Error::BatchTooLarge { .. } => "batch_too_large",
            Error::NoActiveFollowers => "no_active_followers",
            Error::Io { .. } => "io",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
