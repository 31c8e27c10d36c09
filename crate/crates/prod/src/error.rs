use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, ProdError>;

#[derive(Debug, Error)]
pub enum ProdError {
    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Core(#[from] sarsim_core::Error),

    #[error("bad manifest {path}: {reason}")]
    Manifest { path: PathBuf, reason: String },

    #[error("path collision: {0}")]
    Collision(String),

    #[error("chip dimensions differ: {0}×{1} vs {2}×{3}")]
    DimensionMismatch(usize, usize, usize, usize),

    #[error("job {job} failed: {reason}")]
    JobFailed { job: String, reason: String },
}

impl ProdError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        ProdError::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code: 1 for configuration problems, 2 when production
    /// stopped on a failed job.
    pub fn exit_code(&self) -> i32 {
        match self {
            ProdError::JobFailed { .. } => 2,
            _ => 1,
        }
    }
}
