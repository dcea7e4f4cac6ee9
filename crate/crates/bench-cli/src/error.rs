use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("invalid experiment spec: {0}")]
    Spec(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed results file {path}: {message}")]
    Results { path: PathBuf, message: String },
}

impl BenchError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code: 2 for spec errors, 3 for I/O errors.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Spec(_) => 2,
            Self::Io { .. } | Self::Results { .. } => 3,
        }
    }
}

impl From<hpmc::Error> for BenchError {
    fn from(e: hpmc::Error) -> Self {
        Self::Spec(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, BenchError>;
