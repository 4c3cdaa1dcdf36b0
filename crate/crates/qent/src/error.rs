use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("config: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {source}")]
    Json {
        path: PathBuf,
        line: usize,
        #[source]
        source: serde_json::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("{path}: {reason}")]
    Format { path: PathBuf, reason: String },

    #[error(transparent)]
    Core(#[from] qent_core::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code: 2 for bad input or configuration, 3 for numerical
    /// failures, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        use qent_core::Error as C;
        match self {
            Error::Config(_) | Error::Json { .. } | Error::Format { .. } | Error::Csv { .. } => 2,
            Error::Io { .. } => 1,
            Error::Core(e) => match e {
                C::InvalidParameter { .. }
                | C::ModelMismatch { .. }
                | C::NotHammingNeighbors { .. }
                | C::DimensionMismatch { .. }
                | C::AsymmetricTable { .. }
                | C::NegativeVariance { .. }
                | C::InvalidWindow { .. } => 2,
                _ => 3,
            },
        }
    }
}
