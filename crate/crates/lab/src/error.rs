use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum LabError {
    /// Invalid or unreadable configuration; `field` is a JSON path such as
    /// `Sigma_w[1][0]`, or the file path when the file itself is the problem.
    #[error("config error at `{field}`: {message}")]
    Config { field: String, message: String },
    #[error(transparent)]
    Core(#[from] slr_core::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl LabError {
    pub fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        LabError::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        LabError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn is_config(&self) -> bool {
        matches!(self, LabError::Config { .. })
    }

    /// Process exit code: 1 for configuration problems, 2 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.is_config() {
            1
        } else {
            2
        }
    }
}

pub type Result<T, E = LabError> = std::result::Result<T, E>;
