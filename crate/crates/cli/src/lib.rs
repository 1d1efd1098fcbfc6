pub mod config;
pub mod output;
pub mod run;
pub mod verify;

pub use config::ExperimentConfig;

use thiserror::Error;

/// Everything the front end can fail with, each with a stable code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] csl_core::Error),
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("unknown check id {0:?}")]
    UnknownCheck(String),
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    pub fn code(&self) -> &'static str {
        match self {
            CliError::Core(e) => e.code(),
            CliError::InvalidConfig(_) => "invalid-config",
            CliError::Io { .. } => "io-error",
            CliError::UnknownCheck(_) => "unknown-check",
            CliError::Usage(_) => "usage",
        }
    }

    /// The one-line machine-readable record printed on failure.
    pub fn to_json(&self) -> String {
        serde_json::json!({ "error": self.code(), "message": self.to_string() }).to_string()
    }

    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
