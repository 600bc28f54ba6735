use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = HarnessError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Core(#[from] frost_core::Error),
    #[error("invalid config `{field}`: {reason}")]
    Config { field: String, reason: String },
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("{}: {source}", path.display())]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{}: {source}", path.display())]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("{}: {source}", path.display())]
    Toml { path: PathBuf, source: toml::de::Error },
}

impl HarnessError {
    pub(crate) fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        HarnessError::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }
}
