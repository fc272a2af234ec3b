use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = CliError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] techprox_core::Error),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("`{stage}` needs up-to-date outputs of `{required}`; run `techprox {required} --config {config}` first")]
    MissingPredecessor { stage: &'static str, required: &'static str, config: String },

    #[error("another run holds the lock {}; remove it if no run is active", .0.display())]
    Locked(PathBuf),

    #[error("no series for pair {pair}: {reason}")]
    NoSeries { pair: String, reason: String },

    #[error("environment variable {0} must hold a contact email for the works API")]
    MissingContact(&'static str),

    #[error("artifact {}: {reason}", path.display())]
    Artifact { path: PathBuf, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub(crate) fn artifact(path: impl Into<PathBuf>, reason: impl ToString) -> Self {
        CliError::Artifact { path: path.into(), reason: reason.to_string() }
    }
}
