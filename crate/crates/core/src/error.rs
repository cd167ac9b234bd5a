use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = SoccerError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum SoccerError {
    #[error("expected {expected} actions (one per active agent), got {got}")]
    ActionCountMismatch { expected: usize, got: usize },

    #[error("sequence length mismatch: {0}")]
    LengthMismatch(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("could not place {agents} agents without overlap after {attempts} attempts")]
    SpawnFailed { agents: usize, attempts: usize },

    #[error("checkpoint {path}: {reason}")]
    Checkpoint { path: PathBuf, reason: String },

    #[error("non-finite loss encountered during update (epoch {epoch}, minibatch {minibatch})")]
    NonFiniteLoss { epoch: usize, minibatch: usize },

    #[error("replay diverged at record {record}: {detail}")]
    ReplayMismatch { record: usize, detail: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error("config parse error: {0}")]
    Toml(#[from] toml::de::Error),
}
