use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HarnessError {
    #[error("i/o error on {path}: {reason}")]
    Io { path: String, reason: String },
    #[error("configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] covert_isac::Error),
}

pub type Result<T> = std::result::Result<T, HarnessError>;
