use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid layout: {0}")]
    Layout(String),

    #[error("length mismatch: expected {expected} values, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("invalid hyperparameter `{name}`: {reason}")]
    Hyperparameter { name: &'static str, reason: String },

    #[error("invalid schedule: {0}")]
    Schedule(String),

    #[error("unknown optimizer id `{0}`")]
    UnknownOptimizer(String),

    #[error("optimizer state does not match `{0}`")]
    StateMismatch(&'static str),

    #[error("non-finite gradient at index {index} (step {step})")]
    NonFiniteGradient { step: u64, index: usize },

    #[error("non-finite weight produced at index {index} (step {step})")]
    NonFiniteUpdate { step: u64, index: usize },

    #[error("invalid problem: {0}")]
    Problem(String),

    #[error("dataset row {row}: {reason}")]
    Dataset { row: usize, reason: String },

    #[error("config: {0}")]
    Config(String),

    #[error("kernel: {0}")]
    Kernel(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}
