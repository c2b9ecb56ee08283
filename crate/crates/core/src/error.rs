use thiserror::Error;

/// Errors raised by the simulator, the learners and the experiment harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("singular geometry: {0}")]
    SingularGeometry(String),

    #[error("shape mismatch: expected length {expected}, got {got}")]
    Shape { expected: usize, got: usize },

    #[error("invalid configuration: {}", .0.join("; "))]
    InvalidConfig(Vec<String>),

    #[error("unknown configuration key `{0}`")]
    UnknownKey(String),

    #[error("config parse error at line {line}, column {column}: {msg}")]
    ConfigParse { line: usize, column: usize, msg: String },

    #[error("episode is finished; call reset before stepping")]
    EpisodeDone,

    #[error("state encoding: {0}")]
    Encoding(String),

    #[error("objective undefined: zero energy denominator")]
    UndefinedObjective,

    #[error("training diverged at episode {episode}: {detail}")]
    Divergence { episode: usize, detail: String },

    #[error("comparison refused: {0}")]
    ComparisonRefused(String),

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
