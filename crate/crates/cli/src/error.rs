use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] swave_core::Error),
    #[error("invalid plan: {0}")]
    InvalidPlan(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("sample {sample} failed: {context}")]
    Study { sample: usize, context: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code: 2 for configuration/validation problems, 3 for
    /// runtime failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::InvalidPlan(_) | Error::Json(_) => 2,
            Error::Core(swave_core::Error::NonConvergence { .. }) => 3,
            Error::Core(_) => 2,
            Error::InsufficientData(_) => 3,
            Error::Study { .. } | Error::Io(_) | Error::Format(_) => 3,
        }
    }
}
