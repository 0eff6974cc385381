use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    /// A configuration violates a precondition; exit code 2.
    #[error("invalid configuration at {location}: requires {inequality} ({detail})")]
    Config { inequality: String, location: String, detail: String },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Core(#[from] varlex_core::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl HarnessError {
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config { .. } | HarnessError::Parse(_) => 2,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;
