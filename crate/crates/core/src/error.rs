use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),

    #[error("validation error: {0}")]
    Validation(String),

    #[error("constraint error: {0}")]
    Constraint(String),

    #[error("lexicalization error: {0}")]
    Lexicalization(String),

    #[error("dimension error: expected {expected}, got {got} in {context}")]
    Dimension {
        expected: String,
        got: String,
        context: String,
    },

    #[error("contract error: {0}")]
    Contract(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn dimension(context: impl Into<String>, expected: impl Into<String>, got: impl Into<String>) -> Self {
        Error::Dimension {
            expected: expected.into(),
            got: got.into(),
            context: context.into(),
        }
    }
}
