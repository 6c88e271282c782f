use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Error)]
pub enum CmemError {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid specification: {0}")]
    InvalidSpec(String),

    #[error("model is not stationary: {0}")]
    NonStationary(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("singular matrix {0}")]
    Singular(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl CmemError {
    /// True for errors caused by bad input rather than numerical trouble.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            CmemError::InvalidSpec(_)
                | CmemError::NonStationary(_)
                | CmemError::Parse { .. }
                | CmemError::Io(_)
                | CmemError::Domain(_)
                | CmemError::InsufficientData(_)
                | CmemError::Unsupported(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, CmemError>;
