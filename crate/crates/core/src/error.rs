use thiserror::Error;

#[derive(Debug, Error)]
pub enum LabError {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("contraction failure: {reason} (ratios {ratios:?})")]
    Contraction { reason: String, ratios: Vec<f64> },

    #[error("spectral fault: {0}")]
    Spectral(String),

    #[error("under-resolved: {0}")]
    Resolution(String),
}

impl LabError {
    pub fn param(name: &'static str, reason: impl Into<String>) -> Self {
        LabError::InvalidParameter { name, reason: reason.into() }
    }

    /// Coarse category used for process exit codes.
    pub fn kind(&self) -> ErrorKind {
        match self {
            LabError::InvalidParameter { .. } => ErrorKind::Config,
            LabError::Precondition(_) | LabError::Contraction { .. } | LabError::Spectral(_) => ErrorKind::Math,
            LabError::Resolution(_) => ErrorKind::Resolution,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Math,
    Resolution,
}

pub type Result<T> = std::result::Result<T, LabError>;
