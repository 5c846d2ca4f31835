//! Error classification for the command line: invalid input versus
//! failures while running.

use fpp_core::Error as CoreError;

#[derive(Debug, thiserror::Error)]
pub enum LabError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    Runtime(String),
}

pub type LabResult<T> = Result<T, LabError>;

impl LabError {
    pub fn config(msg: impl Into<String>) -> Self {
        LabError::Config(msg.into())
    }

    /// Exit status: 2 for configuration problems, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.is_config() {
            2
        } else {
            1
        }
    }

    /// Errors traceable to the supplied parameters rather than to the run.
    pub fn is_config(&self) -> bool {
        match self {
            LabError::Config(_) => true,
            LabError::Core(e) => matches!(
                e,
                CoreError::ConfigInvalid(_)
                    | CoreError::InvalidSpec(_)
                    | CoreError::InvalidBox(_)
                    | CoreError::InvalidParameter(_)
                    | CoreError::InvalidDelta
                    | CoreError::InvalidPcTable(_)
                    | CoreError::UnknownDimension(_)
                    | CoreError::OutOfBox
                    | CoreError::SamePosition
                    | CoreError::UnboundedWeights
            ),
            _ => false,
        }
    }

    pub fn kind(&self) -> &'static str {
        if self.is_config() {
            "config_invalid"
        } else {
            "runtime_failure"
        }
    }
}
