use std::path::PathBuf;

use thiserror::Error;

/// Failure of a CLI invocation, carrying the process exit code.
#[derive(Debug, Error)]
pub enum RunError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("{stage}: {source}")]
    Core {
        stage: &'static str,
        #[source]
        source: segen_core::Error,
    },
    #[error("{stage}: {path}: {message}")]
    Data {
        stage: &'static str,
        path: PathBuf,
        message: String,
    },
}

impl RunError {
    pub fn usage(message: impl Into<String>) -> Self {
        RunError::Usage(message.into())
    }

    pub fn data(stage: &'static str, path: impl Into<PathBuf>, message: impl ToString) -> Self {
        RunError::Data {
            stage,
            path: path.into(),
            message: message.to_string(),
        }
    }

    /// 2 for usage errors, 3 for bad input data, 4 for numeric failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Usage(_) => 2,
            RunError::Data { .. } => 3,
            RunError::Core {
                source: segen_core::Error::Numeric(_),
                ..
            } => 4,
            RunError::Core { .. } => 3,
        }
    }
}

/// Tags a core error with the pipeline stage it came from.
pub trait StageExt<T> {
    fn stage(self, stage: &'static str) -> Result<T, RunError>;
}

impl<T> StageExt<T> for segen_core::Result<T> {
    fn stage(self, stage: &'static str) -> Result<T, RunError> {
        self.map_err(|source| RunError::Core { stage, source })
    }
}
