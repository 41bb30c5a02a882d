use std::path::Path;

use mmimo_core::Error;

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    /// Malformed scenario file or inconsistent flags.
    #[error("{0}")]
    Config(String),

    #[error(transparent)]
    Model(#[from] Error),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl SimError {
    pub fn config(msg: impl Into<String>) -> Self {
        SimError::Config(msg.into())
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        SimError::Io { path: path.display().to_string(), source }
    }

    /// 1 for invalid input, 2 for numerical failures, 3 for I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            SimError::Config(_) => 1,
            SimError::Model(e) => model_exit_code(e),
            SimError::Io { .. } => 3,
        }
    }
}

fn model_exit_code(e: &Error) -> i32 {
    match e {
        Error::Validation(_) | Error::UnsupportedLayout { .. } => 1,
        Error::Trial { source, .. } => model_exit_code(source),
        _ => 2,
    }
}

pub type Result<T> = std::result::Result<T, SimError>;
