use std::path::PathBuf;

use pathograph_core::Error as CoreError;

/// Failure classes, each with its own process exit code.
#[derive(Debug, thiserror::Error)]
pub enum AppError {
    #[error("config: {0}")]
    Config(String),
    #[error("data: {0}")]
    Data(String),
    #[error("numerical: {0}")]
    Numerical(String),
    #[error("io: {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl AppError {
    pub fn exit_code(&self) -> u8 {
        match self {
            AppError::Config(_) => 2,
            AppError::Data(_) | AppError::Io { .. } => 3,
            AppError::Numerical(_) => 4,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            AppError::Config(_) => "config",
            AppError::Data(_) => "data",
            AppError::Numerical(_) => "numerical",
            AppError::Io { .. } => "io",
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        AppError::Io { path: path.into(), source }
    }

    /// One JSON object on one line, for stderr.
    pub fn diagnostic(&self) -> String {
        serde_json::json!({
            "error": self.kind(),
            "exit_code": self.exit_code(),
            "message": self.to_string(),
        })
        .to_string()
    }
}

impl From<CoreError> for AppError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::InvalidSpec(_) => AppError::Config(e.to_string()),
            CoreError::NumericalFailure(_) | CoreError::AucUndefined => AppError::Numerical(e.to_string()),
            _ => AppError::Data(e.to_string()),
        }
    }
}

pub type AppResult<T> = Result<T, AppError>;
