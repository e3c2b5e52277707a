use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error(transparent)]
    Core(#[from] circuit_vi::Error),
    #[error("cannot serialize output: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }

    /// 2 usage, 3 parse, 4 every restart non-finite, 5 size cap, 1 anything else.
    pub fn exit_code(&self) -> i32 {
        use circuit_vi::Error as E;
        match self {
            CliError::Usage(_) | CliError::Core(E::InvalidConfig(_)) => 2,
            CliError::Parse { .. } | CliError::Core(E::Parse(_)) => 3,
            CliError::Core(E::AllRestartsFailed(_)) => 4,
            CliError::Core(E::SizeCap { .. }) => 5,
            _ => 1,
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
