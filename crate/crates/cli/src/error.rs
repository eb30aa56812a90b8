use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("parse error at row {row}, column {column}: {message}")]
    Parse { row: usize, column: usize, message: String },
    #[error("target column '{0}' not found in header")]
    MissingTarget(String),
    #[error("{block}: {source}")]
    Block {
        block: String,
        #[source]
        source: dedact::Error,
    },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;

pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;

impl CliError {
    pub fn block(block: impl Into<String>) -> impl FnOnce(dedact::Error) -> Self {
        let block = block.into();
        move |source| CliError::Block { block, source }
    }

    pub fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Self {
        let path = path.into();
        move |source| CliError::Io { path, source }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Data(_) | CliError::Parse { .. } | CliError::MissingTarget(_) | CliError::Io { .. } => {
                EXIT_DATA
            }
            CliError::Block { source, .. } => core_exit_code(source),
        }
    }
}

/// Exit code class of a library error.
pub fn core_exit_code(e: &dedact::Error) -> i32 {
    use dedact::Error::*;
    match e {
        SingularDesign { .. } | SingularConditioning | InvalidCovariance(_) => EXIT_NUMERICAL,
        InvalidData(_) | InsufficientRows { .. } | DimensionMismatch(_) => EXIT_DATA,
        IndexOutOfRange { .. }
        | DisjointnessViolation(_)
        | TooManyPlayers { .. }
        | CyclicGraph(_)
        | InvalidScm(_)
        | InvalidArgument(_) => EXIT_CONFIG,
    }
}
