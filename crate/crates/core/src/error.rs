use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid data: {0}")]
    InvalidData(String),
    #[error("index {index} out of range for {len} columns")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("sets must be disjoint: {0}")]
    DisjointnessViolation(String),
    #[error("design matrix is numerically singular (condition number {condition:e})")]
    SingularDesign { condition: f64 },
    #[error("need at least {needed} rows, got {got}")]
    InsufficientRows { needed: usize, got: usize },
    #[error("conditioning covariance is numerically singular")]
    SingularConditioning,
    #[error("invalid covariance: {0}")]
    InvalidCovariance(String),
    #[error("exact Shapley solver supports at most {max} players, got {got}")]
    TooManyPlayers { max: usize, got: usize },
    #[error("graph contains a cycle through node '{0}'")]
    CyclicGraph(String),
    #[error("invalid structural causal model: {0}")]
    InvalidScm(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
