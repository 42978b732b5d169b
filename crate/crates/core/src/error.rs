use thiserror::Error;

/// Errors raised by the streaming engine, its evaluators and its file formats.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("coordinate {coordinate} = {value} lies outside [0, 1]")]
    OutOfDomain { coordinate: usize, value: f64 },

    #[error("point has {got} coordinates, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("level {level} exceeds the supported depth {max}")]
    LevelTooDeep { level: usize, max: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid state: {0}")]
    State(String),

    #[error("invalid input: {0}")]
    Input(String),

    #[error("tree has no mass to sample from (root count {0})")]
    DegenerateGenerator(f64),

    #[error("transport support of {cells} cells exceeds the limit of {limit}; use a coarser level")]
    SupportTooLarge { cells: usize, limit: usize },

    #[error("malformed tree file at line {line}: {reason}")]
    TreeFormat { line: usize, reason: String },
}

pub type Result<T> = std::result::Result<T, Error>;
