use thiserror::Error;

/// Errors produced by fallible operations across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension {0} outside supported range 1..={max}", max = crate::blade::MAX_DIM)]
    InvalidDimension(u32),

    #[error("blade id {id} out of range for dimension {dim}")]
    BladeOutOfRange { id: u32, dim: u32 },

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: u32, right: u32 },

    #[error("grade {grade} invalid for dimension {dim}")]
    InvalidGrade { grade: u32, dim: u32 },

    #[error("rank {rank} out of range: C({n},{k}) = {count}")]
    RankOutOfRange {
        n: u32,
        k: u32,
        rank: u64,
        count: u64,
    },

    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: String, got: String },

    #[error("matrix is singular: pivot magnitude {pivot:e} below tolerance {tolerance:e}")]
    SingularMatrix { pivot: f64, tolerance: f64 },

    #[error("cached table for dimension {dim} needs {required} scalars, budget is {budget}")]
    MemoryBudget {
        dim: u32,
        required: u64,
        budget: u64,
    },

    #[error("tree integrity violated: {0}")]
    TreeIntegrity(String),

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("nonpositive value {value} at x = {x}: log-domain fit undefined")]
    NonpositiveSample { x: f64, value: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
