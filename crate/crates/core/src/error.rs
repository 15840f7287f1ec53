use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension {0} is outside the supported range 1..=4")]
    UnsupportedDimension(usize),

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("moment order {order} exceeds the implemented closure (max {max})")]
    OrderTooHigh { order: u32, max: u32 },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("rank-deficient system: rank {rank} of {unknowns} unknowns (smallest singular value {smallest:e})")]
    RankDeficient {
        rank: usize,
        unknowns: usize,
        smallest: f64,
    },

    #[error("unknown/equation count mismatch: {unknowns} unknowns vs {equations} equations")]
    NotSquare { unknowns: usize, equations: usize },

    #[error("no residual minimum below {tolerance:e} in [{lo}, {hi}]; best candidate c = {best_c} with residual {best_residual:e}")]
    NoSolution {
        lo: f64,
        hi: f64,
        tolerance: f64,
        best_c: f64,
        best_residual: f64,
    },

    #[error("vacuum generated: pressure positivity condition violated ({0})")]
    Vacuum(String),

    #[error("simulation diverged at step {step}, node {coords:?}: {reason}")]
    Diverged {
        step: usize,
        coords: Vec<usize>,
        reason: String,
    },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("config error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
