use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch: operands are defined on different grids")]
    GridMismatch,

    #[error("invalid curve: {0}")]
    InvalidCurve(String),

    #[error("empty sample")]
    EmptySample,

    #[error("dimension {d} out of range 1..={max}")]
    DimensionOutOfRange { d: usize, max: usize },

    #[error("basis is not orthonormal: max Gram deviation {deviation:e}")]
    NotOrthonormal { deviation: f64 },

    #[error("rank-deficient sample: {0}")]
    RankDeficient(String),

    #[error("kernel matrix is not positive semidefinite: smallest eigenvalue {min_eigenvalue:e}")]
    NotPsd { min_eigenvalue: f64 },

    #[error("invalid kernel: {0}")]
    InvalidKernel(String),

    #[error("invalid process: {0}")]
    InvalidProcess(String),

    #[error("truncation {requested} exceeds the {available} available eigenpairs")]
    TruncationTooLarge { requested: usize, available: usize },

    #[error("grid does not lie in [0, 1]")]
    GridNotUnitInterval,

    #[error("direction must lie in the open unit ball, got norm {norm}")]
    DirectionOutsideBall { norm: f64 },

    #[error("exponent p must exceed 1, got {0}")]
    InvalidExponent(f64),

    #[error("point coincides with datum {index}")]
    CoincidentDatum { index: usize },

    #[error("solver did not converge after {iterations} iterations (gradient norm {grad_norm:e})")]
    NonConvergence {
        iterations: usize,
        grad_norm: f64,
        last_iterate: Vec<f64>,
    },

    #[error("ill-conditioned matrix (condition number {condition:e}); {suggestion}")]
    IllConditioned { condition: f64, suggestion: String },

    #[error("divergent moment: {0}")]
    DivergentMoment(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
