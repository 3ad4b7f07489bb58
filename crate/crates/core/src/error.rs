use thiserror::Error;

/// Errors produced by the exact-arithmetic and harness layers.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("integers {0} and {1} are not coprime")]
    NotCoprime(String, String),
    #[error("matrix is {rows}x{cols}, expected a square matrix")]
    NotSquare { rows: usize, cols: usize },
    #[error("determinant {0} is not +1 or -1")]
    NotUnimodular(String),
    #[error("matrix has trivial integer kernel")]
    TrivialKernel,
    #[error("vector entries have gcd {0}, expected 1")]
    NotPrimitive(String),
    #[error("no unimodular completion with determinant +1 exists in dimension 1 for {0}")]
    NoPositiveCompletion(String),
    #[error("matrix is neither unipotent nor negative-unipotent")]
    NotUnipotent,
    #[error("matrix is already upper triangular (lower-left entry is zero)")]
    AlreadyTriangular,
    #[error("matrix is not upper triangular with a constant +1 or -1 diagonal")]
    NotUpperUnipotent,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("operation requires dimension {expected}, got {got}")]
    WrongDimension { expected: usize, got: usize },
    #[error("precision {given} bits is below the required {required} bits")]
    InsufficientPrecision { required: u64, given: u64 },
    #[error("exact engine unavailable: {0}")]
    EngineUnavailable(String),
    #[error("weight sequence covers n <= {available}, but {requested} terms were requested")]
    SequenceTooShort { available: u64, requested: u64 },
    #[error("|S_N| = {magnitude} exceeds the triangle bound {bound} at N = {n}")]
    BoundViolated { n: u64, magnitude: String, bound: String },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
