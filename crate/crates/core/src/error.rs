use thiserror::Error;

/// Input and contract errors raised by the library.
///
/// Search failures (no witness found, projection not converging) are
/// ordinary results, not errors.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix is empty")]
    Empty,

    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("matrix is not symmetric: entry ({row}, {col}) differs from ({col}, {row})")]
    NotSymmetric { row: usize, col: usize },

    #[error("matrix is not skew-symmetric: entry ({row}, {col}) is not the negative of ({col}, {row})")]
    NotSkew { row: usize, col: usize },

    #[error("odd dimension {0}: a symplectic structure needs even dimension")]
    OddDimension(usize),

    #[error("structure matrix is degenerate (sigma_min / sigma_max = {ratio:e})")]
    DegenerateStructure { ratio: f64 },

    #[error("pencil is degenerate: A and B are linearly dependent")]
    DependentPencil,

    #[error("matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("basis is rank deficient: numerical rank {rank} < {cols} columns")]
    RankDeficientBasis { rank: usize, cols: usize },

    #[error("search budget exhausted after {starts} starts")]
    SearchExhausted { starts: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
