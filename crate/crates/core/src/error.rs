use thiserror::Error;

/// Errors produced across the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is singular")]
    SingularMatrix,

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("domain of size {size} exceeds the dense cap of {cap} (set PRIVCONE_MAX_DIM to raise it)")]
    DomainTooLarge { size: usize, cap: usize },

    #[error("randomized response at p = 1/2 is singular: outputs are independent of inputs and attackers learn nothing")]
    SingularAtHalf,

    #[error("duplicate label `{0}`")]
    DuplicateLabel(String),

    #[error("column `{column}` is not a probability distribution: {reason}")]
    NotStochastic { column: String, reason: String },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dataset order mismatch: {0}")]
    OrderMismatch(String),

    #[error("output has zero probability under the prior")]
    ZeroEvidence,

    #[error("unknown tuple value or dataset `{0}`")]
    UnknownTupleValue(String),

    #[error("constraint has no nonzero coefficient")]
    AllZero,

    #[error("window half-width {half_width} leaves tail mass {tail_mass:e} above tolerance {tolerance:e}")]
    WindowTooSmall {
        half_width: usize,
        tail_mass: f64,
        tolerance: f64,
    },

    #[error("characteristic function nearly vanishes (min |f^| = {min_abs:e}); inverse may not be summable")]
    NearSingularTransform { min_abs: f64 },

    #[error("derivation incomplete, missing constraints: {missing:?}")]
    IncompleteDerivation { missing: Vec<String> },

    #[error("relation `{0}` is not supported here")]
    UnsupportedRelation(&'static str),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
