use thiserror::Error;

/// Errors raised by constructions, oracles and claim runners.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("local dimension must be at least 2 (got {0})")]
    InvalidDims(usize),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix is not square: {0}x{1}")]
    NotSquare(usize, usize),

    #[error("matrix is not Hermitian (max asymmetry {0:e})")]
    NotHermitian(f64),

    #[error("vector is not normalized (norm {0})")]
    NotNormalized(f64),

    #[error("input is not a density matrix: {0}")]
    NotAState(String),

    #[error("matrix is not a rank-one projector (deviation {0:e})")]
    NotRankOne(f64),

    #[error("vector is not maximally entangled (reduced-state deviation {0:e})")]
    NotMaximallyEntangled(f64),

    #[error("matrix is not unitary (defect {0:e})")]
    NotUnitary(f64),

    #[error("invalid maximally entangled basis: {0}")]
    InvalidBasis(String),

    #[error("{name} = {value} outside admissible range [{lo}, {hi}]")]
    ParameterOutOfRange {
        name: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("eigensolver failed to converge on a {0}x{0} matrix")]
    EigenFailure(usize),

    #[error("singular value decomposition failed on a {0}x{0} matrix")]
    SvdFailure(usize),

    #[error("membership assertion failed: {0}")]
    MembershipAssertion(String),

    #[error("unknown claim id '{id}'; registered claims: {}", registered.join(", "))]
    UnknownClaim { id: String, registered: Vec<String> },

    #[error("malformed parameter '{name}': {reason}")]
    MalformedParam { name: String, reason: String },
}

pub type Result<T> = std::result::Result<T, Error>;
