use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not positive definite: pivot {pivot} is {value:e}")]
    NotPositiveDefinite { pivot: usize, value: f64 },

    #[error("matrix is not symmetric (entry ({row}, {col}))")]
    NotSymmetric { row: usize, col: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is rank deficient")]
    RankDeficient,

    #[error("matrix rows have inconsistent lengths")]
    Ragged,

    #[error("non-finite entry in input")]
    NonFinite,

    #[error("hyperplane normal has zero length")]
    ZeroNormal,

    #[error("invalid dimension {n}: {reason}")]
    InvalidDimension { n: usize, reason: &'static str },

    #[error("axis {axis} out of range for dimension {n}")]
    AxisOutOfRange { axis: usize, n: usize },

    #[error("{what}: n = {n} exceeds the enumeration guard {limit}")]
    GuardExceeded { what: &'static str, n: usize, limit: usize },

    #[error("enumeration budget exceeded: {candidates} candidates > {budget}")]
    BudgetExceeded { candidates: u128, budget: u128 },

    #[error("corner {z:?} is not in C1 for axis {axis}")]
    NotUpperCorner { z: Vec<u8>, axis: usize },

    #[error("lattice is not A_n (Gram matrix differs from J + I)")]
    NotAn,

    #[error("piece with owner {owner:?} and neighbor {neighbor:?} has first normal coordinate {v1:e}")]
    NonPositiveNormal { owner: Vec<u8>, neighbor: Vec<u8>, v1: f64 },

    #[error("margin must be at least 1")]
    InvalidMargin,

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
