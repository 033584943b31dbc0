use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid support: lo[{dim}]={lo} must be < hi[{dim}]={hi}")]
    InvalidSupport { dim: usize, lo: f64, hi: f64 },

    #[error("invalid distribution parameter in dimension {dim}: {reason}")]
    InvalidParams { dim: usize, reason: String },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("distribution families do not match")]
    FamilyMismatch,

    #[error("distribution supports do not match")]
    SupportMismatch,

    #[error("value {value} outside support in dimension {dim}")]
    OutOfSupport { dim: usize, value: f64 },

    #[error("rejection sampling exceeded {cap} retries in dimension {dim}")]
    RejectionCapExceeded { dim: usize, cap: usize },

    #[error("record list is empty")]
    EmptyRecords,

    #[error("record without boundary tag passed to a boundary update")]
    UntaggedRecord,

    #[error("unknown success predicate id: {id}")]
    UnknownPredicate { id: String },

    #[error("start distribution infeasible (estimated success {estimated:.4} < alpha {alpha:.4}); run the backup step first")]
    InfeasibleStart { estimated: f64, alpha: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("environment feasibility requires 0 < a_max <= f_g, got a_max={a_max}, f_g={f_g}")]
    InfeasibleActionBound { a_max: f64, f_g: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
