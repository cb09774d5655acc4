use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    /// The quasi-norm assigned a non-positive distance to two distinct points,
    /// so the origin is not interior to its unit ball.
    #[error("invalid quasi-norm: origin is not interior to the unit ball")]
    InvalidQuasiNorm,

    #[error("degenerate norm: {0}")]
    DegenerateNorm(String),

    #[error("unbalanced transportation instance: supply {supply} != demand {demand}")]
    Unbalanced { supply: u64, demand: u64 },

    #[error("no feasible parameter value")]
    Infeasible,

    #[error("value function is not concave around parameter {0}")]
    NotConcave(i64),

    #[error("contract violation: {0}")]
    Contract(String),
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}

pub(crate) fn contract(msg: impl Into<String>) -> Error {
    Error::Contract(msg.into())
}
