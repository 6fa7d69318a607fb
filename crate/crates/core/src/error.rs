//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by tensor algebra, proximal operators, solvers and I/O.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimMismatch(String),

    #[error("index {index:?} out of bounds for dims {dims:?}")]
    IndexOutOfBounds { dims: Vec<usize>, index: Vec<usize> },

    #[error("invalid permutation {0:?}: must be a bijection on 1..=d")]
    InvalidPermutation(Vec<usize>),

    #[error("mode {mode} out of range for order-{order} tensor")]
    InvalidMode { mode: usize, order: usize },

    #[error("split l={split} out of range 1..={max} for matricization")]
    InvalidSplit { split: usize, max: usize },

    #[error("tensor-ring chain mismatch at core {core}: right rank {right} vs next left rank {left}")]
    ChainMismatch { core: usize, right: usize, left: usize },

    #[error("infeasible tensor-ring rank vector: {0}")]
    InfeasibleRank(String),

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("mask entries must be exactly 0 or 1 (found {0})")]
    NonBinaryMask(f64),

    #[error("zero divisor in elementwise division")]
    ZeroDivisor,

    #[error("reference tensor has zero Frobenius norm")]
    ZeroReference,

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("solver diverged: non-finite iterate at iteration {iteration}")]
    Diverged { iteration: usize },

    #[error("singular value decomposition failed to converge")]
    SvdFailure,

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
