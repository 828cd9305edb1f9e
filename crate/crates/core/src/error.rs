use thiserror::Error;

use crate::scalar::Backend;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("backend mismatch: {left:?} vs {right:?}")]
    BackendMismatch { left: Backend, right: Backend },

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix is singular")]
    SingularMatrix,

    #[error("invalid moment sequence: {0}")]
    InvalidMoment(String),

    #[error("moment m({index}) is unavailable: {reason}")]
    MomentUnavailable { index: usize, reason: String },

    #[error("not exactly representable: {0}")]
    NotExact(String),

    #[error("moment sequences differ: {left} vs {right}")]
    SequenceMismatch { left: String, right: String },

    #[error("empty series")]
    EmptySeries,

    #[error("no exact closed form: {0}")]
    NoExactClosedForm(String),

    #[error("root finder did not converge after {0} iterations")]
    RootFinding(usize),

    #[error("jordan chain construction failed: {0}")]
    ChainConstructionFailed(String),

    #[error("evaluation did not converge: {0}")]
    NotConverged(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error: {0}")]
    Parse(String),
}
