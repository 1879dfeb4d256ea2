use thiserror::Error;

use crate::lp::LpError;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid box: {0}")]
    InvalidBox(String),

    #[error("degree {requested:?} is below the polynomial degree {required:?}")]
    DegreeTooSmall { requested: Vec<u32>, required: Vec<u32> },

    #[error("unsupported degree: {0}")]
    UnsupportedDegree(String),

    #[error("point {0:?} lies outside the unit box")]
    OutsideUnitBox(Vec<f64>),

    #[error("index out of range: {0}")]
    IndexOutOfRange(String),

    #[error("box too small to split (widest edge {0:e})")]
    BoxTooSmall(f64),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("resource exhausted: {0}")]
    ResourceExhausted(String),

    #[error("relaxation is infeasible: the constraints exclude the whole box")]
    InfeasibleRelaxation,

    #[error("relaxation is unbounded")]
    UnboundedRelaxation,

    #[error("LP solver failed: {0}")]
    Lp(#[from] LpError),

    #[error("problem file: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
