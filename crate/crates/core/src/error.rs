use std::io;

use thiserror::Error;

use crate::model::Side;

/// Errors produced anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("entry ({row}, {col}) appears more than once")]
    DuplicateEntry { row: usize, col: usize },

    #[error("entry ({row}, {col}) is outside a {n_rows}x{n_cols} matrix")]
    IndexOutOfRange {
        row: usize,
        col: usize,
        n_rows: usize,
        n_cols: usize,
    },

    #[error("entry ({row}, {col}) has invalid value {value}")]
    InvalidValue { row: usize, col: usize, value: f64 },

    #[error("matrix has an empty dimension")]
    EmptyDimension,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid mean at cell ({row}, {col}): linear predictor {tau}")]
    InvalidMean { row: usize, col: usize, tau: f64 },

    #[error("information matrix is singular after ridge escalation")]
    SingularInformation,

    #[error("shape estimate needs at least two positive entries")]
    TooFewPositives,

    #[error("positive entries have zero variance")]
    ZeroVariance,

    #[error("zero-norm vector")]
    ZeroNorm,

    #[error("index {index} out of range for {side} side of size {len}")]
    BadIndex { side: Side, index: usize, len: usize },

    #[error("every index was skipped during sweep {iteration}")]
    AllIndicesSkipped { iteration: usize },

    #[error("simulated mean at cell ({row}, {col}) is not finite; shrink the parameter ranges")]
    SimulationOverflow { row: usize, col: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Coarse classification used for process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Validation,
    Runtime,
    Io,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Io(_) => ErrorClass::Io,
            Error::InvalidMean { .. }
            | Error::SingularInformation
            | Error::AllIndicesSkipped { .. }
            | Error::SimulationOverflow { .. }
            | Error::TooFewPositives
            | Error::ZeroVariance => ErrorClass::Runtime,
            _ => ErrorClass::Validation,
        }
    }
}
