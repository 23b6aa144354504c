use thiserror::Error;

use crate::scenario::ValidationReport;

/// Errors produced by the solvers, codecs and scenario I/O.
#[derive(Debug, Error)]
pub enum Error {
    #[error("scenario failed validation:\n{0}")]
    Invalid(ValidationReport),

    #[error("singular linear system: {0}")]
    SingularSystem(String),

    #[error("unknown agent id {0}")]
    UnknownAgent(u32),

    #[error("agent {agent} is already in state {state}; self-transitions have no rate")]
    SelfTransition { agent: u32, state: usize },

    #[error("index {index} out of range for {capacity} network states")]
    IndexOutOfRange { index: usize, capacity: usize },

    #[error("network has {states} states which exceeds the cap of {cap}")]
    CapacityExceeded { states: u128, cap: usize },

    #[error("integrator could not meet tolerances: {0}")]
    ToleranceNotMet(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid simulation settings: {0}")]
    InvalidSimConfig(String),

    #[error("parse error at {path}: {message}")]
    Parse { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
