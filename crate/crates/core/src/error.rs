use thiserror::Error;

use crate::trace::TraceSpace;

/// Errors raised by the solvers and data types of this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("grid mismatch: expected {expected} samples, got {found}")]
    GridMismatch { expected: usize, found: usize },

    #[error("size mismatch: at most {max} coefficients accepted, got {found}")]
    SizeMismatch { max: usize, found: usize },

    #[error("trace functions live on different spectral bases")]
    BasisMismatch,

    #[error("mode index {index} outside 1..={count}")]
    ModeOutOfRange { index: usize, count: usize },

    #[error("expected a trace in {expected:?}, got {found:?}")]
    WrongSpace { expected: TraceSpace, found: TraceSpace },

    #[error("noise support is empty")]
    EmptySupport,

    #[error("spectral basis too small: cutoff needs more than {available} modes (requested {needed})")]
    BasisTooSmall { needed: usize, available: usize },

    #[error("point {point:?} lies outside the cylinder")]
    PointOutside { point: Vec<f64> },

    #[error("singular system: pivot {pivot} = {value:e}")]
    SingularSystem { pivot: usize, value: f64 },

    #[error("SVD failure: {0}")]
    SvdFailure(String),

    #[error("no convergence after {iterations} iterations (last residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("nonlinearity violates its a-priori class: {0}")]
    LipschitzViolation(String),

    #[error("energy {energy:e} exceeds the a-priori bound {bound:e}")]
    EnergyBoundExceeded { energy: f64, bound: f64 },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
}

impl Error {
    /// Whether the error signals a numerical failure rather than bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NonConvergence { .. } | Error::SingularSystem { .. } | Error::SvdFailure(_)
        )
    }
}

pub type Result<R, E = Error> = std::result::Result<R, E>;
