//! Crate-wide error type.

use std::fmt;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug)]
pub enum Error {
    /// Operand shapes are incompatible for the named operation.
    ShapeMismatch {
        op: &'static str,
        lhs: Vec<usize>,
        rhs: Vec<usize>,
    },
    /// Time series shorter than the convolution kernel.
    SeriesTooShort { len: usize, kernel: usize },
    /// Backward pass requested on a non-scalar value.
    NotScalar { shape: Vec<usize> },
    /// A numeric hyperparameter is out of its valid range.
    InvalidParameter(String),
    /// NaN encountered in gradients at the given optimizer step.
    PoisonedGradient { step: u64 },
    /// Model parameters contain non-finite values.
    PoisonedModel(String),
    /// NaN loss during training at the given epoch/batch.
    NanLoss { epoch: usize, batch: usize },
    /// Simulator state became non-finite at the given step.
    SimulationDiverged { step: usize },
    /// Closed-loop rollout left the sanity bounds at the given step.
    RolloutDiverged { step: usize },
    /// Requested prediction horizon does not fit in the episode.
    HorizonTooLong { requested: usize, max: usize },
    /// Natural-skip loss is zero, normalized loss undefined.
    NormalizationUndefined,
    /// Invalid run configuration (bad field value, dimension mismatch, ...).
    Config(String),
    /// Malformed artifact file (bad magic, version, truncation).
    Format(String),
    Io(std::io::Error),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::ShapeMismatch { op, lhs, rhs } => {
                write!(f, "{op}: incompatible shapes {lhs:?} and {rhs:?}")
            }
            Error::SeriesTooShort { len, kernel } => {
                write!(f, "series length {len} shorter than kernel size {kernel}")
            }
            Error::NotScalar { shape } => {
                write!(f, "backward requires a scalar loss, got shape {shape:?}")
            }
            Error::InvalidParameter(msg) => write!(f, "invalid parameter: {msg}"),
            Error::PoisonedGradient { step } => {
                write!(f, "NaN in gradients at optimizer step {step}")
            }
            Error::PoisonedModel(msg) => write!(f, "non-finite model parameters: {msg}"),
            Error::NanLoss { epoch, batch } => {
                write!(f, "NaN loss at epoch {epoch}, batch {batch}")
            }
            Error::SimulationDiverged { step } => {
                write!(f, "simulation diverged at step {step}")
            }
            Error::RolloutDiverged { step } => {
                write!(f, "rollout diverged at step {step}")
            }
            Error::HorizonTooLong { requested, max } => {
                write!(f, "horizon {requested} too long, max feasible is {max}")
            }
            Error::NormalizationUndefined => {
                write!(f, "natural-skip loss is zero, normalized loss undefined")
            }
            Error::Config(msg) => write!(f, "config error: {msg}"),
            Error::Format(msg) => write!(f, "format error: {msg}"),
            Error::Io(e) => write!(f, "I/O error: {e}"),
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::Io(e) => Some(e),
            _ => None,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e)
    }
}
