use thiserror::Error;

use crate::plane::Axis;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected:?}, found {found:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },

    #[error("plane data has {len} values, expected {height}x{width}")]
    BadDataLength {
        height: usize,
        width: usize,
        len: usize,
    },

    #[error("plane must be non-empty")]
    EmptyPlane,

    #[error("non-finite value at index {index}")]
    NonFiniteValue { index: usize },

    #[error("{axis:?} extent {extent} is too small for a 3-tap difference (need >= 3)")]
    AxisTooShort { axis: Axis, extent: usize },

    #[error("image is {height}x{width}, need at least {min}x{min}")]
    ImageTooSmall {
        height: usize,
        width: usize,
        min: usize,
    },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("objective became non-finite at stage {stage}")]
    NonFiniteObjective { stage: usize },

    #[error("fine-tuning loss became non-finite at iteration {iteration}")]
    NonFiniteLoss { iteration: usize },
}

impl Error {
    /// Shorthand for [`Error::InvalidParameter`].
    pub fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
