//! Error type shared by every module in the crate.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

/// Errors reported by numeric, model, and sampling operations.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Operand shapes are incompatible for the named operation.
    ShapeMismatch {
        op: &'static str,
        left: Vec<usize>,
        right: Vec<usize>,
    },
    /// A tensor operation produced a NaN or infinity.
    NonFinite { op: &'static str },
    /// Division by a zero scalar.
    DivisionByZero { op: &'static str },
    /// Backward was requested from a non-scalar node.
    NotScalar { shape: Vec<usize> },
    /// Matrix is not symmetric within tolerance.
    NotSymmetric { max_asymmetry: f64 },
    /// Matrix has an eigenvalue below the PSD tolerance.
    NotPositiveSemiDefinite { eigenvalue: f64 },
    /// A caption id not present in the embedding index or condition table.
    UnknownCaption { id: u32 },
    /// Two corpus records share an id.
    DuplicateRecordId { id: u32 },
    /// Training produced a non-finite loss at the given step.
    Diverged { step: usize },
    /// A metric needs more samples than were provided.
    TooFewSamples { needed: usize, got: usize },
    /// A clip does not match the embedder's expected length.
    WrongClipLength { expected: usize, got: usize },
    /// An operation on a zero vector where a direction is required.
    ZeroVector { op: &'static str },
    /// Catch-all for invalid parameters; the message names the constraint.
    InvalidArgument(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::ShapeMismatch { op, left, right } => {
                write!(f, "{op}: shape mismatch {left:?} vs {right:?}")
            }
            Error::NonFinite { op } => write!(f, "{op}: non-finite result"),
            Error::DivisionByZero { op } => write!(f, "{op}: division by zero"),
            Error::NotScalar { shape } => {
                write!(f, "backward: root must be scalar, got shape {shape:?}")
            }
            Error::NotSymmetric { max_asymmetry } => {
                write!(f, "matrix not symmetric (max asymmetry {max_asymmetry:e})")
            }
            Error::NotPositiveSemiDefinite { eigenvalue } => {
                write!(f, "matrix not PSD (eigenvalue {eigenvalue:e})")
            }
            Error::UnknownCaption { id } => write!(f, "unknown caption id {id}"),
            Error::DuplicateRecordId { id } => write!(f, "duplicate record id {id}"),
            Error::Diverged { step } => write!(f, "training diverged at step {step}"),
            Error::TooFewSamples { needed, got } => {
                write!(f, "too few samples: need at least {needed}, got {got}")
            }
            Error::WrongClipLength { expected, got } => {
                write!(f, "wrong clip length: expected {expected}, got {got}")
            }
            Error::ZeroVector { op } => write!(f, "{op}: zero vector"),
            Error::InvalidArgument(msg) => write!(f, "invalid argument: {msg}"),
        }
    }
}

#[cfg(any(test, feature = "std"))]
impl std::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;
