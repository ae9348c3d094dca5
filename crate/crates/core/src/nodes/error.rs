use thiserror::Error;

use crate::model::AttributeError;
use crate::tensor::TensorError;

/// Failure raised by a node while executing one frame.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum NodeError {
    #[error("shape mismatch: expected {expected:?}, got {actual:?}")]
    ShapeMismatch { expected: Vec<usize>, actual: Vec<usize> },
    #[error("rank mismatch: expected rank {expected}, got rank {actual}")]
    RankMismatch { expected: usize, actual: usize },
    #[error("input `{port}` has dtype {actual}, expected {expected}")]
    DTypeMismatch {
        port: String,
        expected: String,
        actual: String,
    },
    #[error("index {index} out of range for {len} atoms")]
    IndexOutOfRange { index: i64, len: usize },
    #[error("color component {value} outside [0, 1]")]
    ComponentOutOfRange { value: f64 },
    #[error("empty range: lo {lo} > hi {hi}")]
    BadRange { lo: f64, hi: f64 },
    #[error("radius scale {value} must be positive")]
    NonPositiveScale { value: f64 },
    #[error("bond joins atom {atom} to itself")]
    SelfBond { atom: i64 },
    #[error("non-finite value")]
    NonFinite,
    #[error("step {step} outside (0, 1]")]
    BadStep { step: f64 },
    #[error("triclinic boxes are not supported by cutoff searches")]
    TriclinicUnsupported,
    #[error("periodic box edge {edge} is shorter than twice the cutoff {cutoff}")]
    BoxTooSmall { edge: f64, cutoff: f64 },
    #[error("hydrogen {atom} has no covalent oxygen")]
    OrphanHydrogen { atom: usize },
    #[error("selection is empty")]
    EmptySelection,
    #[error(transparent)]
    Attribute(#[from] AttributeError),
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error("script: {0}")]
    Script(String),
    #[error("{0}")]
    Invalid(String),
}

impl From<crate::model::TriclinicUnsupported> for NodeError {
    fn from(_: crate::model::TriclinicUnsupported) -> Self {
        NodeError::TriclinicUnsupported
    }
}
