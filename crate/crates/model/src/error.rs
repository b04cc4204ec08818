use thiserror::Error;
use vtu_core::CoreError;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("invalid configuration: {detail}")]
    BadConfig { detail: String },
    #[error("parameter {name:?} registered twice")]
    DuplicateParam { name: String },
    #[error("unknown parameter {name:?}")]
    UnknownParam { name: String },
    #[error("expected a stack of {expected} frames, got {got}")]
    StackLength { expected: usize, got: usize },
    #[error("frame {got:?} does not match configured size {expected}x{expected}")]
    FrameShape { expected: usize, got: Vec<usize> },
}

pub type ModelResult<T> = Result<T, ModelError>;
