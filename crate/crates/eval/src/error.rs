use thiserror::Error;

#[derive(Debug, Error)]
pub enum EvalError {
    /// Two masks that should describe the same frame differ in size.
    #[error("mask sizes differ: {left_w}x{left_h} vs {right_w}x{right_h}")]
    SizeMismatch {
        left_w: usize,
        left_h: usize,
        right_w: usize,
        right_h: usize,
    },
    /// Surface distances need foreground on both sides.
    #[error("surface distance undefined for an empty mask")]
    EmptyMask,
    /// Label fusion needs at least two raters.
    #[error("label fusion needs at least 2 raters, got {got}")]
    NotEnoughRaters { got: usize },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type EvalResult<T> = Result<T, EvalError>;
