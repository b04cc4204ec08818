use thiserror::Error;

/// Errors raised by tensor construction and tape operations.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CoreError {
    /// Shape implies a different element count than the supplied buffer.
    #[error("shape {shape:?} wants {expected} elements, data has {got}")]
    ShapeDataMismatch {
        shape: Vec<usize>,
        expected: usize,
        got: usize,
    },
    /// Two operand shapes cannot be aligned under trailing-axis broadcasting.
    #[error("shapes {left:?} and {right:?} are not broadcast-compatible")]
    BroadcastMismatch { left: Vec<usize>, right: Vec<usize> },
    /// Inner dimensions disagree for a matrix product.
    #[error("matmul shape mismatch: {left:?} x {right:?}")]
    MatmulMismatch { left: Vec<usize>, right: Vec<usize> },
    /// Operand rank differs from what the operation requires.
    #[error("expected rank {expected}, got shape {shape:?}")]
    RankMismatch { expected: usize, shape: Vec<usize> },
    /// Axis index is not valid for the operand rank.
    #[error("axis {axis} out of range for rank {rank}")]
    AxisOutOfRange { axis: usize, rank: usize },
    /// Reshape target has a different element count than the source.
    #[error("cannot reshape {from:?} into {to:?}: element counts differ")]
    ReshapeNumel { from: Vec<usize>, to: Vec<usize> },
    /// Concatenated operands disagree on an off-axis extent.
    #[error("concat along axis {axis}: {left:?} and {right:?} differ off-axis")]
    ConcatMismatch {
        axis: usize,
        left: Vec<usize>,
        right: Vec<usize>,
    },
    /// Slice window falls outside the operand.
    #[error("slice [{start}, {start}+{len}) exceeds extent {extent} on axis {axis}")]
    SliceOutOfRange {
        axis: usize,
        start: usize,
        len: usize,
        extent: usize,
    },
    /// Square convolutions only accept odd kernel sizes.
    #[error("convolution kernel size {k} must be odd")]
    EvenKernel { k: usize },
    /// Stride or size parameter must be positive.
    #[error("{what} must be positive")]
    NonPositive { what: &'static str },
    /// The convolution output would have no pixels.
    #[error("conv output empty: input {h}x{w}, kernel {k}, stride {stride}, padding {padding}")]
    EmptyConvOutput {
        h: usize,
        w: usize,
        k: usize,
        stride: usize,
        padding: usize,
    },
    /// Channel count is not divisible by the requested group count.
    #[error("{channels} channels not divisible into {groups} groups")]
    BadGroupCount { channels: usize, groups: usize },
    /// Input channels do not match the kernel's channel axis.
    #[error("input has {input} channels but kernel expects {kernel}")]
    ChannelMismatch { input: usize, kernel: usize },
    /// Backward was asked to start from a non-scalar value.
    #[error("backward target must be a scalar, got shape {shape:?}")]
    BackwardNonScalar { shape: Vec<usize> },
    /// The tape was already differentiated; values are stale for a second sweep.
    #[error("tape already replayed; run a new forward pass before backward")]
    TapeConsumed,
    /// An operation needs at least one operand.
    #[error("operation requires at least one input")]
    EmptyInput,
}

pub type CoreResult<T> = Result<T, CoreError>;
