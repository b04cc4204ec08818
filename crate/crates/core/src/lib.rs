//! Numerical foundation for the vtu segmentation toolkit: a dense tensor, a
//! tape-based reverse-mode autodiff engine generic over f32/f64, the op set
//! needed by convolutional encoder-decoder models with attention, exact
//! distance transforms, and the toolkit's file formats.

pub mod edt;
pub mod error;
pub mod gradcheck;
pub mod io;
pub mod mask;
mod ops;
pub mod rng;
pub mod scalar;
pub mod shape;
pub mod tape;
pub mod tensor;
pub mod video;

pub use error::{CoreError, CoreResult};
pub use gradcheck::{grad_check, GradCheckConfig, GradCheckReport};
pub use mask::Mask;
pub use scalar::Scalar;
pub use tape::{Tape, VarId};
pub use tensor::Tensor;
pub use video::{FrameStack, MaskPair};
