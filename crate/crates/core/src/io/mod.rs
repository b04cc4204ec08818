//! On-disk formats: `.vtt1` raw float tensors and binary (P5) PGM images.

mod pgm;
mod vtt1;

pub use pgm::{read_gray_pgm, read_mask_pgm, write_gray_pgm, write_mask_pgm};
pub use vtt1::{read_vtt1, vtt1_bytes, vtt1_from_bytes, write_vtt1};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum IoError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("bad magic, not a {expected} file")]
    BadMagic { expected: &'static str },
    #[error("malformed {format} data: {detail}")]
    Malformed {
        format: &'static str,
        detail: String,
    },
}

pub type IoResult<T> = Result<T, IoError>;
