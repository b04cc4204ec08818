use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("invalid scene spec: {detail}")]
    BadSpec { detail: String },

    #[error("invalid snippet length {len}, must be odd and positive")]
    BadSnippetLength { len: usize },

    #[error("split fractions {0:?} must be nonnegative and sum to 1")]
    BadFractions([f64; 3]),

    #[error("manifest problem: {detail}")]
    Manifest { detail: String },

    #[error("dataset file missing or unreadable: {path}")]
    MissingFile { path: PathBuf },

    #[error(transparent)]
    Io(#[from] vtu_core::io::IoError),

    #[error(transparent)]
    File(#[from] std::io::Error),
}

pub type DataResult<T> = Result<T, DataError>;
