use thiserror::Error;

use crate::format::FloatFormat;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("exact bit count {bits} out of range for {format} (max {max})")]
    BitsOutOfRange {
        bits: u32,
        max: u32,
        format: FloatFormat,
    },
    #[error("format mismatch: {0} vs {1}")]
    FormatMismatch(FloatFormat, FloatFormat),
    #[error("cannot parse {0:?} as a decimal numeral")]
    Parse(String),
    #[error("shape error: {0}")]
    Shape(String),
    #[error("axis {axis} out of range for rank {rank}")]
    InvalidAxis { axis: usize, rank: usize },
    #[error("reduction over an empty axis has no identity for {0}")]
    EmptyReduction(&'static str),
    #[error("malformed XARR1 stream: {0}")]
    Format(String),
    #[error("invalid XARR1 contents: {0}")]
    Validation(String),
    #[error("value {0} out of range: {1}")]
    Range(f64, &'static str),
    #[error("operation {0} has no interval counterpart")]
    Unsupported(String),
    #[error(transparent)]
    Io(#[from] IoError),
}

/// `std::io::Error` is neither `Clone` nor `PartialEq`; keep the kind and message.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("{kind:?}: {message}")]
pub struct IoError {
    pub kind: std::io::ErrorKind,
    pub message: String,
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(IoError {
            kind: e.kind(),
            message: e.to_string(),
        })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
