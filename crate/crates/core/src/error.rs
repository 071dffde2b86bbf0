use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("input shape mismatch: expected {expected} values, got {actual}")]
    Shape { expected: usize, actual: usize },

    #[error("word length {actual} does not match configured length {expected}")]
    WordLength { expected: usize, actual: usize },

    #[error("invalid symbol envelope at position {0}: min exceeds max")]
    InvalidEnvelope(usize),

    #[error("stream point out of order: seq {got} after {last}")]
    OutOfOrder { last: u64, got: u64 },

    #[error("{path}:{line}: {msg}")]
    Parse { path: PathBuf, line: usize, msg: String },

    #[error("word {word} lies outside MBR range [{lo}, {hi}]")]
    RangeViolation { word: String, lo: String, hi: String },

    #[error("MBR range [{lo}, {hi}] already present in the index")]
    DuplicateKey { lo: String, hi: String },

    #[error("MBR range [{lo}, {hi}] overlaps an indexed range")]
    OverlappingRange { lo: String, hi: String },

    #[error("MBR capacity {capacity} exceeded")]
    CapacityExceeded { capacity: usize },

    #[error("catalog file: {0}")]
    Catalog(String),

    #[error("dataset too short: {required} points required, {available} available")]
    DatasetTooShort { required: usize, available: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
