use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("malformed NIfTI header at byte {offset}: {reason}")]
    Format { offset: usize, reason: String },

    #[error("unsupported NIfTI datatype code {code} (expected {expected})")]
    UnsupportedDatatype { code: i16, expected: i16 },

    #[error("gzip-compressed input is not supported: {0}")]
    CompressedInput(PathBuf),

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("incompatible geometry: {0}")]
    Incompatible(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("argument out of domain: {0}")]
    Domain(String),

    #[error("metric table is missing {} entries (first: {})", .0.len(), .0.first().map(String::as_str).unwrap_or("-"))]
    MissingEntries(Vec<String>),

    #[error("no valid placement found after {attempts} attempts")]
    PlacementFailed { attempts: usize },

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("configuration error: {0}")]
    Config(String),
}
