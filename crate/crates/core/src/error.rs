//! Error type shared across the crate.
//!
//! Variants are grouped by how the CLI maps them to exit codes: usage
//! problems, data/validation problems, and numeric/degeneracy problems.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("format error in {path} at line {line}: {reason}")]
    Format {
        path: String,
        line: usize,
        reason: String,
    },

    #[error("parse error in {path} at line {line}, column {column}: {token:?} is not a number")]
    Parse {
        path: String,
        line: usize,
        column: usize,
        token: String,
    },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("unknown kernel {name:?}; valid names: {valid}")]
    UnknownKernel { name: String, valid: String },

    #[error("size error: {0}")]
    Size(String),

    #[error("index out of bounds: {0}")]
    Bounds(String),

    #[error("contract error: {0}")]
    Contract(String),

    #[error("exact integer overflow: {0}")]
    Overflow(String),

    #[error("refusing {what}: {reason} (use an override to force)")]
    Refused { what: String, reason: String },

    #[error("degenerate statistic: {0}")]
    Degenerate(String),

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("configuration error: {0}")]
    Config(String),
}

impl Error {
    /// CLI exit code: 2 for data/validation problems, 3 for numeric or
    /// degeneracy problems. Usage errors (exit 1) are produced by the
    /// argument parser, not by this type.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Degenerate(_) | Error::Numeric(_) | Error::Overflow(_) => 3,
            _ => 2,
        }
    }
}
