use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by loading, validation, and the numerical routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("unexpected end of file")]
    UnexpectedEof,

    #[error("not a {0} file")]
    BadMagic(&'static str),

    #[error("unsupported {kind} file version {found}")]
    BadVersion { kind: &'static str, found: u32 },

    #[error("row {row}: {msg}")]
    Parse { row: usize, msg: String },

    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("row {row}: label {label} out of range [0, {k})")]
    LabelOutOfRange { row: usize, label: usize, k: usize },

    #[error("class {0} has no members")]
    EmptyClass(usize),

    #[error("{what} {index} has zero norm")]
    ZeroNorm { what: &'static str, index: usize },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("config key `{key}`: {msg}")]
    Config { key: String, msg: String },

    #[error("numerical overflow: {0}")]
    Overflow(String),

    #[error("iterate diverged at step {step} (norm {norm:e})")]
    Divergence { step: usize, norm: f64 },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Overflow(_) | Error::Divergence { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
