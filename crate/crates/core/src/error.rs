use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Coarse classification used by front ends to pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    Usage,
    Data,
    Numerical,
}

impl ErrorCategory {
    pub fn as_str(self) -> &'static str {
        match self {
            ErrorCategory::Usage => "usage",
            ErrorCategory::Data => "data",
            ErrorCategory::Numerical => "numerical",
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("least-squares system is rank deficient (column {column}, |r_kk| = {pivot:.3e}, tolerance {tolerance:.3e})")]
    RankDeficient {
        column: usize,
        pivot: f64,
        tolerance: f64,
    },

    #[error("index out of range: {index} (length {len})")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("soft permutation has no accumulated samples")]
    EmptyAccumulator,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid group bounds: {0}")]
    InvalidBounds(String),

    #[error("invalid group count {groups} for {rows} rows")]
    InvalidG { groups: usize, rows: usize },

    #[error("invalid character {ch:?} at row {row}, position {position}")]
    InvalidAlphabet {
        row: usize,
        position: usize,
        ch: char,
    },

    #[error("labels are degenerate (all equal to {0})")]
    DegenerateLabels(f64),

    #[error("non-finite value {value} at row {row}, column {column}")]
    NonFinite {
        row: usize,
        column: usize,
        value: f64,
    },

    #[error("{path}: row {row}, column {column:?}: {message}")]
    Parse {
        path: PathBuf,
        row: usize,
        column: String,
        message: String,
    },

    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

impl Error {
    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::InvalidConfig(_) | Error::InvalidG { .. } => ErrorCategory::Usage,
            Error::RankDeficient { .. } | Error::EmptyAccumulator => ErrorCategory::Numerical,
            _ => ErrorCategory::Data,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn csv(path: impl Into<PathBuf>, source: csv::Error) -> Self {
        Error::Csv {
            path: path.into(),
            source,
        }
    }
}

pub(crate) fn ensure_len(what: &str, expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch(format!(
            "{what}: expected length {expected}, got {got}"
        )))
    }
}
