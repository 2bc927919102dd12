use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// A violated dataset or input invariant.
///
/// `subject` names the offending entity (usually a participant id) and
/// `field` is a JSON-pointer-like path into the dataset document.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{kind} at {subject}{field}: {detail}")]
pub struct ValidationError {
    pub kind: &'static str,
    pub subject: String,
    pub field: String,
    pub detail: String,
}

impl ValidationError {
    pub fn new(
        kind: &'static str,
        subject: impl Into<String>,
        field: impl Into<String>,
        detail: impl Into<String>,
    ) -> Self {
        Self {
            kind,
            subject: subject.into(),
            field: field.into(),
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {what} (expected {expected}, got {actual})")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("unknown value id `{0}`")]
    UnknownValue(String),

    #[error("unknown option id `{0}`")]
    UnknownOption(String),

    #[error("invalid ranking: {0}")]
    InvalidRanking(String),

    #[error("invalid pipeline order: {0}")]
    InvalidPipeline(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error(transparent)]
    Validation(#[from] ValidationError),

    #[error("{} validation errors; first: {}", .0.len(), .0[0])]
    ValidationMany(Vec<ValidationError>),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("classifier is not fitted")]
    NotFitted,

    #[error("ground-truth label store missing for motivation {0}")]
    MissingGroundTruth(usize),

    #[error("parse error in {path}: {detail}")]
    Parse { path: PathBuf, detail: String },

    #[error("unsupported schema `{found}` (expected `{expected}`)")]
    Schema { expected: String, found: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn parse(path: impl Into<PathBuf>, detail: impl ToString) -> Self {
        Error::Parse {
            path: path.into(),
            detail: detail.to_string(),
        }
    }

    /// True for errors caused by invalid user input (bad files, bad flags,
    /// violated invariants) as opposed to runtime failures.
    pub fn is_validation(&self) -> bool {
        !matches!(self, Error::Io { .. } | Error::NotFitted)
    }
}

pub(crate) fn dim_check(what: &'static str, expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            what,
            expected,
            actual,
        })
    }
}
