use std::path::PathBuf;

use thiserror::Error;

/// Broad failure category, used by the command-line front end to pick an
/// exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Data,
    Invariant,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("missing input file {file}")]
    MissingFile { file: String },

    #[error("header mismatch in {file}: expected [{expected}], found [{found}]")]
    HeaderMismatch {
        file: String,
        expected: String,
        found: String,
    },

    #[error("{file}: row {row}, column {column}: {message}")]
    Cell {
        file: String,
        row: u64,
        column: String,
        message: String,
    },

    #[error("{file}: {bad} malformed rows exceed the budget of {budget}; first: {first}")]
    BadRowBudget {
        file: String,
        bad: usize,
        budget: usize,
        first: String,
    },

    #[error("unknown course/semester {course_id}/{semester_id}; available: {available}")]
    UnknownCourse {
        course_id: String,
        semester_id: String,
        available: String,
    },

    #[error(
        "feature vocabulary mismatch; only in model: [{only_model}], only in input: [{only_input}]"
    )]
    VocabularyMismatch {
        only_model: String,
        only_input: String,
    },

    #[error("invalid data: {0}")]
    Data(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("unsupported format version {found} (expected {expected})")]
    FormatVersion { expected: String, found: String },

    #[error("malformed document: {0}")]
    Decode(String),

    #[error("invariant violated: {0}")]
    Invariant(String),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Config(_) => ErrorKind::Config,
            Error::Invariant(_) => ErrorKind::Invariant,
            _ => ErrorKind::Data,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
