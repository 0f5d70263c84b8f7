use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A line that is not valid JSON, or does not match the record schema.
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },

    /// A well-formed record that breaks a data invariant.
    #[error("line {line}: record '{record_id}': field '{field}': {reason}")]
    InvalidRecord {
        line: usize,
        record_id: String,
        field: &'static str,
        reason: String,
    },

    #[error("line {line}: duplicate record id '{record_id}'")]
    DuplicateRecord { line: usize, record_id: String },

    #[error("empty sample: {0}")]
    EmptySample(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("role mismatch for {slot}: expected {expected}, found {found}")]
    RoleMismatch {
        slot: &'static str,
        expected: &'static str,
        found: String,
    },

    #[error("dataset mismatch: {left} vs {right}")]
    DatasetMismatch { left: String, right: String },

    /// The metric depends on the retrained reference model, which was not supplied.
    #[error("{metric} requires retrained model (M_r) inputs: {detail}")]
    RequiresRetrained { metric: String, detail: String },

    #[error("missing field '{field}' required by {context}")]
    MissingField {
        field: &'static str,
        context: String,
    },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("configuration error: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn malformed(line: usize, message: impl Into<String>) -> Self {
        Error::Malformed {
            line,
            message: message.into(),
        }
    }

    pub(crate) fn invalid(
        line: usize,
        record_id: &str,
        field: &'static str,
        reason: impl Into<String>,
    ) -> Self {
        Error::InvalidRecord {
            line,
            record_id: record_id.to_string(),
            field,
            reason: reason.into(),
        }
    }
}
