// SPDX-License-Identifier: Apache-2.0

use std::io;

use thiserror::Error;

/// Errors raised while reading S-expressions or source text into a [`TypedTree`].
///
/// [`TypedTree`]: crate::tree::TypedTree
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("invalid node type {label:?}: {reason}")]
    InvalidNodeType { label: String, reason: &'static str },
    #[error("no parser registered for language {0:?}")]
    UnknownLanguage(String),
}

impl ParseError {
    pub(crate) fn syntax(offset: usize, message: impl Into<String>) -> Self {
        ParseError::Syntax {
            offset,
            message: message.into(),
        }
    }

    /// Byte offset of a syntax error, if this is one.
    pub fn offset(&self) -> Option<usize> {
        match self {
            ParseError::Syntax { offset, .. } => Some(*offset),
            _ => None,
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("duplicate exemplar id {0:?}")]
    DuplicateId(String),
    #[error("unknown exemplar id {0:?}")]
    UnknownId(String),
    #[error("candidate position {position} out of range for database of {len} records")]
    PositionOutOfRange { position: usize, len: usize },
    #[error("row index {row} out of range for matrix with {rows} rows")]
    RowOutOfRange { row: usize, rows: usize },
    #[error("bit width mismatch: expected {expected}, got {actual}")]
    WidthMismatch { expected: usize, actual: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("exhaustive search over {combinations} subsets exceeds the limit of {limit}")]
    SearchTooLarge { combinations: u128, limit: u128 },
    #[error("database is empty")]
    EmptyDatabase,
    #[error("embedding dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("corrupt index file: {0}")]
    CorruptIndex(String),
    #[error("{path}: line {line}: {message}")]
    Format { path: String, line: usize, message: String },
    #[error("unknown placeholder {{{0}}} in prompt template")]
    UnknownPlaceholder(String),
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// True for errors caused by a broken internal invariant rather than bad input.
    pub fn is_internal(&self) -> bool {
        matches!(self, Error::Invariant(_))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
