use std::io;

use thiserror::Error;

/// Errors produced by the entity-graph pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("invalid parameter `{name}`: {reason}")]
    Parameter { name: &'static str, reason: String },

    #[error("corpus contains no valid threads")]
    EmptyCorpus,

    #[error("invalid entity id {0:?}")]
    InvalidEntityId(String),

    #[error("gazetteer line {line}: {reason}")]
    Gazetteer { line: usize, reason: String },

    #[error("embedding line {line}: {reason}")]
    Embedding { line: usize, reason: String },

    #[error("graph is already star-expanded")]
    AlreadyExpanded,

    #[error("graph must be star-expanded first")]
    NotExpanded,

    #[error("corpus label {0:?} present in both graphs")]
    LabelCollision(String),

    #[error("vertex {0} not found")]
    UnknownVertex(String),

    #[error("not enough threads: {threads} threads for {folds} folds")]
    TooFewThreads { threads: usize, folds: usize },

    #[error("layout does not match graph: {0}")]
    LayoutMismatch(String),

    #[error("schema violation: {0}")]
    Schema(String),
}

impl Error {
    /// Stable machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Io(_) => "io",
            Error::Json(_) => "json",
            Error::Parameter { .. } => "parameter",
            Error::EmptyCorpus => "empty_corpus",
            Error::InvalidEntityId(_) => "invalid_entity_id",
            Error::Gazetteer { .. } => "gazetteer",
            Error::Embedding { .. } => "embedding",
            Error::AlreadyExpanded => "already_expanded",
            Error::NotExpanded => "not_expanded",
            Error::LabelCollision(_) => "label_collision",
            Error::UnknownVertex(_) => "unknown_vertex",
            Error::TooFewThreads { .. } => "too_few_threads",
            Error::LayoutMismatch(_) => "layout_mismatch",
            Error::Schema(_) => "schema",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn parameter(name: &'static str, reason: impl Into<String>) -> Error {
    Error::Parameter { name, reason: reason.into() }
}
