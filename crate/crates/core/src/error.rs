use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("invalid document {doc}, sentence {sentence}: {msg}")]
    Validation {
        doc: String,
        sentence: usize,
        msg: String,
    },

    #[error("duplicate document id: {0}")]
    DuplicateId(String),

    #[error("unknown label {label:?} for document {doc}")]
    UnknownLabel { doc: String, label: String },

    #[error("document {0} has no label")]
    Unlabeled(String),

    #[error("class {label:?} has {count} document(s); at least {needed} required")]
    ClassTooSmall {
        label: String,
        count: usize,
        needed: usize,
    },

    #[error("fraction {0} out of range")]
    Fraction(f64),

    #[error("lexicon: {0}")]
    Lexicon(String),

    #[error("missing {what} for document(s): {}", ids.join(", "))]
    Missing {
        what: &'static str,
        ids: Vec<String>,
    },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
