use thiserror::Error;

/// Errors reported by the library.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("syntax error at offset {pos}: {msg}")]
    Syntax { pos: usize, msg: String },

    #[error("unknown atom `{0}`")]
    UnknownAtom(String),

    #[error("invalid alphabet: {0}")]
    Alphabet(String),

    #[error("term is outside the restricted syntax: {0}")]
    NotTermForm(String),

    #[error("fragment violation: {0}")]
    Fragment(String),

    #[error("size limit exceeded: {0}")]
    TooLarge(String),

    #[error("invalid structure: {0}")]
    Structure(String),

    #[error("graph is not edge-saturated: {0}")]
    NotSaturated(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("grammar error on line {line}: {msg}")]
    Grammar { line: usize, msg: String },

    #[error("invalid letter `{0}`")]
    Letter(String),

    #[error("json: {0}")]
    Json(String),

    #[error("internal check failed: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Json(e.to_string())
    }
}
