use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    /// A problem tied to one document, named by id.
    #[error("document {id}: {message}")]
    Document { id: String, message: String },

    #[error("corpus error: {0}")]
    Corpus(String),

    #[error("encoder error: {0}")]
    Encoder(String),

    #[error("model error: {0}")]
    Model(String),

    #[error("evaluation error: {0}")]
    Eval(String),

    #[error("config error: {0}")]
    Config(String),

    /// Numeric failure (divergence, NaN inputs, degenerate decompositions).
    #[error("numeric failure: {0}")]
    Numeric(String),
}

impl Error {
    pub fn document(id: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Document {
            id: id.into(),
            message: message.into(),
        }
    }
}
