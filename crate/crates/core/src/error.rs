use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A data cell or header could not be ingested.
    #[error("ingestion error at line {line}, column `{column}`: {message}")]
    Ingestion {
        line: usize,
        column: String,
        message: String,
    },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("fitting biomarker `{biomarker}`: {source}")]
    Biomarker {
        biomarker: String,
        #[source]
        source: Box<Error>,
    },

    #[error("fitting error: {0}")]
    Fit(String),

    #[error("likelihood of subject {subject} underflows for every stage")]
    Likelihood { subject: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn precondition(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    /// Attach the biomarker name to an error raised while fitting it.
    pub fn for_biomarker(self, name: &str) -> Self {
        Error::Biomarker {
            biomarker: name.to_string(),
            source: Box::new(self),
        }
    }
}
