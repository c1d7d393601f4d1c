use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("patents reference unknown domain codes: {}", .0.join(", "))]
    UnknownDomains(Vec<String>),

    #[error("unknown NBER subcategory label {0:?}")]
    UnknownSubcategory(String),

    #[error("duplicate {kind} {key:?}")]
    Duplicate { kind: &'static str, key: String },

    #[error("domain {0} has no member patents")]
    EmptyDomain(String),

    #[error("vocabulary is empty after applying min_count")]
    EmptyVocabulary,

    #[error("every document is empty after tokenization")]
    EmptyDocuments,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("loss became non-finite at epoch {epoch}, batch {batch} (lr = {lr})")]
    NonFiniteLoss { epoch: usize, batch: usize, lr: f64 },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("missing artifact {path}: run {stage} first")]
    MissingArtifact { stage: &'static str, path: PathBuf },

    #[error("domain sets disagree: {0}")]
    DomainMismatch(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Validation problems exit with 1, everything else with 2.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::MissingArtifact { .. } => 1,
            Error::Parse { .. } | Error::UnknownDomains(_) | Error::UnknownSubcategory(_) | Error::Duplicate { .. } => {
                1
            }
            _ => 2,
        }
    }
}
