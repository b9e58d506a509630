use std::path::PathBuf;

use thiserror::Error;

use crate::backend::BackendError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },

    #[error("invalid instance {id}: {message}")]
    InvalidInstance { id: String, message: String },

    #[error("budget percent must be in (0, 100], got {0}")]
    BudgetOutOfRange(f64),

    #[error("budget of {requested} explained instances exceeds the {available} instances carrying a gold explanation")]
    InsufficientExplanations { requested: usize, available: usize },

    #[error("missing required field `{field}` for stage {stage}")]
    MissingInjected {
        stage: &'static str,
        field: &'static str,
    },

    #[error("instance {id} has no gold explanation for stage {stage}")]
    MissingGoldExplanation { id: String, stage: &'static str },

    #[error("label `{label}` is not in the label vocabulary of instance {id}")]
    LabelOutOfVocabulary { id: String, label: String },

    #[error("structure {0} needs a backend to semi-label explanations")]
    BackendRequired(&'static str),

    #[error("metric input is empty")]
    EmptyInput,

    #[error("{0}")]
    InvalidInput(String),

    #[error("explanation source `{source_name}` is missing {missing} id(s), first: {first}")]
    SourceMissingIds {
        source_name: String,
        missing: usize,
        first: String,
    },

    #[error("gold accuracy is zero; recover ratio undefined")]
    ZeroGoldAccuracy,

    #[error(transparent)]
    Backend(#[from] BackendError),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            message: message.into(),
        }
    }

    /// Short machine-readable code, used by the CLI error record and the C ABI.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Io { .. } => "io",
            Error::Format { .. } | Error::Json(_) => "format",
            Error::InvalidInstance { .. } => "invalid_instance",
            Error::BudgetOutOfRange(_) | Error::InsufficientExplanations { .. } => "budget",
            Error::MissingInjected { .. } | Error::MissingGoldExplanation { .. } => {
                "format_contract"
            }
            Error::LabelOutOfVocabulary { .. } => "label_vocabulary",
            Error::BackendRequired(_) => "backend_required",
            Error::EmptyInput | Error::InvalidInput(_) => "invalid_input",
            Error::SourceMissingIds { .. } => "source_missing_ids",
            Error::ZeroGoldAccuracy => "zero_gold_accuracy",
            Error::Backend(_) => "backend",
        }
    }
}
