use thiserror::Error;

/// Errors surfaced by the library.
///
/// `PredictionFailure` is the one soft error: it marks a single unusable
/// predictor answer and is handled per [`crate::model::SearchConfig::strict_mode`].
/// Everything else aborts the operation that hit it.
#[derive(Debug, Error)]
pub enum Error {
    #[error("instance `{0}` has no coverage model")]
    MissingCoverage(String),

    #[error("instance `{0}` has no reference groups")]
    NoReferences(String),

    #[error("unknown evidence id {id} in instance `{claim_id}`")]
    UnknownEvidence { claim_id: String, id: usize },

    #[error("prediction failed: {0}")]
    PredictionFailure(String),

    #[error("transport: {0}")]
    Transport(String),

    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("instance too large: {0}")]
    TooLarge(String),

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for per-group prediction failures that `strict_mode` arbitrates;
    /// false for hard errors that must abort the run.
    pub fn is_prediction_failure(&self) -> bool {
        matches!(self, Error::PredictionFailure(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
