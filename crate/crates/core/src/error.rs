use thiserror::Error;

/// Errors produced anywhere in the tuple-similarity pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("empty counts")]
    EmptyCounts,

    #[error("rank {requested} out of range 1..={max}")]
    RankOutOfRange { requested: usize, max: usize },

    #[error("rank exceeded: asked for k={k}, factors only hold {rank}")]
    RankExceeded { k: usize, rank: usize },

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("{what} did not converge within {iterations} iterations")]
    NoConvergence { what: &'static str, iterations: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("training set needs both labels, got {positives} positive and {negatives} negative")]
    DegenerateLabels { positives: usize, negatives: usize },

    #[error("feature spec fingerprint mismatch: model has {model}, features have {features}")]
    FingerprintMismatch { model: String, features: String },

    #[error("calibration failed: {0}")]
    Calibration(String),

    #[error("undefined correlation: {0}")]
    UndefinedCorrelation(&'static str),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("malformed {what}: {detail}")]
    Format { what: &'static str, detail: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures of a numerical routine rather than bad data.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NoConvergence { .. } | Error::NonFinite(_) | Error::Calibration(_)
        )
    }

    pub(crate) fn format(what: &'static str, detail: impl Into<String>) -> Self {
        Error::Format {
            what,
            detail: detail.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
