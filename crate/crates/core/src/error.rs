use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Input violates a documented domain constraint (range, shape, uniqueness).
    #[error("validation error: {0}")]
    Validation(String),

    /// An event arrived out of the order the session flow allows.
    #[error("sequencing error: {0}")]
    Sequencing(String),

    /// Attempt to overwrite a recorded, immutable value.
    #[error("immutability error: {0}")]
    Immutable(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// Data is well-formed but the statistic is undefined on it
    /// (zero variance, singular design, single-rater image, ...).
    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("missing data: {0}")]
    MissingData(String),

    #[error("calibration error: {0}")]
    Calibration(String),

    #[error("feedback withheld: {0}")]
    FeedbackWithheld(String),

    #[error("session is finished")]
    SessionDone,
}

impl Error {
    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub(crate) fn degenerate(msg: impl Into<String>) -> Self {
        Error::Degenerate(msg.into())
    }
}
