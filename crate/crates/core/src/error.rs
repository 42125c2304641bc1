use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// A value lies outside the domain an operation accepts.
    #[error("domain error: {0}")]
    Domain(String),

    /// Malformed input file.
    #[error("format error: {0}")]
    Format(String),

    #[error("insufficient data: need at least {needed} rows, got {got}")]
    InsufficientData { needed: usize, got: usize },

    /// Sample without spread where one is required (e.g. gamma MLE).
    #[error("degenerate sample: {0}")]
    DegenerateSample(String),

    /// An iterative or quadrature routine failed to meet its tolerance.
    #[error("numerical error: {message} (achieved {achieved:e})")]
    Numerical { message: String, achieved: f64 },

    /// The start density vanishes at an observation.
    #[error("start density is zero at row {row}")]
    StartSupport { row: usize },

    #[error("evaluation underflow: {0}")]
    EvaluationUnderflow(String),

    /// Every leave-one-out term of a row had zero posterior weight.
    #[error("row {row} has no admissible leave-one-out term")]
    DegenerateRow { row: usize },

    /// The bandwidth objective was flat over the search region.
    #[error("flat objective; smallest bandwidth {h:?} returned")]
    AmbiguousMinimum { h: Vec<f64> },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn numerical(msg: impl Into<String>, achieved: f64) -> Self {
        Error::Numerical {
            message: msg.into(),
            achieved,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
