use thiserror::Error;

/// Errors raised by the geometry engine, the learners and the harness.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("linear program infeasible: {0}")]
    LpInfeasible(String),

    #[error("linear program unbounded (boundedness invariant violated)")]
    LpUnbounded,

    #[error("iterative solver did not converge: {0}")]
    NonConvergence(String),

    #[error("dimension {dim} too large for this estimator (max {max})")]
    DimensionTooLarge { dim: usize, max: usize },

    #[error("knowledge set became empty (max slack {max_slack:e})")]
    EmptyKnowledge { max_slack: f64 },

    #[error("learner needs a horizon but none was set")]
    MissingHorizon,

    #[error("oracle response is not valid: <w* - p, v> = {0:e}")]
    InvalidOracle(f64),

    #[error("packing too small: |S| = {0} < 4")]
    PackingTooSmall(usize),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid config field `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }

    /// True for errors caused by bad user input rather than a failed computation.
    pub fn is_validation(&self) -> bool {
        matches!(self, Error::Config { .. } | Error::InvalidInput(_))
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
