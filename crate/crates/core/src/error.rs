use thiserror::Error;

pub type Result<T> = std::result::Result<T, TailError>;

/// Errors raised by the pricing, diagnostic and ingestion routines.
///
/// Each variant carries a stable short code (see [`TailError::code`]) that
/// the command-line front end prints alongside the message.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum TailError {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("parameter error: {0}")]
    Parameter(String),

    #[error("consistency error: {0}")]
    Consistency(String),

    #[error("price {price} outside the no-arbitrage band ({lower}, {upper})")]
    OutOfBand { price: f64, lower: f64, upper: f64 },

    #[error("no convergence after {iterations} iterations: {context}")]
    NonConvergence { iterations: usize, context: String },

    #[error("matching condition violated: Black-Scholes leg {bs} vs model {model} at strike {strike}")]
    MatchingCondition { bs: f64, model: f64, strike: f64 },

    #[error("line {line}: parse error: {message}")]
    Parse { line: u64, message: String },

    #[error("{location}: validation error: {message}")]
    Validation { location: String, message: String },

    #[error("no candidate: {0}")]
    NoCandidate(String),

    #[error("insufficient points: need at least {needed}, got {got}")]
    InsufficientPoints { needed: usize, got: usize },

    #[error("empty curve: {0}")]
    EmptyCurve(String),
}

impl TailError {
    pub fn code(&self) -> &'static str {
        match self {
            TailError::Domain(_) => "E-DOMAIN",
            TailError::Parameter(_) => "E-PARAM",
            TailError::Consistency(_) => "E-CONSISTENCY",
            TailError::OutOfBand { .. } => "E-BAND",
            TailError::NonConvergence { .. } => "E-CONVERGENCE",
            TailError::MatchingCondition { .. } => "E-MATCH",
            TailError::Parse { .. } => "E-PARSE",
            TailError::Validation { .. } => "E-VALIDATION",
            TailError::NoCandidate(_) => "E-NOCANDIDATE",
            TailError::InsufficientPoints { .. } => "E-POINTS",
            TailError::EmptyCurve(_) => "E-EMPTY",
        }
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        TailError::Domain(msg.into())
    }

    pub(crate) fn parameter(msg: impl Into<String>) -> Self {
        TailError::Parameter(msg.into())
    }
}

pub(crate) fn require_positive(name: &str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(TailError::parameter(format!("{name} must be positive and finite, got {value}")))
    }
}
