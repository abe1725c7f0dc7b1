use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("parameter out of domain: {0}")]
    ParameterDomain(String),

    #[error("reduction estimate undefined: {0}")]
    UndefinedEstimate(String),

    #[error("invalid sample: {0}")]
    InvalidSample(String),

    #[error("insufficient samples: need at least {needed}, got {got}")]
    InsufficientSamples { needed: usize, got: usize },

    #[error("degenerate full conditional: {0}")]
    DegenerateConditional(String),

    #[error("chain failure at iteration {iteration}: {reason}; state: {snapshot}")]
    ChainFailure {
        iteration: usize,
        reason: String,
        snapshot: String,
    },

    #[error("scenario aborted: {failed} of {total} chains failed")]
    ScenarioAborted { failed: usize, total: usize },

    #[error("ingestion error{}: {message}", row.map(|r| format!(" at row {r}")).unwrap_or_default())]
    Ingestion { row: Option<usize>, message: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::ParameterDomain(msg.into())
}

impl Error {
    /// Stable machine-readable tag for error records.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::ParameterDomain(_) => "parameter_domain",
            Error::UndefinedEstimate(_) => "undefined_estimate",
            Error::InvalidSample(_) => "invalid_sample",
            Error::InsufficientSamples { .. } => "insufficient_samples",
            Error::DegenerateConditional(_) => "degenerate_conditional",
            Error::ChainFailure { .. } => "chain_failure",
            Error::ScenarioAborted { .. } => "scenario_aborted",
            Error::Ingestion { .. } => "ingestion",
            Error::Config(_) => "config",
            Error::Io(_) => "io",
        }
    }
}
