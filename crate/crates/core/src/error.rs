use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A configuration value is out of its admissible range.
    #[error("invalid config `{field}`: {reason}")]
    InvalidConfig { field: &'static str, reason: String },

    /// A caller broke an operation's precondition.
    #[error("contract violation: {0}")]
    ContractViolation(String),

    /// The forward-view return cannot be evaluated to the requested tolerance.
    #[error("presence stream too short: return at step {t} still carries discount {residual:e}")]
    InsufficientStream { t: usize, residual: f64 },

    /// A countdown return with no future stimulus is unbounded.
    #[error("countdown return at step {t} is unbounded: no future presence in stream")]
    NoFuturePresence { t: usize },
}

impl Error {
    pub(crate) fn config(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidConfig {
            field,
            reason: reason.into(),
        }
    }
}
