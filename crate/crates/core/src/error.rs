use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// Malformed or inconsistent input (bad dimensions, invalid parameters).
    #[error("configuration error: {0}")]
    Config(String),

    #[error("{context} is not a probability vector (sum = {sum})")]
    NotAProbability { context: String, sum: f64 },

    /// The target policy puts mass on a state (or state-action pair) that
    /// the logging policy never reaches.
    #[error("coverage violation at t={t}, state={state}{}", action.map(|a| alloc::format!(", action={a}")).unwrap_or_default())]
    Coverage {
        t: usize,
        state: usize,
        action: Option<usize>,
    },

    /// An observed action has zero probability under the supplied logging policy.
    #[error("logging policy gives zero probability to observed action {action} at t={t}, state={state}")]
    InvalidLoggingPolicy { t: usize, state: usize, action: usize },

    #[error("{what} has {count} members, above the cap of {cap}")]
    TooLarge { what: &'static str, count: f64, cap: u64 },
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    /// Short machine-readable tag for the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Config(_) => "config",
            Error::NotAProbability { .. } => "not_a_probability",
            Error::Coverage { .. } => "coverage",
            Error::InvalidLoggingPolicy { .. } => "invalid_logging_policy",
            Error::TooLarge { .. } => "too_large",
        }
    }
}
