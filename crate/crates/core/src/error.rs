use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument `{name}`: {reason}")]
    InvalidArgument { name: &'static str, reason: String },

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("step size underflow at t = {t:e} s (h = {h:e} s)")]
    StepSizeUnderflow { t: f64, h: f64 },

    #[error("non-finite state encountered at t = {t:e} s")]
    NonFinite { t: f64 },

    #[error("step budget of {max_steps} exhausted at t = {t:e} s")]
    StepBudget { t: f64, max_steps: usize },

    #[error("quadrature did not converge: estimated error {achieved:e} exceeds target {target:e}")]
    Quadrature { achieved: f64, target: f64 },

    #[error("{count} configuration error(s):\n{}", .messages.join("\n"))]
    Config { count: usize, messages: Vec<String> },

    #[error("unknown parameter `{0}`")]
    UnknownParameter(String),

    #[error("refusing to overwrite existing file {0} (pass --force)")]
    WouldOverwrite(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn arg(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidArgument { name, reason: reason.into() }
    }

    pub(crate) fn config(messages: Vec<String>) -> Self {
        Error::Config { count: messages.len(), messages }
    }

    /// Short machine-readable tag used in CLI error reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidArgument { .. } => "invalid_argument",
            Error::InvalidScenario(_) => "invalid_scenario",
            Error::StepSizeUnderflow { .. } => "step_size_underflow",
            Error::NonFinite { .. } => "non_finite",
            Error::StepBudget { .. } => "step_budget",
            Error::Quadrature { .. } => "quadrature",
            Error::Config { .. } => "config",
            Error::UnknownParameter(_) => "unknown_parameter",
            Error::WouldOverwrite(_) => "would_overwrite",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}
