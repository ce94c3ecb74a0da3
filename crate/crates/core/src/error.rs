use thiserror::Error;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{field}`: {reason}")]
    Parameter { field: String, reason: String },

    #[error("integration diverged at t = {time:e} s (non-finite state)")]
    Diverged { time: f64 },

    #[error("analysis window starts at {start:e} s but the trace ends at {end:e} s")]
    Window { start: f64, end: f64 },

    #[error("input mismatch: {0}")]
    Input(String),

    #[error("domain error: {0}")]
    Domain(String),
}

impl Error {
    pub(crate) fn param(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Parameter {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
