use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A field violates a type invariant. `key` names the field.
    #[error("invalid `{key}`: {reason}")]
    Invalid { key: String, reason: String },

    /// Evaluation point outside the domain of an object (time span, order cap, ...).
    #[error("`{key}` out of range: {reason}")]
    Range { key: String, reason: String },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("integration failed at t={t}: {reason}")]
    Integration { t: f64, reason: String },

    #[error("no convergence after {iterations} iterations (last step {last_step:e})")]
    NonConvergence {
        iterations: usize,
        last_step: f64,
        history: Vec<f64>,
    },

    #[error("no sign change on [{lo}, {hi}]")]
    Bracket { lo: f64, hi: f64 },
}

impl Error {
    pub fn invalid(key: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Invalid {
            key: key.into(),
            reason: reason.into(),
        }
    }

    pub fn range(key: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Range {
            key: key.into(),
            reason: reason.into(),
        }
    }

    /// Integration and iteration failures, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Integration { .. } | Error::NonConvergence { .. } | Error::Bracket { .. }
        )
    }

    /// Offending key, when the error is tied to one.
    pub fn key(&self) -> Option<&str> {
        match self {
            Error::Invalid { key, .. } | Error::Range { key, .. } => Some(key),
            _ => None,
        }
    }
}

pub(crate) fn ensure_finite(key: &str, x: f64) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(key, format!("must be finite, got {x}")))
    }
}
