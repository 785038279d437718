//! Error type shared by every module of the library.

use thiserror::Error;

/// Errors raised by distribution construction and the superquantile engines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A distribution or problem parameter is outside its admissible range.
    #[error("{family}: {message}")]
    InvalidParameter {
        family: &'static str,
        message: String,
    },

    /// An argument is outside the domain of the operation (e.g. alpha = 1).
    #[error("domain error: {0}")]
    Domain(String),

    /// The operation is not defined for this distribution family.
    #[error("{operation} is not supported for {family} laws")]
    Unsupported {
        operation: &'static str,
        family: &'static str,
    },

    /// A distribution or scenario string could not be parsed.
    #[error("parse error: {0}")]
    Parse(String),

    /// A monotone equation has no solution in the admissible range.
    #[error("no root: {0}")]
    NoRoot(String),

    /// A numerical procedure did not converge; carries its best estimate.
    #[error("numeric error: {message} (best estimate {best_estimate})")]
    Numeric { message: String, best_estimate: f64 },

    /// An engine error annotated with the action that triggered it.
    #[error("action '{label}': {source}")]
    Action {
        label: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn invalid(family: &'static str, message: impl Into<String>) -> Self {
        Error::InvalidParameter {
            family,
            message: message.into(),
        }
    }

    pub(crate) fn domain(message: impl Into<String>) -> Self {
        Error::Domain(message.into())
    }

    pub(crate) fn numeric(message: impl Into<String>, best_estimate: f64) -> Self {
        Error::Numeric {
            message: message.into(),
            best_estimate,
        }
    }

    /// Wraps the error with the label of the action being evaluated.
    pub fn for_action(self, label: &str) -> Self {
        Error::Action {
            label: label.to_string(),
            source: Box::new(self),
        }
    }

    /// True when the root cause is a convergence failure rather than bad input.
    pub fn is_numeric(&self) -> bool {
        match self {
            Error::Numeric { .. } => true,
            Error::Action { source, .. } => source.is_numeric(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
