use thiserror::Error;

use crate::graph::ValidationReport;

/// Errors raised by the oracles, covers, policies and generators.
#[derive(Debug, Error)]
pub enum Error {
    #[error("schema error: {0}")]
    Schema(String),

    #[error("instance is not admissible:\n{0}")]
    Invalid(ValidationReport),

    #[error("enumeration too large ({count} realizations, cap {cap}), use Monte Carlo")]
    EnumerationTooLarge { count: u128, cap: u128 },

    #[error("state space too large ({states} states, cap {cap}), use Monte Carlo")]
    StateSpaceTooLarge { states: u128, cap: u128 },

    #[error("invalid focal path: {0}")]
    FocalPath(String),

    #[error("x/q inconsistent with focal path: {0}")]
    InconsistentSchedule(String),

    #[error("invalid path cover: {0}")]
    Cover(String),

    #[error("inconsistent feasibility probabilities: {0}")]
    Feasibility(String),

    #[error("invalid parameters: {0}")]
    Params(String),

    #[error("policy not applicable: {0}")]
    Policy(String),

    #[error("internal invariant violated: {0}")]
    Internal(String),
}

impl Error {
    /// Stable machine-readable category, used by the CLI for exit codes.
    pub fn category(&self) -> &'static str {
        match self {
            Error::Schema(_) => "schema",
            Error::Invalid(_) => "validation",
            Error::EnumerationTooLarge { .. } | Error::StateSpaceTooLarge { .. } => "cap",
            Error::FocalPath(_) | Error::Cover(_) => "cover",
            Error::InconsistentSchedule(_) | Error::Feasibility(_) => "probabilities",
            Error::Params(_) => "params",
            Error::Policy(_) => "policy",
            Error::Internal(_) => "internal",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
