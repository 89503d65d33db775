//! Error type shared by every module of the crate.

use thiserror::Error;

/// Errors produced by evaluation routines.
///
/// `Domain` covers argument and invariant violations detected before any
/// numerics run; `Convergence` carries the best value obtained so far along
/// with the error estimate that failed to meet the requested tolerance.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("convergence failure: {context} (partial value {partial:e}, error estimate {err_estimate:e})")]
    Convergence {
        context: String,
        partial: f64,
        err_estimate: f64,
    },
}

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn convergence(context: impl Into<String>, partial: f64, err_estimate: f64) -> Self {
        Error::Convergence {
            context: context.into(),
            partial,
            err_estimate,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
