use thiserror::Error;

use crate::qstate::SiteLabel;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    /// A configuration value violates an invariant. The message names it.
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("site {0} is not part of the qubit set")]
    UnknownSite(SiteLabel),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    /// The integrator could not make progress. `time` is the last time at
    /// which the state was accepted.
    #[error("integration failed at t = {time}: {reason}")]
    Integration { time: f64, reason: String },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("threshold search failed: {0}")]
    Search(String),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
