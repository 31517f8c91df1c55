//! Error type shared across the crate.

use thiserror::Error;

/// Failure modes of the library.
///
/// `Argument` covers contract violations on inputs (out-of-range sites,
/// dimension mismatches, malformed state specifications). `Numerical` is
/// reserved for runs that started from valid inputs but produced results
/// outside the declared tolerances (lost positivity, trace drift, fidelity
/// above one). `Resource` marks requests that would exceed the configured
/// dense-matrix budgets.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("resource limit exceeded: {0}")]
    Resource(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn argument(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }

    pub fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }

    pub fn resource(msg: impl Into<String>) -> Self {
        Error::Resource(msg.into())
    }
}
