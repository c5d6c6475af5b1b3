use thiserror::Error;

/// Errors produced by the library.
///
/// `Domain` covers every violated precondition (bad parameters, degenerate
/// kernels, guards); the CLI maps it to exit code 1 and `Io` to exit code 2.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("enumeration guard exceeded: {what} needs {needed} evaluations (limit {limit})")]
    Guard {
        what: &'static str,
        needed: u128,
        limit: u128,
    },

    #[error("exact oracle unavailable: {0}")]
    NotFinite(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// True for errors that come from the filesystem or from parsing input files.
    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io(_) | Error::Json(_) | Error::Csv(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
