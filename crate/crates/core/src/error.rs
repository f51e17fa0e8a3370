use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An experiment or model parameter is invalid. `key` names the offending
    /// config entry (dotted path) or parameter.
    #[error("invalid configuration `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("{what} = {value} is outside its domain {domain}")]
    Domain {
        what: &'static str,
        value: f64,
        domain: &'static str,
    },

    #[error("engine contract violated: {0}")]
    EngineContract(String),

    #[error(
        "probability mass leaked past the LLR clamp: {leaked:.3e} > {limit:.1e} by period {period} \
         (clamp ±{clamp}, {floored} floored cutoffs); widen `engine.llr_clamp`"
    )]
    Leakage {
        period: usize,
        leaked: f64,
        limit: f64,
        clamp: f64,
        floored: u64,
    },

    #[error("diagnostic unavailable: {0}")]
    Diagnostic(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
}

impl Error {
    pub(crate) fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
