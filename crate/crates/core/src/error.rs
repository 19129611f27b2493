use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A configuration value violates a constraint. `key` names the offending field.
    #[error("invalid value for `{key}`: {message}")]
    Config { key: String, message: String },

    /// A caller-supplied argument violates an operation precondition.
    #[error("invalid input: {0}")]
    Input(String),

    #[error("malformed chemistry file: {0}")]
    ChemistryFormat(String),

    #[error("non-finite propensity {value} on channel {channel}")]
    Numeric { channel: String, value: f64 },

    #[error("internal consistency violation: {0}")]
    Consistency(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("csv output failed: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            message: message.into(),
        }
    }

    /// True for errors caused by bad configuration or arguments rather than
    /// failures during execution.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Config { .. } | Error::Input(_) | Error::ChemistryFormat(_) | Error::Json { .. }
        )
    }
}
