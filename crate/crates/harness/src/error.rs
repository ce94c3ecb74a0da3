use std::path::PathBuf;

use thiserror::Error;

#[derive(Error, Debug)]
pub enum HarnessError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("{path}, line {line}, field `{field}`: {message}")]
    Record {
        path: PathBuf,
        line: u64,
        field: String,
        message: String,
    },

    #[error("invalid scenario: {0}")]
    Scenario(String),

    #[error(transparent)]
    Model(#[from] mixfeed_core::Error),
}

pub type Result<T> = std::result::Result<T, HarnessError>;
