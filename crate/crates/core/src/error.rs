use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, MssaError>;

#[derive(Debug, Error)]
pub enum MssaError {
    /// An argument violated an operation's precondition.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("parse error at row {row}: {message}")]
    Parse { row: usize, message: String },

    #[error("parse error at row {row}, column {column}: cannot read {value:?} as a finite number")]
    BadCell {
        row: usize,
        column: usize,
        value: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error in {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    /// Too few Monte-Carlo replicates survived the earlier stages.
    #[error("calibration failed at stage {stage}: only {survivors} replicates survived (need {required})")]
    Calibration {
        stage: usize,
        survivors: usize,
        required: usize,
    },

    #[error("configuration error: {0}")]
    Config(String),
}

impl MssaError {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        MssaError::Domain(msg.into())
    }
}
