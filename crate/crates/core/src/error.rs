use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the library and surfaced by the CLI.
#[derive(Debug, Error)]
pub enum Error {
    #[error("no matched pairs (N = 0)")]
    EmptyData,

    #[error("every pair is tied; at least one win or loss is required")]
    AllTies,

    #[error("win ratio is undefined: no losses observed")]
    UndefinedRatio,

    #[error("degenerate variance: {0}")]
    DegenerateVariance(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("target has no effect; power and sample size are undefined")]
    NoEffect,

    #[error("infeasible design: {0}")]
    Infeasible(String),

    #[error("binomial coefficient C({n}, {k}) overflows 128-bit integers")]
    Overflow { n: u64, k: u64 },

    #[error("data error for subject {subject}: {message}")]
    Data { subject: String, message: String },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("config error in {path}: {message}")]
    Config { path: PathBuf, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn degenerate(msg: impl Into<String>) -> Self {
        Error::DegenerateVariance(msg.into())
    }

    /// True for errors caused by user input rather than by the program.
    pub fn is_input_error(&self) -> bool {
        !matches!(self, Error::Overflow { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
