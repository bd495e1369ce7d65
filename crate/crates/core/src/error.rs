use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("invalid value: {0}")]
    InvalidValue(String),

    #[error("unknown environment `{0}` (known: interference, pointwalker1d, pointwalker2d)")]
    UnknownEnv(String),

    #[error("non-finite gradient at generation {generation}: {detail}")]
    NonFiniteGradient { generation: u64, detail: String },

    #[error("config key `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("corrupt checkpoint: {0}")]
    CorruptCheckpoint(String),

    #[error("unknown checkpoint version {found} (this build reads version {expected})")]
    UnknownVersion { found: u32, expected: u32 },

    #[error("infeasible tolerance: {constraint} (bound {bound:.3e} exceeds budget {budget:.3e})")]
    InfeasibleTolerance {
        constraint: String,
        bound: f64,
        budget: f64,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            message: message.into(),
        }
    }

    /// True for errors caused by bad user input rather than a failure while running.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Config { .. } | Error::UnknownEnv(_) | Error::InvalidValue(_)
        )
    }
}

pub(crate) fn check_dim(context: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            context,
            expected,
            found,
        })
    }
}
