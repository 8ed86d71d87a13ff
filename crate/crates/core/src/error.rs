use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A configuration value violates a documented constraint. `field` is a
    /// dotted path into the experiment description (e.g. `algorithms[2].phi`).
    #[error("invalid configuration at `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error("dimension mismatch: expected length {expected}, got {found}")]
    Dimension { expected: usize, found: usize },

    #[error("index {index} out of range 1..={len}")]
    Index { index: usize, len: usize },

    /// The filter produced a non-finite value at the given iteration.
    #[error("filter diverged at iteration {iteration}")]
    Divergence { iteration: u64 },

    /// `2 - 3·step·σ²` is not positive, so the steady-state bound is undefined.
    #[error(
        "steady-state bound undefined: denominator 2 - 3*step*noise_variance = {denominator} <= 0"
    )]
    Stability { denominator: f64 },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub(crate) fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::Dimension { expected, found })
    }
}
