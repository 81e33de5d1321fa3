use thiserror::Error;

/// Errors surfaced by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter failed validation. The message names the offending key.
    #[error("configuration error: {0}")]
    Config(String),

    /// A grid or mode-count mismatch.
    #[error("resolution error: {0}")]
    Resolution(String),

    /// A simulation produced a non-finite coefficient.
    #[error("numerical divergence at step {step} (t = {time})")]
    Divergence { step: usize, time: f64 },

    #[error("eigensolver failure: {0}")]
    Eig(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
