use thiserror::Error;

/// Crate-wide error type.
#[derive(Error, Debug)]
pub enum Error {
    /// Bad user-supplied parameter or config file entry.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// An algebraic check failed (orthogonality, dispersion sums, SSD, ...).
    #[error("verification failed: {0}")]
    Verification(String),

    /// An exhaustive search would exceed its candidate guard.
    #[error("search space too large: {0}")]
    SearchSpace(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
