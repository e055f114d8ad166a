//! Error type shared by every module in the crate.

use thiserror::Error;

/// Crate-wide error enumeration.
///
/// `KlDivergence` of a pair violating absolute continuity is *not* an error:
/// it returns `+inf` by contract so optimizers can treat it as a barrier.
/// `NonFinite` is reserved for genuine numeric breakdown (overflow, NaN)
/// so the two conditions are never conflated.
#[derive(Debug, Error)]
pub enum Error {
    /// A measure failed its structural invariants (weights, support, dims).
    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    /// Two measures cannot be combined (different atom lists, mixed kinds).
    #[error("incompatible measures: {0}")]
    IncompatibleMeasures(String),

    /// An argument lies outside the documented domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Array or vector dimensions do not match.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// An enumeration or count would exceed the configured resource guard.
    #[error("resource guard exceeded: {0}")]
    ResourceGuard(String),

    /// An iterative routine hit its iteration cap before reaching tolerance.
    #[error("convergence failure: {0}")]
    Convergence(String),

    /// A computation produced NaN or an unexpected infinity.
    #[error("non-finite value: {0}")]
    NonFinite(String),

    /// A serialized record or input file could not be parsed.
    #[error("parse error: {0}")]
    Parse(String),

    /// Underlying I/O failure.
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Wraps an error with the pipeline stage it occurred in, preserving the
    /// variant where it matters for exit-code mapping.
    pub fn in_stage(self, stage: &str) -> Error {
        match self {
            Error::Io(e) => Error::Io(e),
            other => match other {
                Error::InvalidMeasure(m) => Error::InvalidMeasure(format!("[{stage}] {m}")),
                Error::IncompatibleMeasures(m) => {
                    Error::IncompatibleMeasures(format!("[{stage}] {m}"))
                }
                Error::Domain(m) => Error::Domain(format!("[{stage}] {m}")),
                Error::DimensionMismatch(m) => {
                    Error::DimensionMismatch(format!("[{stage}] {m}"))
                }
                Error::ResourceGuard(m) => Error::ResourceGuard(format!("[{stage}] {m}")),
                Error::Convergence(m) => Error::Convergence(format!("[{stage}] {m}")),
                Error::NonFinite(m) => Error::NonFinite(format!("[{stage}] {m}")),
                Error::Parse(m) => Error::Parse(format!("[{stage}] {m}")),
                Error::Io(e) => Error::Io(e),
            },
        }
    }
}
