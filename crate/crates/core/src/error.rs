use thiserror::Error;

/// Errors produced by the estimation pipeline, the vision stand-ins and the
/// scene/record parsers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("rotation block is not orthonormal (deviation {deviation:.3e})")]
    NotOrthonormal { deviation: f64 },

    #[error("mask is empty: {0}")]
    EmptyMask(String),

    #[error("ambiguous orientation: rectangle half-extents {a:.4} and {b:.4} differ by less than 5%")]
    AmbiguousOrientation { a: f64, b: f64 },

    #[error("side observation unavailable: only {visible_fraction:.2} of the rod is visible")]
    ObservationUnavailable { visible_fraction: f64 },

    #[error("near-singular pose: |r33| = {r33:.3e}")]
    NearSingularPose { r33: f64 },

    #[error("unobservable configuration: design rank {rank} < 3")]
    Unobservable { rank: usize },

    #[error("gradient descent diverged after {iterations} iterations; try a smaller learning rate")]
    Divergence { iterations: usize },

    #[error("non-physical weight estimate {weight:.4e} N (check the torque sign convention)")]
    NonphysicalWeight { weight: f64 },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
