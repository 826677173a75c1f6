//! Error type shared across the crate.

use thiserror::Error;

/// Errors produced by model construction, spectral analysis, rate-distortion
/// evaluation, and the Monte Carlo simulator.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// A model or operation parameter is out of its valid range.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A matrix that must be symmetric positive-definite is not.
    #[error("matrix is not positive definite ({context})")]
    NotPositiveDefinite { context: String },

    /// Two per-predecessor spectra (or matrices) disagree on the block length.
    #[error("dimension mismatch: expected n = {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    /// Adaptive quadrature could not reach the requested tolerance.
    #[error("quadrature failed: tolerance {tolerance:e} not reached (estimate {achieved:e})")]
    QuadratureFailure { tolerance: f64, achieved: f64 },

    /// The requested distortion exceeds what the noise parameter allows.
    #[error("target distortion {target} exceeds the maximum achievable {max}")]
    TargetUnreachable { target: f64, max: f64 },

    /// A linear solve or factorization broke down.
    #[error("singular system: linear solve failed")]
    SingularSystem,

    /// Too few Monte Carlo samples for a meaningful standard error.
    #[error("sample count {0} too small (need at least 100)")]
    InvalidSampleCount(u64),

    /// A predecessor id that is not part of the network.
    #[error("unknown predecessor id {0}")]
    UnknownPredecessor(usize),
}

pub type Result<T> = std::result::Result<T, Error>;
