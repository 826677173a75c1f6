//! Rate-distortion analysis of incremental coding for sequential random
//! access to Gaussian sources with memory.
//!
//! A source is served to clients that each hold one previously requested
//! source as side information. The encoder stores one incremental index
//! sequence per source; on a request the server only extracts a prefix
//! matched to the client's side information. This crate evaluates the
//! storage rate, per-predecessor transmission rates and distortions of that
//! scheme for stationary Gaussian models:
//!
//! - [`covariance`]: correlation models and their Toeplitz covariance
//!   matrices;
//! - [`spectrum`]: eigenvalue spectra with closed-form and asymptotic
//!   (spectral density / Szego average) oracles;
//! - [`rd`]: transmission rate, storage rate, distortion, waterfilling
//!   solves, curve sweeps;
//! - [`sim`]: Monte Carlo validation of the test-channel estimator against
//!   its analytic distortion and rate;
//! - [`layout`]: the nested per-component rate stacks that realize the rate
//!   formulas as an extractable bitstream accounting.

pub mod covariance;
pub mod error;
pub mod layout;
pub mod rd;
pub mod sim;
pub mod spectrum;

mod quadrature;

pub use covariance::{
    build_covariance, preset_network, CorrelationModel, Predecessor, PresetFamily, SourceNetwork,
    ToeplitzMatrix,
};
pub use error::{Error, Result};
pub use layout::{build_layout, verify_against_theorem, BitstreamLayout, LayoutReport};
pub use rd::{
    distortion, evaluate_tuple, solve_theta, storage_rate, sweep_curve, transmission_rate, Delta,
    Grid, OperatingPoint, RDCurve, RDTuple, SweepPolicy,
};
pub use sim::{analytic_distortion, analytic_rate, build_estimator, simulate, SimResult, TestChannel};
pub use spectrum::{
    eigenvalues, spectral_density, szego_average, tridiagonal_closed_form, NetworkSpectra, Spectrum,
};
