//! Achievable transmission rate, storage rate and distortion of the
//! incremental scheme, evaluated on per-predecessor spectra at finite block
//! length: per-component positive-part rates with a common waterfilling
//! level, the component-wise max for storage, waterfilling solves, and curve
//! sweeps.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::spectrum::{NetworkSpectra, Spectrum};

/// Test-channel noise parameter: a finite per-component noise variance, or
/// the classical limit where the per-component distortion cap is the
/// eigenvalue itself.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Delta {
    Classical,
    Finite(f64),
}

impl Delta {
    pub fn validate(&self) -> Result<()> {
        if let Delta::Finite(d) = self {
            if !(d.is_finite() && *d > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "delta must be positive and finite, got {d}"
                )));
            }
        }
        Ok(())
    }

    pub fn is_classical(&self) -> bool {
        matches!(self, Delta::Classical)
    }

    pub fn as_finite(&self) -> Option<f64> {
        match self {
            Delta::Classical => None,
            Delta::Finite(d) => Some(*d),
        }
    }
}

/// One operating point of the scheme: the noise parameter and the
/// waterfilling level, shared by all predecessors of a source.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatingPoint {
    pub delta: Delta,
    pub theta: f64,
}

impl OperatingPoint {
    pub fn new(delta: Delta, theta: f64) -> Result<Self> {
        delta.validate()?;
        if !(theta.is_finite() && theta > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "theta must be positive and finite, got {theta}"
            )));
        }
        Ok(Self { delta, theta })
    }
}

/// Rates and distortions of one predecessor at one operating point.
#[derive(Debug, Clone, PartialEq)]
pub struct PredecessorRD {
    pub id: usize,
    pub transmission_rate: f64,
    pub distortion: f64,
    /// Per-symbol mutual information rate of the finite-noise test channel,
    /// `(1/n) sum_i 0.5 log2((lambda_i + delta) / delta)`; `None` in the
    /// classical limit. Kept as a diagnostic: operating points where it
    /// exceeds the waterfilling transmission rate are flagged by
    /// [`RDTuple::rate_shortfalls`].
    pub test_channel_rate: Option<f64>,
}

/// One evaluated point: storage rate plus per-predecessor transmission rates
/// and distortions.
#[derive(Debug, Clone, PartialEq)]
pub struct RDTuple {
    pub n: usize,
    pub point: OperatingPoint,
    pub storage_rate: f64,
    pub per_predecessor: Vec<PredecessorRD>,
}

impl RDTuple {
    pub fn predecessor(&self, id: usize) -> Result<&PredecessorRD> {
        self.per_predecessor
            .iter()
            .find(|p| p.id == id)
            .ok_or(Error::UnknownPredecessor(id))
    }

    /// Predecessors whose test-channel rate exceeds the waterfilling
    /// transmission rate, meaning this (delta, theta) pair under-provisions
    /// the extracted rate relative to the test channel it certifies.
    pub fn rate_shortfalls(&self) -> Vec<usize> {
        self.per_predecessor
            .iter()
            .filter(|p| {
                p.test_channel_rate
                    .is_some_and(|tc| tc > p.transmission_rate + 1e-12)
            })
            .map(|p| p.id)
            .collect()
    }
}

fn rate_term(lambda: f64, theta: f64) -> f64 {
    if lambda > theta {
        0.5 * (lambda / theta).log2()
    } else {
        0.0
    }
}

/// Transmission rate `(1/n) sum_i max(0, 0.5 log2(lambda_i / theta))` in
/// bits per source symbol.
pub fn transmission_rate(spec: &Spectrum, theta: f64) -> f64 {
    debug_assert!(theta > 0.0);
    let sum: f64 = spec
        .eigenvalues()
        .iter()
        .map(|&l| rate_term(l, theta))
        .sum();
    sum / spec.n() as f64
}

/// Storage rate `(1/n) sum_i max(0, max_j 0.5 log2(lambda_i^(j) / theta))`,
/// the component-wise worst case across predecessors. Components are aligned
/// by descending eigenvalue rank.
pub fn storage_rate(specs: &[Spectrum], theta: f64) -> Result<f64> {
    debug_assert!(theta > 0.0);
    let Some(first) = specs.first() else {
        return Err(Error::InvalidParameter(
            "storage rate needs at least one spectrum".into(),
        ));
    };
    let n = first.n();
    for s in specs {
        if s.n() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: s.n(),
            });
        }
    }
    let mut sum = 0.0;
    for i in 0..n {
        let lambda_worst = specs
            .iter()
            .map(|s| s.eigenvalues()[i])
            .fold(f64::NEG_INFINITY, f64::max);
        sum += rate_term(lambda_worst, theta);
    }
    Ok(sum / n as f64)
}

fn distortion_term(lambda: f64, point: &OperatingPoint) -> f64 {
    let cap = match point.delta {
        Delta::Classical => lambda,
        Delta::Finite(d) => lambda * d / (lambda + d),
    };
    cap.min(point.theta)
}

/// Distortion `(1/n) sum_i min(theta, lambda_i delta / (lambda_i + delta))`;
/// in the classical limit the cap is `lambda_i` itself.
pub fn distortion(spec: &Spectrum, point: &OperatingPoint) -> f64 {
    let sum: f64 = spec
        .eigenvalues()
        .iter()
        .map(|&l| distortion_term(l, point))
        .sum();
    sum / spec.n() as f64
}

/// Largest distortion reachable at this noise parameter (the saturation
/// value of [`distortion`] as theta grows).
pub fn max_distortion(spec: &Spectrum, delta: &Delta) -> f64 {
    let sum: f64 = spec
        .eigenvalues()
        .iter()
        .map(|&l| match delta {
            Delta::Classical => l,
            Delta::Finite(d) => l * d / (l + d),
        })
        .sum();
    sum / spec.n() as f64
}

/// Test-channel mutual information rate
/// `(1/n) sum_i 0.5 log2((lambda_i + delta) / delta)` in bits per symbol.
pub fn test_channel_rate(spec: &Spectrum, delta: f64) -> f64 {
    debug_assert!(delta > 0.0);
    let sum: f64 = spec
        .eigenvalues()
        .iter()
        .map(|&l| 0.5 * ((l + delta) / delta).log2())
        .sum();
    sum / spec.n() as f64
}

/// Evaluates storage rate, per-predecessor transmission rates and
/// distortions at one operating point.
pub fn evaluate_tuple(spectra: &NetworkSpectra, point: &OperatingPoint) -> Result<RDTuple> {
    point.delta.validate()?;
    if !(point.theta.is_finite() && point.theta > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "theta must be positive and finite, got {}",
            point.theta
        )));
    }
    let storage = storage_rate(spectra.spectra(), point.theta)?;
    let per_predecessor = spectra
        .ids()
        .iter()
        .zip(spectra.spectra())
        .map(|(&id, spec)| PredecessorRD {
            id,
            transmission_rate: transmission_rate(spec, point.theta),
            distortion: distortion(spec, point),
            test_channel_rate: point.delta.as_finite().map(|d| test_channel_rate(spec, d)),
        })
        .collect();
    Ok(RDTuple {
        n: spectra.n(),
        point: *point,
        storage_rate: storage,
        per_predecessor,
    })
}

/// Solves for the waterfilling level theta that achieves `target` distortion
/// at the given noise parameter, by bisection (distortion is continuous and
/// non-decreasing in theta). Returns the infimum level on saturation
/// boundaries.
pub fn solve_theta(spec: &Spectrum, delta: Delta, target: f64) -> Result<f64> {
    delta.validate()?;
    if !(target.is_finite() && target > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "target distortion must be positive and finite, got {target}"
        )));
    }
    let cap = max_distortion(spec, &delta);
    if target > cap {
        return Err(Error::TargetUnreachable {
            target,
            max: cap,
        });
    }
    Ok(bisect_theta(0.0, spec.lambda_max(), target, |theta| {
        distortion(spec, &OperatingPoint { delta, theta })
    }))
}

/// Bisection on a non-decreasing distortion function of theta; the invariant
/// `dist(lo) < target <= dist(hi)` is maintained and `hi` converges to the
/// infimum of the achieving set.
fn bisect_theta<F: Fn(f64) -> f64>(mut lo: f64, mut hi: f64, target: f64, dist: F) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if dist(mid) >= target {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= 1e-12 * hi {
            break;
        }
    }
    hi
}

/// How a sweep couples the noise parameter to the waterfilling level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SweepPolicy {
    /// Classical limit (infinite noise): the standard reverse-waterfilling
    /// curves.
    Classical,
    /// The noise parameter tracks the waterfilling level.
    ThetaEqualsDelta,
    /// A fixed finite noise parameter across the whole sweep.
    FixedDelta(f64),
}

impl SweepPolicy {
    pub fn validate(&self) -> Result<()> {
        if let SweepPolicy::FixedDelta(d) = self {
            Delta::Finite(*d).validate()?;
        }
        Ok(())
    }

    pub fn point_for_theta(&self, theta: f64) -> OperatingPoint {
        let delta = match self {
            SweepPolicy::Classical => Delta::Classical,
            SweepPolicy::ThetaEqualsDelta => Delta::Finite(theta),
            SweepPolicy::FixedDelta(d) => Delta::Finite(*d),
        };
        OperatingPoint { delta, theta }
    }

    pub fn tag(&self) -> String {
        match self {
            SweepPolicy::Classical => "classical".into(),
            SweepPolicy::ThetaEqualsDelta => "theta_eq_delta".into(),
            SweepPolicy::FixedDelta(d) => format!("fixed_delta({d})"),
        }
    }
}

/// Sweep grid: either explicit waterfilling levels, or distortion targets
/// solved against one reference predecessor's spectrum.
#[derive(Debug, Clone, PartialEq)]
pub enum Grid {
    Theta(Vec<f64>),
    Distortion { targets: Vec<f64>, reference: usize },
}

fn validate_grid_values(values: &[f64]) -> Result<()> {
    if values.is_empty() {
        return Err(Error::InvalidParameter("sweep grid is empty".into()));
    }
    if let Some(bad) = values.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
        return Err(Error::InvalidParameter(format!(
            "grid values must be positive and finite, got {bad}"
        )));
    }
    if values.len() >= 2 {
        let increasing = values[1] > values[0];
        for w in values.windows(2) {
            let ok = if increasing { w[1] > w[0] } else { w[1] < w[0] };
            if !ok {
                return Err(Error::InvalidParameter(
                    "grid must be strictly monotone".into(),
                ));
            }
        }
    }
    Ok(())
}

/// An ordered list of evaluated operating points.
#[derive(Debug, Clone)]
pub struct RDCurve {
    pub points: Vec<RDTuple>,
    pub policy: SweepPolicy,
    pub label: String,
}

/// Evaluates one tuple per grid point under the given policy. Grid points
/// are independent and evaluated in parallel; the result keeps grid order.
pub fn sweep_curve(spectra: &NetworkSpectra, policy: SweepPolicy, grid: &Grid) -> Result<RDCurve> {
    policy.validate()?;
    let thetas: Vec<f64> = match grid {
        Grid::Theta(values) => {
            validate_grid_values(values)?;
            values.clone()
        }
        Grid::Distortion { targets, reference } => {
            validate_grid_values(targets)?;
            let reference_spec = spectra.get(*reference)?;
            targets
                .iter()
                .map(|&target| solve_theta_for_policy(reference_spec, policy, target))
                .collect::<Result<_>>()?
        }
    };
    let points: Vec<RDTuple> = thetas
        .par_iter()
        .map(|&theta| evaluate_tuple(spectra, &policy.point_for_theta(theta)))
        .collect::<Result<_>>()?;
    let label = spectra
        .spectra()
        .iter()
        .map(|s| s.label().to_string())
        .collect::<Vec<_>>()
        .join(" | ");
    Ok(RDCurve {
        points,
        policy,
        label,
    })
}

/// Solves theta so that the reference spectrum reaches `target` distortion
/// under the policy's delta coupling.
pub fn solve_theta_for_policy(
    spec: &Spectrum,
    policy: SweepPolicy,
    target: f64,
) -> Result<f64> {
    policy.validate()?;
    match policy {
        SweepPolicy::Classical => solve_theta(spec, Delta::Classical, target),
        SweepPolicy::FixedDelta(d) => solve_theta(spec, Delta::Finite(d), target),
        SweepPolicy::ThetaEqualsDelta => {
            if !(target.is_finite() && target > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "target distortion must be positive and finite, got {target}"
                )));
            }
            // Both the cap and the level grow with theta, so the coupled
            // distortion is still monotone; the supremum (mean eigenvalue)
            // is only approached, never attained.
            let hi = 1e9 * spec.lambda_max();
            let dist = |theta: f64| distortion(spec, &policy.point_for_theta(theta));
            let reachable = dist(hi);
            if target > reachable {
                return Err(Error::TargetUnreachable {
                    target,
                    max: reachable,
                });
            }
            Ok(bisect_theta(0.0, hi, target, dist))
        }
    }
}
