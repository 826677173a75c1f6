//! Eigenvalue spectra of Toeplitz covariance matrices, with independent
//! analytic oracles: closed-form tridiagonal eigenvalues, asymptotic spectral
//! densities, and Szego-type averages.
//!
//! Tridiagonal matrices (memoryless and nearest-neighbor models) go through a
//! Sturm-sequence bisection solver, which resolves each eigenvalue to near
//! machine relative accuracy even at the nearly singular end of the spectrum.
//! Everything else uses a dense symmetric eigensolver.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::covariance::{build_covariance, CorrelationModel, SourceNetwork, ToeplitzMatrix};
use crate::error::{Error, Result};
use crate::quadrature::adaptive_simpson;

/// Absolute tolerance of Szego averages.
const SZEGO_TOL: f64 = 1e-8;

/// Sorted eigenvalue spectrum of one covariance matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    n: usize,
    eigenvalues: Vec<f64>,
    label: String,
    clipped: usize,
}

impl Spectrum {
    /// Wraps explicit eigenvalues (sorted descending on construction).
    /// All values must be finite and strictly positive.
    pub fn from_eigenvalues(mut values: Vec<f64>, label: impl Into<String>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidParameter("empty spectrum".into()));
        }
        if let Some(bad) = values.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
            return Err(Error::NotPositiveDefinite {
                context: format!("eigenvalue {bad} is not strictly positive"),
            });
        }
        values.sort_unstable_by(|a, b| b.partial_cmp(a).unwrap());
        Ok(Self {
            n: values.len(),
            eigenvalues: values,
            label: label.into(),
            clipped: 0,
        })
    }

    /// Wraps raw solver output. Values at or below zero within
    /// `-1e-10 * rho1` are clipped to the floor `1e-14 * rho1` (the
    /// nearest-neighbor family is nearly singular at large `n`); anything
    /// more negative is a genuine positive-definiteness failure.
    pub(crate) fn from_solver_output(
        mut values: Vec<f64>,
        rho1: f64,
        label: impl Into<String>,
    ) -> Result<Self> {
        let reject_below = -1e-10 * rho1;
        let floor = 1e-14 * rho1;
        let mut clipped = 0;
        for v in &mut values {
            if !v.is_finite() || *v < reject_below {
                return Err(Error::NotPositiveDefinite {
                    context: format!("computed eigenvalue {v} below tolerance {reject_below:e}"),
                });
            }
            if *v <= 0.0 {
                *v = floor;
                clipped += 1;
            }
        }
        values.sort_unstable_by(|a, b| b.partial_cmp(a).unwrap());
        Ok(Self {
            n: values.len(),
            eigenvalues: values,
            label: label.into(),
            clipped,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Eigenvalues in non-increasing order.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn lambda_max(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn lambda_min(&self) -> f64 {
        self.eigenvalues[self.n - 1]
    }

    /// Sum of all eigenvalues (the trace of the originating matrix).
    pub fn sum(&self) -> f64 {
        self.eigenvalues.iter().sum()
    }

    /// Average eigenvalue, `trace / n`.
    pub fn mean(&self) -> f64 {
        self.sum() / self.n as f64
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Number of eigenvalues that were clipped to the positive floor.
    pub fn clipped_count(&self) -> usize {
        self.clipped
    }
}

/// Full spectrum of a symmetric positive-definite Toeplitz matrix, sorted
/// descending. Deterministic for a given input.
pub fn eigenvalues(matrix: &ToeplitzMatrix) -> Result<Spectrum> {
    let n = matrix.n();
    let rho1 = matrix.rho()[0];
    let values = match matrix.bandwidth() {
        0 => vec![rho1; n],
        1 => {
            let diag = vec![rho1; n];
            let off = vec![matrix.rho()[1]; n - 1];
            symmetric_tridiagonal_eigenvalues(&diag, &off)
        }
        _ => matrix
            .dense()
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .collect(),
    };
    Spectrum::from_solver_output(values, rho1, matrix.label())
}

/// Eigenvalues (ascending) of the symmetric tridiagonal matrix with main
/// diagonal `diag` and off-diagonal `off`, by Sturm-count bisection. Each
/// eigenvalue is refined to relative precision a few ulps wide.
fn symmetric_tridiagonal_eigenvalues(diag: &[f64], off: &[f64]) -> Vec<f64> {
    let n = diag.len();
    assert_eq!(off.len(), n.saturating_sub(1));
    if n == 1 {
        return vec![diag[0]];
    }
    let off2: Vec<f64> = off.iter().map(|b| b * b).collect();
    let max_off2 = off2.iter().cloned().fold(0.0f64, f64::max);
    let pivmin = f64::MIN_POSITIVE * max_off2.max(1.0);

    // Number of eigenvalues strictly below x (LDL^T sign count).
    let count = |x: f64| -> usize {
        let mut negatives = 0;
        let mut d = 1.0f64;
        for i in 0..n {
            let b2 = if i == 0 { 0.0 } else { off2[i - 1] };
            d = (diag[i] - x) - b2 / d;
            if d.abs() < pivmin {
                d = -pivmin;
            }
            if d < 0.0 {
                negatives += 1;
            }
        }
        negatives
    };

    // Gershgorin interval containing the whole spectrum.
    let mut lower = f64::INFINITY;
    let mut upper = f64::NEG_INFINITY;
    for i in 0..n {
        let radius = if i > 0 { off[i - 1].abs() } else { 0.0 }
            + if i + 1 < n { off[i].abs() } else { 0.0 };
        lower = lower.min(diag[i] - radius);
        upper = upper.max(diag[i] + radius);
    }
    let pad = 1e-12 * (upper - lower).abs().max(1.0);
    lower -= pad;
    upper += pad;

    let reltol = 4.0 * f64::EPSILON;
    (1..=n)
        .map(|k| {
            let mut lo = lower;
            let mut hi = upper;
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if count(mid) >= k {
                    hi = mid;
                } else {
                    lo = mid;
                }
                if hi - lo <= reltol * lo.abs().max(hi.abs()) {
                    break;
                }
            }
            0.5 * (lo + hi)
        })
        .collect()
}

/// Closed-form spectrum of the nearest-neighbor model: eigenvalues
/// `sigma2 * (1 + cos(i*pi/(n+1)))` for `i = 1..n`, sorted descending.
///
/// The lower half of the spectrum is evaluated as
/// `2 sigma2 sin^2((n+1-i) pi / (2(n+1)))`, which avoids the cancellation of
/// `1 + cos` near the singular end.
pub fn tridiagonal_closed_form(sigma2: f64, n: usize) -> Spectrum {
    assert!(n >= 1, "n must be at least 1");
    assert!(sigma2 > 0.0, "sigma2 must be positive");
    let values: Vec<f64> = (1..=n)
        .map(|i| {
            if 2 * i <= n + 1 {
                sigma2 * (1.0 + ((i as f64) * PI / (n as f64 + 1.0)).cos())
            } else {
                let s = (((n + 1 - i) as f64) * PI / (2.0 * (n as f64 + 1.0))).sin();
                2.0 * sigma2 * s * s
            }
        })
        .collect();
    Spectrum {
        n,
        eigenvalues: values,
        label: format!("tridiagonal_closed_form(sigma2={sigma2})"),
        clipped: 0,
    }
}

/// Asymptotic spectral density `f(omega) = sum_m rho_{|m|+1} e^{-i m omega}`
/// in closed form for the named families, by direct summation for custom
/// finite sequences.
pub fn spectral_density(model: &CorrelationModel, omega: f64) -> f64 {
    match model {
        CorrelationModel::Memoryless { sigma2 } => *sigma2,
        CorrelationModel::NearestNeighbor { sigma2 } => sigma2 * (1.0 + omega.cos()),
        CorrelationModel::FirstOrderMarkov { sigma2, gamma } => {
            let g = gamma.abs();
            sigma2 * (1.0 - g * g) / (1.0 - 2.0 * g * omega.cos() + g * g)
        }
        CorrelationModel::Custom { rho } => {
            let mut f = rho[0];
            for (m, r) in rho.iter().enumerate().skip(1) {
                f += 2.0 * r * (m as f64 * omega).cos();
            }
            f
        }
    }
}

/// Range `[min f, max f]` of the spectral density over `[0, pi]`. Closed
/// form for the named families; a fine grid scan for custom sequences.
pub fn density_range(model: &CorrelationModel) -> (f64, f64) {
    match model {
        CorrelationModel::Memoryless { sigma2 } => (*sigma2, *sigma2),
        CorrelationModel::NearestNeighbor { sigma2 } => (0.0, 2.0 * sigma2),
        CorrelationModel::FirstOrderMarkov { sigma2, gamma } => {
            let g = gamma.abs();
            (
                sigma2 * (1.0 - g) / (1.0 + g),
                sigma2 * (1.0 + g) / (1.0 - g),
            )
        }
        CorrelationModel::Custom { .. } => {
            let panels = 8192;
            let mut min = f64::INFINITY;
            let mut max = f64::NEG_INFINITY;
            for k in 0..=panels {
                let f = spectral_density(model, k as f64 * PI / panels as f64);
                min = min.min(f);
                max = max.max(f);
            }
            (min, max)
        }
    }
}

/// Frequencies in `(0, pi)` where the density crosses `level`; used to split
/// quadrature domains at the waterfilling kink.
fn density_level_crossings(model: &CorrelationModel, level: f64) -> Vec<f64> {
    let interior = |w: f64| -> Option<f64> {
        (w.is_finite() && w > 0.0 && w < PI).then_some(w)
    };
    match model {
        CorrelationModel::Memoryless { .. } => vec![],
        CorrelationModel::NearestNeighbor { sigma2 } => {
            let c = level / sigma2 - 1.0;
            if c.abs() < 1.0 {
                interior(c.acos()).into_iter().collect()
            } else {
                vec![]
            }
        }
        CorrelationModel::FirstOrderMarkov { sigma2, gamma } => {
            let g = gamma.abs();
            if g == 0.0 || level <= 0.0 {
                return vec![];
            }
            let c = (1.0 + g * g - sigma2 * (1.0 - g * g) / level) / (2.0 * g);
            if c.abs() < 1.0 {
                interior(c.acos()).into_iter().collect()
            } else {
                vec![]
            }
        }
        CorrelationModel::Custom { .. } => {
            let panels = 4096;
            let mut crossings = Vec::new();
            let mut prev_w = 0.0;
            let mut prev = spectral_density(model, prev_w) - level;
            for k in 1..=panels {
                let w = k as f64 * PI / panels as f64;
                let cur = spectral_density(model, w) - level;
                if prev == 0.0 {
                    crossings.extend(interior(prev_w));
                } else if prev.signum() != cur.signum() && cur != 0.0 {
                    let (mut lo, mut hi) = (prev_w, w);
                    for _ in 0..80 {
                        let mid = 0.5 * (lo + hi);
                        let fm = spectral_density(model, mid) - level;
                        if fm == 0.0 {
                            lo = mid;
                            hi = mid;
                            break;
                        }
                        if fm.signum() == prev.signum() {
                            lo = mid;
                        } else {
                            hi = mid;
                        }
                    }
                    crossings.extend(interior(0.5 * (lo + hi)));
                }
                prev_w = w;
                prev = cur;
            }
            crossings
        }
    }
}

/// Szego average `(1/pi) * Int_0^pi g(f(omega)) d omega`, the limit of
/// `(1/n) sum_i g(lambda_i)` as `n` grows. Absolute tolerance 1e-8.
pub fn szego_average<F: Fn(f64) -> f64>(model: &CorrelationModel, g: F) -> Result<f64> {
    szego_average_split(model, g, &[])
}

/// Same as [`szego_average`] but splitting the domain at the given interior
/// frequencies first, so that integrands with kinks converge quickly.
pub fn szego_average_split<F: Fn(f64) -> f64>(
    model: &CorrelationModel,
    g: F,
    breakpoints: &[f64],
) -> Result<f64> {
    model.validate()?;
    let mut points = vec![0.0];
    let mut interior: Vec<f64> = breakpoints
        .iter()
        .copied()
        .filter(|w| w.is_finite() && *w > 0.0 && *w < PI)
        .collect();
    interior.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    interior.dedup();
    points.extend(interior);
    points.push(PI);

    let integrand = |w: f64| g(spectral_density(model, w));
    let mut total = 0.0;
    for pair in points.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        total += adaptive_simpson(&integrand, a, b, SZEGO_TOL * (b - a).max(1e-3))?;
    }
    Ok(total / PI)
}

/// Szego average of the waterfilling rate integrand
/// `g(x) = max(0, 0.5 log2(x / theta))`, with the kink located and split
/// automatically; the asymptotic counterpart of the per-spectrum
/// transmission rate.
pub fn waterfilling_rate_average(model: &CorrelationModel, theta: f64) -> Result<f64> {
    if !(theta.is_finite() && theta > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "theta must be positive, got {theta}"
        )));
    }
    let crossings = density_level_crossings(model, theta);
    szego_average_split(
        model,
        |x| {
            if x > theta {
                0.5 * (x / theta).log2()
            } else {
                0.0
            }
        },
        &crossings,
    )
}

/// Spectra of every predecessor of a network, computed once and shared by
/// the rate-distortion, layout and CLI layers.
#[derive(Debug, Clone)]
pub struct NetworkSpectra {
    n: usize,
    ids: Vec<usize>,
    spectra: Vec<Spectrum>,
}

impl NetworkSpectra {
    /// Assembles network spectra from explicit parts; every spectrum must
    /// share the same block length and ids must be unique.
    pub fn from_parts(ids: Vec<usize>, spectra: Vec<Spectrum>) -> Result<Self> {
        if ids.is_empty() || ids.len() != spectra.len() {
            return Err(Error::InvalidParameter(format!(
                "need matching non-empty ids and spectra, got {} ids and {} spectra",
                ids.len(),
                spectra.len()
            )));
        }
        for (k, id) in ids.iter().enumerate() {
            if ids[..k].contains(id) {
                return Err(Error::InvalidParameter(format!(
                    "duplicate predecessor id {id}"
                )));
            }
        }
        let n = spectra[0].n();
        for s in &spectra {
            if s.n() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    actual: s.n(),
                });
            }
        }
        Ok(Self { n, ids, spectra })
    }

    pub fn compute(net: &SourceNetwork) -> Result<Self> {
        let spectra: Vec<Spectrum> = net
            .predecessors()
            .par_iter()
            .map(|pred| {
                let matrix = build_covariance(&pred.conditional, net.n())?;
                eigenvalues(&matrix)
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            n: net.n(),
            ids: net.predecessors().iter().map(|p| p.id).collect(),
            spectra,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn ids(&self) -> &[usize] {
        &self.ids
    }

    pub fn spectra(&self) -> &[Spectrum] {
        &self.spectra
    }

    pub fn get(&self, id: usize) -> Result<&Spectrum> {
        self.ids
            .iter()
            .position(|&i| i == id)
            .map(|idx| &self.spectra[idx])
            .ok_or(Error::UnknownPredecessor(id))
    }

    /// Largest eigenvalue across all predecessors.
    pub fn lambda_max(&self) -> f64 {
        self.spectra
            .iter()
            .map(Spectrum::lambda_max)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}
