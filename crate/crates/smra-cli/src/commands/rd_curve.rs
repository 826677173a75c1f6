//! `smra rd-curve`: sweeps the rate-distortion tuples over a grid and writes
//! one CSV record per point, with optional memoryless baseline columns.

use std::path::{Path, PathBuf};

use smra_core::rd::{evaluate_tuple, sweep_curve, Grid, RDCurve, RDTuple, SweepPolicy};
use smra_core::spectrum::NetworkSpectra;

use crate::config::{
    build_network, default_theta_grid, load_config, resolve_policy, SweepConfig,
    DEFAULT_GRID_POINTS, DEFAULT_THETA_MIN_FACTOR,
};
use crate::error::{numerical, CliError, CliResult};
use crate::output::{curve_csv, warn, write_output};

pub(crate) fn resolve_grid(sweep: &SweepConfig, spectra: &NetworkSpectra) -> CliResult<Grid> {
    match (&sweep.theta_grid, &sweep.distortion_grid) {
        (Some(_), Some(_)) => Err(CliError::config(
            "sweep.theta_grid and sweep.distortion_grid are mutually exclusive",
        )),
        (Some(thetas), None) => Ok(Grid::Theta(thetas.clone())),
        (None, Some(targets)) => Ok(Grid::Distortion {
            targets: targets.clone(),
            reference: sweep.reference.unwrap_or(spectra.ids()[0]),
        }),
        (None, None) => {
            let points = sweep.grid_points.unwrap_or(DEFAULT_GRID_POINTS);
            let min_factor = sweep.theta_min_factor.unwrap_or(DEFAULT_THETA_MIN_FACTOR);
            if points == 0 {
                return Err(CliError::config("sweep.grid_points must be at least 1"));
            }
            if !(min_factor.is_finite() && min_factor > 0.0 && min_factor < 1.0) {
                return Err(CliError::config(
                    "sweep.theta_min_factor must lie strictly between 0 and 1",
                ));
            }
            Ok(Grid::Theta(default_theta_grid(
                spectra.lambda_max(),
                points,
                min_factor,
            )))
        }
    }
}

/// Evaluates the memoryless baseline at exactly the levels the main sweep
/// visited, so rows stay aligned.
pub(crate) fn baseline_points(
    baseline: &NetworkSpectra,
    policy: SweepPolicy,
    curve: &RDCurve,
) -> CliResult<Vec<RDTuple>> {
    curve
        .points
        .iter()
        .map(|point| evaluate_tuple(baseline, &policy.point_for_theta(point.point.theta)))
        .collect::<smra_core::Result<_>>()
        .map_err(numerical)
}

pub(crate) fn warn_rate_shortfalls(curve: &RDCurve) {
    let mut flagged: Vec<usize> = curve
        .points
        .iter()
        .flat_map(|p| p.rate_shortfalls())
        .collect();
    flagged.sort_unstable();
    flagged.dedup();
    if !flagged.is_empty() {
        warn(&format!(
            "test-channel rate exceeds the waterfilling rate for predecessors {flagged:?} at some grid points (delta/theta coupling under-provisions the extraction)"
        ));
    }
}

#[allow(clippy::too_many_arguments)]
pub fn run(
    config_path: &Path,
    n: Option<usize>,
    policy_flag: Option<&str>,
    delta_flag: Option<f64>,
    out: Option<&PathBuf>,
) -> CliResult<()> {
    let config = load_config(config_path)?;
    let out = out.or(config.output.path.as_ref());
    let (net, tag) = build_network(&config.network, n)?;
    let policy = resolve_policy(policy_flag, delta_flag, &config.sweep)?;
    let spectra = super::network_spectra(&net)?;
    let grid = resolve_grid(&config.sweep, &spectra)?;
    let curve = sweep_curve(&spectra, policy, &grid).map_err(numerical)?;
    warn_rate_shortfalls(&curve);

    let baseline = if config.sweep.include_memoryless_baseline.unwrap_or(false) {
        let baseline_spectra = super::network_spectra(&net.memoryless_baseline())?;
        Some(baseline_points(&baseline_spectra, policy, &curve)?)
    } else {
        None
    };

    let comments = vec![
        "smra rd-curve".to_string(),
        format!("model={tag} n={} policy={}", net.n(), policy.tag()),
    ];
    let csv = curve_csv(&comments, &curve, baseline.as_deref(), net.n(), &tag)?;
    write_output(out, &csv)
}
