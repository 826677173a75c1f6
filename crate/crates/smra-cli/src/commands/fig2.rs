//! `smra reproduce-fig2`: one-shot rate-distortion sweep of a preset family
//! with its memoryless baseline, at the standard block length and grid.

use std::path::PathBuf;

use smra_core::covariance::{preset_network, PresetFamily};
use smra_core::rd::{sweep_curve, Grid, SweepPolicy};

use crate::config::{default_theta_grid, DEFAULT_GRID_POINTS, DEFAULT_N, DEFAULT_THETA_MIN_FACTOR};
use crate::error::{numerical, CliResult};
use crate::output::{curve_csv, write_output};

use super::rd_curve::{baseline_points, warn_rate_shortfalls};

pub fn run(
    family: PresetFamily,
    n: Option<usize>,
    seed: Option<u64>,
    out: Option<&PathBuf>,
) -> CliResult<()> {
    let n = n.unwrap_or(DEFAULT_N);
    let seed = seed.unwrap_or(0);
    let net = preset_network(family, n).map_err(|e| crate::error::CliError::config(e.to_string()))?;
    let spectra = super::network_spectra(&net)?;
    let baseline_spectra = super::network_spectra(&net.memoryless_baseline())?;

    let grid = default_theta_grid(
        spectra.lambda_max(),
        DEFAULT_GRID_POINTS,
        DEFAULT_THETA_MIN_FACTOR,
    );
    let policy = SweepPolicy::Classical;
    let curve = sweep_curve(&spectra, policy, &Grid::Theta(grid)).map_err(numerical)?;
    warn_rate_shortfalls(&curve);
    let baseline = baseline_points(&baseline_spectra, policy, &curve)?;

    let tag = family.name();
    let comments = vec![
        "smra reproduce-fig2".to_string(),
        format!("family={tag} n={n} seed={seed} policy={}", policy.tag()),
        format!(
            "grid: {DEFAULT_GRID_POINTS} log-spaced theta in [{DEFAULT_THETA_MIN_FACTOR:e}*lambda_max, lambda_max]"
        ),
        "columns D_ml_*/R_ml_*/S_ml are the matched memoryless baseline".to_string(),
    ];
    let csv = curve_csv(&comments, &curve, Some(&baseline), n, tag)?;
    write_output(out, &csv)
}
