//! `smra simulate`: Monte Carlo validation of the test channel for every
//! predecessor, with a 3-sigma pass/fail verdict per run.

use std::path::{Path, PathBuf};

use serde::Serialize;

use smra_core::covariance::build_covariance;
use smra_core::sim::{build_estimator, simulate_sharded, BForm};

use crate::config::{
    build_network, load_config, parse_b_form, DEFAULT_MC_DELTA, DEFAULT_SAMPLES,
};
use crate::error::{numerical, CliError, CliResult};
use crate::output::write_output;

const MAX_SIM_N: usize = 4096;

/// Per-predecessor seeds are decorrelated with the golden-ratio increment.
const SEED_STRIDE: u64 = 0x9E37_79B9_7F4A_7C15;

#[derive(Serialize)]
struct SimulateRecord {
    predecessor: usize,
    model: String,
    samples: u64,
    empirical_distortion: f64,
    standard_error: f64,
    analytic_distortion: f64,
    analytic_rate: f64,
    seed: u64,
    z_score: f64,
    pass: bool,
}

#[derive(Serialize)]
struct SimulateReport {
    n: usize,
    delta: f64,
    samples: u64,
    base_seed: u64,
    shards: usize,
    b_form: BForm,
    pass: bool,
    results: Vec<SimulateRecord>,
}

#[allow(clippy::too_many_arguments)]
pub fn run(
    config_path: &Path,
    n: Option<usize>,
    seed_flag: Option<u64>,
    samples_flag: Option<u64>,
    delta_flag: Option<f64>,
    out: Option<&PathBuf>,
) -> CliResult<()> {
    let config = load_config(config_path)?;
    let out = out.or(config.output.path.as_ref());
    let (net, _) = build_network(&config.network, n)?;
    if net.n() > MAX_SIM_N {
        return Err(CliError::config(format!(
            "simulation block length {} exceeds the supported maximum {MAX_SIM_N}",
            net.n()
        )));
    }
    let mc = &config.monte_carlo;
    let samples = samples_flag.or(mc.samples).unwrap_or(DEFAULT_SAMPLES);
    if samples < 100 {
        return Err(CliError::config(format!(
            "samples must be at least 100, got {samples}"
        )));
    }
    let base_seed = seed_flag.or(mc.seed).unwrap_or(0);
    let delta = delta_flag.or(mc.delta).unwrap_or(DEFAULT_MC_DELTA);
    if !(delta.is_finite() && delta > 0.0) {
        return Err(CliError::config(format!(
            "delta must be positive and finite, got {delta}"
        )));
    }
    let shards = mc.shards.unwrap_or(1);
    let b_form = parse_b_form(mc)?;

    let mut results = Vec::with_capacity(net.predecessor_count());
    for (index, pred) in net.predecessors().iter().enumerate() {
        let matrix = build_covariance(&pred.conditional, net.n()).map_err(numerical)?;
        let mut channel = build_estimator(&matrix, delta).map_err(numerical)?;
        if let Some(marginal) = &pred.marginal {
            channel = channel.with_marginal_model(marginal).map_err(numerical)?;
        }
        if b_form == BForm::Printed {
            channel = channel.with_printed_b().map_err(numerical)?;
        }
        let seed = base_seed.wrapping_add(SEED_STRIDE.wrapping_mul(index as u64));
        let run = simulate_sharded(&channel, samples, seed, shards).map_err(numerical)?;
        results.push(SimulateRecord {
            predecessor: pred.id,
            model: pred.conditional.label(),
            samples: run.samples,
            empirical_distortion: run.empirical_distortion,
            standard_error: run.standard_error,
            analytic_distortion: run.analytic_distortion,
            analytic_rate: run.analytic_rate,
            seed,
            z_score: run.z_score(),
            pass: run.within(3.0),
        });
    }

    let pass = results.iter().all(|r| r.pass);
    let report = SimulateReport {
        n: net.n(),
        delta,
        samples,
        base_seed,
        shards,
        b_form,
        pass,
        results,
    };
    let mut json = serde_json::to_string_pretty(&report)
        .map_err(|e| CliError::internal(format!("cannot serialize report: {e}")))?;
    json.push('\n');
    write_output(out, &json)?;

    if pass {
        Ok(())
    } else {
        Err(CliError::statistical(
            "empirical distortion outside 3 standard errors of the analytic value",
        ))
    }
}
