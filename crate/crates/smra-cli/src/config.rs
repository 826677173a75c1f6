//! Experiment configuration: one JSON document with a reserved top-level key
//! per subsystem (`network`, `sweep`, `monte_carlo`, `layout`, `output`).

use std::path::{Path, PathBuf};

use serde::Deserialize;

use smra_core::covariance::{CorrelationModel, Predecessor, PresetFamily, SourceNetwork};
use smra_core::rd::SweepPolicy;
use smra_core::sim::BForm;

use crate::error::{CliError, CliResult};

pub const DEFAULT_N: usize = 1000;
pub const DEFAULT_GRID_POINTS: usize = 60;
pub const DEFAULT_THETA_MIN_FACTOR: f64 = 1e-3;
pub const DEFAULT_SAMPLES: u64 = 100_000;
pub const DEFAULT_MC_DELTA: f64 = 1.0;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub network: NetworkConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub monte_carlo: MonteCarloConfig,
    #[serde(default)]
    pub layout: LayoutConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkConfig {
    /// `nearest_neighbor` (alias `nn`) or `first_order_markov`
    /// (alias `markov`); mutually exclusive with `predecessors`.
    #[serde(default)]
    pub preset: Option<String>,
    #[serde(default)]
    pub n: Option<usize>,
    #[serde(default)]
    pub source_id: Option<usize>,
    #[serde(default)]
    pub predecessors: Option<Vec<PredecessorConfig>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredecessorConfig {
    pub id: usize,
    pub model: ModelConfig,
    #[serde(default)]
    pub marginal: Option<ModelConfig>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelConfig {
    Memoryless { sigma2: f64 },
    NearestNeighbor { sigma2: f64 },
    FirstOrderMarkov { sigma2: f64, gamma: f64 },
    Custom { rho: Vec<f64> },
}

impl From<ModelConfig> for CorrelationModel {
    fn from(value: ModelConfig) -> Self {
        match value {
            ModelConfig::Memoryless { sigma2 } => CorrelationModel::Memoryless { sigma2 },
            ModelConfig::NearestNeighbor { sigma2 } => {
                CorrelationModel::NearestNeighbor { sigma2 }
            }
            ModelConfig::FirstOrderMarkov { sigma2, gamma } => {
                CorrelationModel::FirstOrderMarkov { sigma2, gamma }
            }
            ModelConfig::Custom { rho } => CorrelationModel::Custom { rho },
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    /// `classical`, `theta_eq_delta` or `fixed_delta`.
    #[serde(default)]
    pub policy: Option<String>,
    #[serde(default)]
    pub delta: Option<f64>,
    #[serde(default)]
    pub theta_grid: Option<Vec<f64>>,
    #[serde(default)]
    pub distortion_grid: Option<Vec<f64>>,
    /// Reference predecessor for distortion grids (defaults to the first).
    #[serde(default)]
    pub reference: Option<usize>,
    #[serde(default)]
    pub grid_points: Option<usize>,
    #[serde(default)]
    pub theta_min_factor: Option<f64>,
    #[serde(default)]
    pub include_memoryless_baseline: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonteCarloConfig {
    #[serde(default)]
    pub samples: Option<u64>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub delta: Option<f64>,
    #[serde(default)]
    pub shards: Option<usize>,
    /// `conditional_mean` (default) or `printed`.
    #[serde(default)]
    pub b_form: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayoutConfig {
    #[serde(default)]
    pub theta: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default)]
    pub path: Option<PathBuf>,
}

pub fn load_config(path: &Path) -> CliResult<ExperimentConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::config(format!("cannot read config {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::config(format!("cannot parse config {}: {e}", path.display())))
}

pub fn parse_preset(name: &str) -> CliResult<PresetFamily> {
    match name {
        "nearest_neighbor" | "nn" => Ok(PresetFamily::NearestNeighbor),
        "first_order_markov" | "markov" => Ok(PresetFamily::FirstOrderMarkov),
        other => Err(CliError::config(format!(
            "unknown preset {other:?} (expected nearest_neighbor or first_order_markov)"
        ))),
    }
}

/// Builds the network described by the config, applying an optional `--n`
/// override. Returns the network and a comma-free model tag for CSV rows.
pub fn build_network(
    config: &NetworkConfig,
    n_override: Option<usize>,
) -> CliResult<(SourceNetwork, String)> {
    let n = n_override.or(config.n).unwrap_or(DEFAULT_N);
    if n == 0 {
        return Err(CliError::config("n must be at least 1"));
    }
    match (&config.preset, &config.predecessors) {
        (Some(_), Some(_)) => Err(CliError::config(
            "network.preset and network.predecessors are mutually exclusive",
        )),
        (None, None) => Err(CliError::config(
            "network needs either a preset or a predecessors list",
        )),
        (Some(preset), None) => {
            let family = parse_preset(preset)?;
            let net = smra_core::covariance::preset_network(family, n)
                .map_err(|e| CliError::config(e.to_string()))?;
            Ok((net, family.name().to_string()))
        }
        (None, Some(predecessors)) => {
            let preds = predecessors
                .iter()
                .map(|p| Predecessor {
                    id: p.id,
                    conditional: p.model.clone().into(),
                    marginal: p.marginal.clone().map(Into::into),
                })
                .collect();
            let net = SourceNetwork::new(config.source_id.unwrap_or(0), n, preds)
                .map_err(|e| CliError::config(e.to_string()))?;
            Ok((net, "custom_network".to_string()))
        }
    }
}

/// Resolves the sweep policy from the CLI override and the config section.
pub fn resolve_policy(
    flag_policy: Option<&str>,
    flag_delta: Option<f64>,
    sweep: &SweepConfig,
) -> CliResult<SweepPolicy> {
    let name = flag_policy
        .map(str::to_string)
        .or_else(|| sweep.policy.clone())
        .unwrap_or_else(|| "classical".to_string());
    let delta = flag_delta.or(sweep.delta);
    let policy = match name.as_str() {
        "classical" => SweepPolicy::Classical,
        "theta_eq_delta" | "theta-eq-delta" => SweepPolicy::ThetaEqualsDelta,
        "fixed_delta" | "fixed-delta" => {
            let d = delta.ok_or_else(|| {
                CliError::config("policy fixed_delta needs a delta (flag --delta or sweep.delta)")
            })?;
            SweepPolicy::FixedDelta(d)
        }
        other => {
            return Err(CliError::config(format!(
                "unknown policy {other:?} (expected classical, theta_eq_delta or fixed_delta)"
            )))
        }
    };
    policy
        .validate()
        .map_err(|e| CliError::config(e.to_string()))?;
    Ok(policy)
}

pub fn parse_b_form(mc: &MonteCarloConfig) -> CliResult<BForm> {
    match mc.b_form.as_deref() {
        None | Some("conditional_mean") => Ok(BForm::ConditionalMean),
        Some("printed") => Ok(BForm::Printed),
        Some(other) => Err(CliError::config(format!(
            "unknown b_form {other:?} (expected conditional_mean or printed)"
        ))),
    }
}

/// The default sweep grid: `grid_points` log-spaced levels from `lambda_max`
/// down to `theta_min_factor * lambda_max`.
pub fn default_theta_grid(lambda_max: f64, points: usize, min_factor: f64) -> Vec<f64> {
    if points == 1 {
        return vec![lambda_max];
    }
    (0..points)
        .map(|k| lambda_max * min_factor.powf(k as f64 / (points - 1) as f64))
        .collect()
}
