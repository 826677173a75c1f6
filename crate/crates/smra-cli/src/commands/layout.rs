//! `smra layout`: builds the incremental rate layout at a configured level
//! and verifies it against the rate formulas before writing it out.

use std::path::{Path, PathBuf};

use serde::Serialize;

use smra_core::layout::{build_layout, verify_against_theorem, BitstreamLayout, LayoutReport};

use crate::config::{build_network, load_config};
use crate::error::{numerical, CliError, CliResult};
use crate::output::write_output;

#[derive(Serialize)]
struct LayoutDocument {
    layout: BitstreamLayout,
    verification: LayoutReport,
}

pub fn run(config_path: &Path, n: Option<usize>, out: Option<&PathBuf>) -> CliResult<()> {
    let config = load_config(config_path)?;
    let out = out.or(config.output.path.as_ref());
    let (net, _) = build_network(&config.network, n)?;
    let theta = config
        .layout
        .theta
        .ok_or_else(|| CliError::config("layout.theta is required for the layout command"))?;
    let spectra = super::network_spectra(&net)?;
    let layout = build_layout(&spectra, theta).map_err(numerical)?;
    let verification = verify_against_theorem(&layout, &spectra, theta);
    let passed = verification.passed;

    let document = LayoutDocument {
        layout,
        verification,
    };
    let mut json = serde_json::to_string_pretty(&document)
        .map_err(|e| CliError::internal(format!("cannot serialize layout: {e}")))?;
    json.push('\n');
    write_output(out, &json)?;

    if passed {
        Ok(())
    } else {
        Err(CliError::internal(
            "layout totals disagree with the rate formulas",
        ))
    }
}
