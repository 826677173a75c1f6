//! `smra spectrum`: per-predecessor eigenvalues with closed-form and
//! density-range cross-check columns.

use std::path::{Path, PathBuf};

use smra_core::covariance::CorrelationModel;
use smra_core::spectrum::{density_range, tridiagonal_closed_form};

use crate::config::{build_network, load_config};
use crate::error::CliResult;
use crate::output::{fmt_f64, write_output};

pub fn run(config_path: &Path, n: Option<usize>, out: Option<&PathBuf>) -> CliResult<()> {
    let config = load_config(config_path)?;
    let out = out.or(config.output.path.as_ref());
    let (net, tag) = build_network(&config.network, n)?;
    let spectra = super::network_spectra(&net)?;

    let mut csv = String::new();
    csv.push_str("# smra spectrum\n");
    csv.push_str(&format!("# model={tag} n={}\n", net.n()));
    csv.push_str("# units: lambda/closed_form/f_min/f_max in source variance, rel_err dimensionless\n");
    csv.push_str("pred_id,model,i,lambda,closed_form,rel_err,f_min,f_max\n");

    for (pred, spectrum) in net.predecessors().iter().zip(spectra.spectra()) {
        let closed_form = match &pred.conditional {
            CorrelationModel::NearestNeighbor { sigma2 } => {
                Some(tridiagonal_closed_form(*sigma2, net.n()))
            }
            _ => None,
        };
        let (f_min, f_max) = density_range(&pred.conditional);
        let model = pred.conditional.label();
        for (i, &lambda) in spectrum.eigenvalues().iter().enumerate() {
            let (cf_field, err_field) = match (&closed_form, &pred.conditional) {
                (Some(cf), _) => {
                    let reference = cf.eigenvalues()[i];
                    (
                        fmt_f64(reference),
                        fmt_f64((lambda - reference).abs() / reference),
                    )
                }
                (None, CorrelationModel::Memoryless { sigma2 }) => (
                    fmt_f64(*sigma2),
                    fmt_f64((lambda - sigma2).abs() / sigma2),
                ),
                _ => (String::new(), String::new()),
            };
            csv.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                pred.id,
                model,
                i + 1,
                fmt_f64(lambda),
                cf_field,
                err_field,
                fmt_f64(f_min),
                fmt_f64(f_max),
            ));
        }
    }
    write_output(out, &csv)
}
