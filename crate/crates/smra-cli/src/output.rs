//! Byte-stable output formatting and the file-or-stdout sink.

use std::io::Write;
use std::path::PathBuf;

use smra_core::rd::{Delta, RDCurve, RDTuple};

use crate::error::{CliError, CliResult};

/// Fixed 17-significant-digit float formatting for CSV fields.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// The delta column: the finite value or the literal `inf`.
pub fn fmt_delta(delta: Delta) -> String {
    match delta.as_finite() {
        Some(d) => fmt_f64(d),
        None => "inf".to_string(),
    }
}

/// Writes `content` to the path when given, to stdout otherwise.
pub fn write_output(out: Option<&PathBuf>, content: &str) -> CliResult<()> {
    match out {
        Some(path) => std::fs::write(path, content).map_err(|e| {
            CliError::config(format!("cannot write output {}: {e}", path.display()))
        }),
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            lock.write_all(content.as_bytes())
                .and_then(|_| lock.flush())
                .map_err(|e| CliError::config(format!("cannot write to stdout: {e}")))
        }
    }
}

fn require_finite(value: f64, what: &str) -> CliResult<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(CliError::internal(format!(
            "non-finite {what} in curve output: {value}"
        )))
    }
}

/// Renders a swept curve as CSV: comment header lines prefixed `#`, one named
/// column row, then one record per grid point with columns
/// `theta,delta,D_<id>...,R_<id>...,S,n,model` plus optional memoryless
/// baseline columns evaluated at the same levels.
pub fn curve_csv(
    comments: &[String],
    curve: &RDCurve,
    baseline: Option<&[RDTuple]>,
    n: usize,
    model_tag: &str,
) -> CliResult<String> {
    let ids: Vec<usize> = curve.points[0]
        .per_predecessor
        .iter()
        .map(|p| p.id)
        .collect();
    let mut csv = String::new();
    for line in comments {
        csv.push_str(&format!("# {line}\n"));
    }
    csv.push_str(
        "# units: theta/delta/D in source variance, R/S in bits per source symbol\n",
    );

    let mut columns = vec!["theta".to_string(), "delta".to_string()];
    columns.extend(ids.iter().map(|id| format!("D_{id}")));
    columns.extend(ids.iter().map(|id| format!("R_{id}")));
    columns.push("S".to_string());
    columns.push("n".to_string());
    columns.push("model".to_string());
    if baseline.is_some() {
        columns.extend(ids.iter().map(|id| format!("D_ml_{id}")));
        columns.extend(ids.iter().map(|id| format!("R_ml_{id}")));
        columns.push("S_ml".to_string());
    }
    csv.push_str(&columns.join(","));
    csv.push('\n');

    for (row, point) in curve.points.iter().enumerate() {
        let mut fields = vec![
            fmt_f64(require_finite(point.point.theta, "theta")?),
            fmt_delta(point.point.delta),
        ];
        for p in &point.per_predecessor {
            fields.push(fmt_f64(require_finite(p.distortion, "distortion")?));
        }
        for p in &point.per_predecessor {
            fields.push(fmt_f64(require_finite(p.transmission_rate, "rate")?));
        }
        fields.push(fmt_f64(require_finite(point.storage_rate, "storage rate")?));
        fields.push(n.to_string());
        fields.push(model_tag.to_string());
        if let Some(base) = baseline {
            let b = &base[row];
            for p in &b.per_predecessor {
                fields.push(fmt_f64(require_finite(p.distortion, "baseline distortion")?));
            }
            for p in &b.per_predecessor {
                fields.push(fmt_f64(require_finite(p.transmission_rate, "baseline rate")?));
            }
            fields.push(fmt_f64(require_finite(b.storage_rate, "baseline storage")?));
        }
        csv.push_str(&fields.join(","));
        csv.push('\n');
    }
    Ok(csv)
}

/// Emits diagnostics (clipping, rate shortfalls) on stderr only.
pub fn warn(message: &str) {
    eprintln!("warning: {message}");
}
