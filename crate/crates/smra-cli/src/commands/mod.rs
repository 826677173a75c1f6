//! Subcommand implementations.

pub mod fig2;
pub mod layout;
pub mod rd_curve;
pub mod simulate;
pub mod spectrum;

use smra_core::covariance::SourceNetwork;
use smra_core::spectrum::NetworkSpectra;

use crate::error::{numerical, CliResult};
use crate::output::warn;

/// Computes the network spectra, surfacing eigenvalue clipping on stderr.
pub(crate) fn network_spectra(net: &SourceNetwork) -> CliResult<NetworkSpectra> {
    let spectra = NetworkSpectra::compute(net).map_err(numerical)?;
    for (id, spectrum) in spectra.ids().iter().zip(spectra.spectra()) {
        if spectrum.clipped_count() > 0 {
            warn(&format!(
                "predecessor {id}: {} near-zero eigenvalues clipped to the positive floor",
                spectrum.clipped_count()
            ));
        }
    }
    Ok(spectra)
}
