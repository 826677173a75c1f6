//! Incremental bitstream layout as rate accounting.
//!
//! Per spectral component, predecessors are stacked from the one that needs
//! the least rate (the best side information, smallest conditional
//! eigenvalue) to the one that needs the most; the stack stores non-negative
//! rate increments, and serving predecessor `j` extracts the prefix that ends
//! at `j`'s level. The prefix sums then reproduce the per-predecessor
//! transmission rates exactly, and the full stack totals the storage rate,
//! realizing the component-wise worst case by construction.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::rd::{storage_rate, transmission_rate};
use crate::spectrum::NetworkSpectra;

/// Rate stack of one spectral component.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComponentLayout {
    /// Component rank (0-based, by descending eigenvalue).
    pub index: usize,
    /// Predecessor ids, shortest extraction prefix first.
    pub order: Vec<usize>,
    /// Non-negative rate increments in bits per source symbol, aligned with
    /// `order`; the prefix sum through a predecessor's level is that
    /// predecessor's required rate for this component.
    pub increments: Vec<f64>,
}

/// Extraction index set of one predecessor: how many levels of each
/// component's stack it takes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExtractionSet {
    pub id: usize,
    /// Prefix length per component (1-based level count; 0 never occurs
    /// because every predecessor sits somewhere in every stack).
    pub prefix_len: Vec<usize>,
}

/// Complete layout: per-component stacks, per-predecessor extraction sets,
/// and the rate totals they induce.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BitstreamLayout {
    pub n: usize,
    pub theta: f64,
    pub predecessor_ids: Vec<usize>,
    pub components: Vec<ComponentLayout>,
    pub extraction_sets: Vec<ExtractionSet>,
    /// Full-stack total in bits per source symbol.
    pub storage_rate: f64,
    /// Per-predecessor prefix totals, aligned with `predecessor_ids`.
    pub extraction_rates: Vec<f64>,
}

impl BitstreamLayout {
    /// Total rate extracted when predecessor `id` is the side information.
    pub fn extract_rate(&self, id: usize) -> Result<f64> {
        self.predecessor_ids
            .iter()
            .position(|&p| p == id)
            .map(|idx| self.extraction_rates[idx])
            .ok_or(Error::UnknownPredecessor(id))
    }
}

/// Builds the layout for a network's spectra at waterfilling level `theta`.
pub fn build_layout(spectra: &NetworkSpectra, theta: f64) -> Result<BitstreamLayout> {
    if !(theta.is_finite() && theta > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "theta must be positive and finite, got {theta}"
        )));
    }
    let n = spectra.n();
    let ids = spectra.ids().to_vec();
    let count = ids.len();
    for s in spectra.spectra() {
        if s.n() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: s.n(),
            });
        }
    }

    let scale = n as f64;
    let mut components = Vec::with_capacity(n);
    let mut prefix_lens = vec![vec![0usize; n]; count];
    let mut extraction_rates = vec![0.0f64; count];
    let mut storage = 0.0f64;

    #[allow(clippy::needless_range_loop)]
    for i in 0..n {
        // Required rate of each predecessor for this component, bits/symbol.
        let required: Vec<f64> = spectra
            .spectra()
            .iter()
            .map(|s| {
                let lambda = s.eigenvalues()[i];
                if lambda > theta {
                    0.5 * (lambda / theta).log2() / scale
                } else {
                    0.0
                }
            })
            .collect();

        // Ascending requirement; ties keep predecessor list order.
        let mut positions: Vec<usize> = (0..count).collect();
        positions.sort_by(|&a, &b| required[a].partial_cmp(&required[b]).unwrap());

        let mut order = Vec::with_capacity(count);
        let mut increments = Vec::with_capacity(count);
        let mut level_rate = 0.0;
        for (level, &p) in positions.iter().enumerate() {
            order.push(ids[p]);
            increments.push(required[p] - level_rate);
            level_rate = required[p];
            prefix_lens[p][i] = level + 1;
            extraction_rates[p] += required[p];
        }
        storage += level_rate;
        components.push(ComponentLayout {
            index: i,
            order,
            increments,
        });
    }

    let extraction_sets = ids
        .iter()
        .zip(prefix_lens)
        .map(|(&id, prefix_len)| ExtractionSet { id, prefix_len })
        .collect();

    Ok(BitstreamLayout {
        n,
        theta,
        predecessor_ids: ids,
        components,
        extraction_sets,
        storage_rate: storage,
        extraction_rates,
    })
}

/// Kinds of inconsistency a layout verification can report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MismatchKind {
    /// An increment is negative.
    NegativeIncrement,
    /// A component's prefix sum disagrees with the required rate.
    ComponentPrefix,
    /// A predecessor's extraction total disagrees with the transmission rate.
    ExtractionRate,
    /// The full-stack total disagrees with the storage rate.
    StorageRate,
    /// An extraction set's prefix length disagrees with the stack order.
    Nesting,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LayoutMismatch {
    pub kind: MismatchKind,
    pub component: Option<usize>,
    pub predecessor: Option<usize>,
    pub expected: f64,
    pub actual: f64,
}

/// Verification outcome; `passed` means every check was within tolerance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LayoutReport {
    pub passed: bool,
    pub mismatches: Vec<LayoutMismatch>,
}

const VERIFY_TOL: f64 = 1e-12;

/// Checks a layout against the rate formulas it must realize: every
/// per-component prefix sum against the component's required rate, every
/// extraction total against the transmission rate, and the full stack against
/// the storage rate, all within 1e-12 absolute. A perturbed increment is
/// reported at its component.
pub fn verify_against_theorem(
    layout: &BitstreamLayout,
    spectra: &NetworkSpectra,
    theta: f64,
) -> LayoutReport {
    let mut mismatches = Vec::new();
    let n = layout.n;
    let scale = n as f64;

    for component in &layout.components {
        let mut prefix = 0.0;
        for (level, (&id, &inc)) in component
            .order
            .iter()
            .zip(&component.increments)
            .enumerate()
        {
            if inc < 0.0 {
                mismatches.push(LayoutMismatch {
                    kind: MismatchKind::NegativeIncrement,
                    component: Some(component.index),
                    predecessor: Some(id),
                    expected: 0.0,
                    actual: inc,
                });
            }
            prefix += inc;
            let spectrum = match spectra.get(id) {
                Ok(s) => s,
                Err(_) => continue,
            };
            let lambda = spectrum.eigenvalues()[component.index];
            let required = if lambda > theta {
                0.5 * (lambda / theta).log2() / scale
            } else {
                0.0
            };
            if (prefix - required).abs() > VERIFY_TOL {
                mismatches.push(LayoutMismatch {
                    kind: MismatchKind::ComponentPrefix,
                    component: Some(component.index),
                    predecessor: Some(id),
                    expected: required,
                    actual: prefix,
                });
            }
            let set = &layout.extraction_sets[layout
                .predecessor_ids
                .iter()
                .position(|&p| p == id)
                .unwrap_or(0)];
            if set.prefix_len[component.index] != level + 1 {
                mismatches.push(LayoutMismatch {
                    kind: MismatchKind::Nesting,
                    component: Some(component.index),
                    predecessor: Some(id),
                    expected: (level + 1) as f64,
                    actual: set.prefix_len[component.index] as f64,
                });
            }
        }
    }

    for (&id, &rate) in layout.predecessor_ids.iter().zip(&layout.extraction_rates) {
        if let Ok(spectrum) = spectra.get(id) {
            let expected = transmission_rate(spectrum, theta);
            if (rate - expected).abs() > VERIFY_TOL {
                mismatches.push(LayoutMismatch {
                    kind: MismatchKind::ExtractionRate,
                    component: None,
                    predecessor: Some(id),
                    expected,
                    actual: rate,
                });
            }
        }
    }

    if let Ok(expected) = storage_rate(spectra.spectra(), theta) {
        if (layout.storage_rate - expected).abs() > VERIFY_TOL {
            mismatches.push(LayoutMismatch {
                kind: MismatchKind::StorageRate,
                component: None,
                predecessor: None,
                expected,
                actual: layout.storage_rate,
            });
        }
    }

    LayoutReport {
        passed: mismatches.is_empty(),
        mismatches,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covariance::{preset_network, CorrelationModel, Predecessor, PresetFamily, SourceNetwork};
    use crate::rd::{storage_rate, transmission_rate};
    use crate::spectrum::NetworkSpectra;
    use approx::assert_abs_diff_eq;

    /// Two predecessors with the exact dyadic spectra (4, 0.5) and (2, 2),
    /// so every rate below is a power-of-two computation.
    fn dyadic_spectra() -> NetworkSpectra {
        let s1 = crate::spectrum::Spectrum::from_eigenvalues(vec![4.0, 0.5], "p1").unwrap();
        let s2 = crate::spectrum::Spectrum::from_eigenvalues(vec![2.0, 2.0], "p2").unwrap();
        NetworkSpectra::from_parts(vec![1, 2], vec![s1, s2]).unwrap()
    }

    #[test]
    fn dyadic_example_totals() {
        let spectra = dyadic_spectra();
        assert_eq!(spectra.get(1).unwrap().eigenvalues(), &[4.0, 0.5]);
        assert_eq!(spectra.get(2).unwrap().eigenvalues(), &[2.0, 2.0]);

        let layout = build_layout(&spectra, 1.0).unwrap();
        assert_eq!(layout.storage_rate, 0.75);
        assert_eq!(layout.extract_rate(1).unwrap(), 0.5);
        assert_eq!(layout.extract_rate(2).unwrap(), 0.5);

        // Component 0: predecessor 2 needs 0.25 bits/symbol, predecessor 1
        // needs 0.5; the stack orders 2 first with increments (0.25, 0.25).
        let c0 = &layout.components[0];
        assert_eq!(c0.order, vec![2, 1]);
        assert_eq!(c0.increments, vec![0.25, 0.25]);
        // Component 1: predecessor 1 needs nothing, predecessor 2 needs 0.25.
        let c1 = &layout.components[1];
        assert_eq!(c1.order, vec![1, 2]);
        assert_eq!(c1.increments, vec![0.0, 0.25]);
    }

    #[test]
    fn single_predecessor_storage_equals_extraction() {
        let net = SourceNetwork::new(
            0,
            8,
            vec![Predecessor {
                id: 4,
                conditional: CorrelationModel::FirstOrderMarkov {
                    sigma2: 1.0,
                    gamma: 0.5,
                },
                marginal: None,
            }],
        )
        .unwrap();
        let spectra = NetworkSpectra::compute(&net).unwrap();
        let layout = build_layout(&spectra, 0.3).unwrap();
        assert_eq!(layout.storage_rate, layout.extract_rate(4).unwrap());
        for c in &layout.components {
            assert_eq!(c.increments.len(), 1);
        }
    }

    #[test]
    fn theta_above_spectrum_gives_empty_extraction() {
        let spectra = dyadic_spectra();
        let layout = build_layout(&spectra, 5.0).unwrap();
        assert_eq!(layout.storage_rate, 0.0);
        assert_eq!(layout.extract_rate(1).unwrap(), 0.0);
        assert_eq!(layout.extract_rate(2).unwrap(), 0.0);
    }

    #[test]
    fn worst_predecessor_extracts_the_whole_stack() {
        let net = preset_network(PresetFamily::NearestNeighbor, 64).unwrap();
        let spectra = NetworkSpectra::compute(&net).unwrap();
        let layout = build_layout(&spectra, 0.5).unwrap();
        // Predecessor 3 (variance 4) dominates every component.
        for set in &layout.extraction_sets {
            if set.id == 3 {
                assert!(set.prefix_len.iter().all(|&l| l == 3));
            }
        }
        assert_abs_diff_eq!(
            layout.storage_rate,
            layout.extract_rate(3).unwrap(),
            epsilon = 1e-15
        );
    }

    #[test]
    fn increments_nonnegative_and_nested() {
        let net = preset_network(PresetFamily::FirstOrderMarkov, 32).unwrap();
        let spectra = NetworkSpectra::compute(&net).unwrap();
        let layout = build_layout(&spectra, 0.2).unwrap();
        for c in &layout.components {
            for &inc in &c.increments {
                assert!(inc >= 0.0);
            }
        }
        // Prefix lengths are positions in the order: a predecessor earlier in
        // a component's order has a shorter prefix there.
        for c in &layout.components {
            for (level, &id) in c.order.iter().enumerate() {
                let set = layout
                    .extraction_sets
                    .iter()
                    .find(|s| s.id == id)
                    .unwrap();
                assert_eq!(set.prefix_len[c.index], level + 1);
            }
        }
    }

    #[test]
    fn totals_match_rate_formulas() {
        let net = preset_network(PresetFamily::FirstOrderMarkov, 48).unwrap();
        let spectra = NetworkSpectra::compute(&net).unwrap();
        let grid: Vec<f64> = (0..20)
            .map(|k| spectra.lambda_max() * 1e-3f64.powf(k as f64 / 19.0))
            .collect();
        for theta in grid {
            let layout = build_layout(&spectra, theta).unwrap();
            for (&id, spec) in spectra.ids().iter().zip(spectra.spectra()) {
                assert_abs_diff_eq!(
                    layout.extract_rate(id).unwrap(),
                    transmission_rate(spec, theta),
                    epsilon = 1e-12
                );
            }
            assert_abs_diff_eq!(
                layout.storage_rate,
                storage_rate(spectra.spectra(), theta).unwrap(),
                epsilon = 1e-12
            );
            let report = verify_against_theorem(&layout, &spectra, theta);
            assert!(report.passed, "{:?}", report.mismatches);
        }
    }

    #[test]
    fn fault_injection_flags_the_perturbed_component() {
        let net = preset_network(PresetFamily::NearestNeighbor, 16).unwrap();
        let spectra = NetworkSpectra::compute(&net).unwrap();
        let mut layout = build_layout(&spectra, 0.4).unwrap();
        layout.components[5].increments[1] += 1e-6;
        let report = verify_against_theorem(&layout, &spectra, 0.4);
        assert!(!report.passed);
        let flagged: Vec<usize> = report
            .mismatches
            .iter()
            .filter_map(|m| m.component)
            .collect();
        assert!(!flagged.is_empty());
        assert!(flagged.iter().all(|&c| c == 5), "flagged: {flagged:?}");
    }

    #[test]
    fn permuting_predecessors_leaves_totals_unchanged() {
        let mk = |ids: [usize; 3], models: [CorrelationModel; 3]| {
            let preds = ids
                .iter()
                .zip(models)
                .map(|(&id, conditional)| Predecessor {
                    id,
                    conditional,
                    marginal: None,
                })
                .collect();
            SourceNetwork::new(0, 24, preds).unwrap()
        };
        let models = [
            CorrelationModel::NearestNeighbor { sigma2: 2.0 },
            CorrelationModel::FirstOrderMarkov {
                sigma2: 1.0,
                gamma: 0.5,
            },
            CorrelationModel::Memoryless { sigma2: 3.0 },
        ];
        let forward = mk([1, 2, 3], models.clone());
        let reversed = mk(
            [3, 2, 1],
            [models[2].clone(), models[1].clone(), models[0].clone()],
        );
        let theta = 0.35;
        let a = build_layout(&NetworkSpectra::compute(&forward).unwrap(), theta).unwrap();
        let b = build_layout(&NetworkSpectra::compute(&reversed).unwrap(), theta).unwrap();
        assert_abs_diff_eq!(a.storage_rate, b.storage_rate, epsilon = 1e-15);
        for id in [1, 2, 3] {
            assert_abs_diff_eq!(
                a.extract_rate(id).unwrap(),
                b.extract_rate(id).unwrap(),
                epsilon = 1e-15
            );
        }
    }

    #[test]
    fn unknown_predecessor_is_an_error() {
        let spectra = dyadic_spectra();
        let layout = build_layout(&spectra, 1.0).unwrap();
        assert!(matches!(
            layout.extract_rate(99).unwrap_err(),
            Error::UnknownPredecessor(99)
        ));
    }
}
