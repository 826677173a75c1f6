//! Correlation models and the Toeplitz covariance matrices they generate.
//!
//! A [`CorrelationModel`] describes one stationary correlation sequence
//! `rho_1, rho_2, ...` (with `rho_1` the per-symbol variance); building it at
//! block length `n` yields the symmetric positive-definite Toeplitz matrix
//! with entries `M[a][b] = rho_{|a-b|+1}`. A [`SourceNetwork`] groups, for one
//! requested source, the conditional model of every possible predecessor.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Stationary correlation model for one conditional (or marginal) covariance.
#[derive(Debug, Clone, PartialEq)]
pub enum CorrelationModel {
    /// `rho_1 = sigma2`, zero elsewhere: by-symbol independence.
    Memoryless { sigma2: f64 },
    /// `rho_1 = sigma2`, `rho_2 = sigma2 / 2`, zero elsewhere: each symbol is
    /// correlated only with its direct neighbours.
    NearestNeighbor { sigma2: f64 },
    /// `rho_i = sigma2 * |gamma|^(i-1)` with `-1 < gamma < 1`.
    FirstOrderMarkov { sigma2: f64, gamma: f64 },
    /// Explicit finite correlation sequence; the first entry is the variance.
    /// The sequence is zero-extended past its support, and positive
    /// definiteness is verified when the matrix is built.
    Custom { rho: Vec<f64> },
}

impl CorrelationModel {
    /// Checks the parameter ranges of the model.
    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Memoryless { sigma2 }
            | Self::NearestNeighbor { sigma2 }
            | Self::FirstOrderMarkov { sigma2, .. } => {
                if !(sigma2.is_finite() && *sigma2 > 0.0) {
                    return Err(Error::InvalidParameter(format!(
                        "sigma2 must be positive and finite, got {sigma2}"
                    )));
                }
            }
            Self::Custom { rho } => {
                if rho.is_empty() {
                    return Err(Error::InvalidParameter(
                        "custom correlation sequence must be non-empty".into(),
                    ));
                }
                if !(rho[0].is_finite() && rho[0] > 0.0) {
                    return Err(Error::InvalidParameter(format!(
                        "custom rho[0] (the variance) must be positive, got {}",
                        rho[0]
                    )));
                }
                if let Some(bad) = rho.iter().find(|r| !r.is_finite()) {
                    return Err(Error::InvalidParameter(format!(
                        "custom correlation value {bad} is not finite"
                    )));
                }
            }
        }
        if let Self::FirstOrderMarkov { gamma, .. } = self {
            if !(gamma.is_finite() && gamma.abs() < 1.0) {
                return Err(Error::InvalidParameter(format!(
                    "gamma must satisfy -1 < gamma < 1, got {gamma}"
                )));
            }
        }
        Ok(())
    }

    /// Per-symbol variance `rho_1`.
    pub fn variance(&self) -> f64 {
        match self {
            Self::Memoryless { sigma2 }
            | Self::NearestNeighbor { sigma2 }
            | Self::FirstOrderMarkov { sigma2, .. } => *sigma2,
            Self::Custom { rho } => rho[0],
        }
    }

    /// Correlation at symbol distance `lag` (`lag = 0` is the variance).
    pub fn correlation(&self, lag: usize) -> f64 {
        match self {
            Self::Memoryless { sigma2 } => {
                if lag == 0 {
                    *sigma2
                } else {
                    0.0
                }
            }
            Self::NearestNeighbor { sigma2 } => match lag {
                0 => *sigma2,
                1 => sigma2 / 2.0,
                _ => 0.0,
            },
            Self::FirstOrderMarkov { sigma2, gamma } => sigma2 * gamma.abs().powi(lag as i32),
            Self::Custom { rho } => rho.get(lag).copied().unwrap_or(0.0),
        }
    }

    /// The first `n` correlations `rho_1 ... rho_n` (zero-extended).
    pub fn rho_sequence(&self, n: usize) -> Vec<f64> {
        (0..n).map(|lag| self.correlation(lag)).collect()
    }

    /// The memoryless model with the same per-symbol variance.
    pub fn memoryless_equivalent(&self) -> CorrelationModel {
        CorrelationModel::Memoryless {
            sigma2: self.variance(),
        }
    }

    /// Short human-readable tag, used for provenance columns in outputs.
    pub fn label(&self) -> String {
        match self {
            Self::Memoryless { sigma2 } => format!("memoryless(sigma2={sigma2})"),
            Self::NearestNeighbor { sigma2 } => format!("nearest_neighbor(sigma2={sigma2})"),
            Self::FirstOrderMarkov { sigma2, gamma } => {
                format!("first_order_markov(sigma2={sigma2};gamma={gamma})")
            }
            Self::Custom { rho } => format!("custom(len={})", rho.len()),
        }
    }
}

/// Symmetric positive-definite Toeplitz matrix built from a correlation
/// sequence: `M[a][b] = rho_{|a-b|+1}`.
#[derive(Debug, Clone)]
pub struct ToeplitzMatrix {
    n: usize,
    rho: Vec<f64>,
    dense: DMatrix<f64>,
    label: String,
}

impl ToeplitzMatrix {
    fn from_rho(rho: Vec<f64>, label: String) -> Self {
        let n = rho.len();
        let dense = DMatrix::from_fn(n, n, |a, b| rho[a.abs_diff(b)]);
        Self {
            n,
            rho,
            dense,
            label,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// First row/column `rho_1 ... rho_n`.
    pub fn rho(&self) -> &[f64] {
        &self.rho
    }

    pub fn dense(&self) -> &DMatrix<f64> {
        &self.dense
    }

    pub fn entry(&self, a: usize, b: usize) -> f64 {
        self.rho[a.abs_diff(b)]
    }

    /// Trace, equal to `n * rho_1`.
    pub fn trace(&self) -> f64 {
        self.n as f64 * self.rho[0]
    }

    /// Largest symbol distance with a non-zero correlation (0 for diagonal
    /// matrices, 1 for tridiagonal ones).
    pub fn bandwidth(&self) -> usize {
        self.rho.iter().rposition(|&r| r != 0.0).unwrap_or(0)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Whether the dense matrix admits a Cholesky factorization.
    pub fn is_positive_definite(&self) -> bool {
        nalgebra::Cholesky::new(self.dense.clone()).is_some()
    }
}

/// Builds the `n x n` Toeplitz covariance matrix of `model`.
///
/// Custom sequences are checked for positive definiteness eagerly (this is
/// the only way an invalid input can slip past parameter validation); the
/// closed-form families are positive definite for every `n` by construction.
pub fn build_covariance(model: &CorrelationModel, n: usize) -> Result<ToeplitzMatrix> {
    if n == 0 {
        return Err(Error::InvalidParameter(
            "block length n must be at least 1".into(),
        ));
    }
    model.validate()?;
    let matrix = ToeplitzMatrix::from_rho(model.rho_sequence(n), model.label());
    if let CorrelationModel::Custom { .. } = model {
        if !matrix.is_positive_definite() {
            return Err(Error::NotPositiveDefinite {
                context: format!("custom correlation sequence at n = {n}"),
            });
        }
    } else if cfg!(debug_assertions) && n <= 128 {
        debug_assert!(
            matrix.is_positive_definite(),
            "closed-form model {} produced a non-PD matrix",
            model.label()
        );
    }
    Ok(matrix)
}

/// One possible predecessor of the requested source: its id, the conditional
/// correlation model of the source given that predecessor, and optionally a
/// marginal model for the predecessor itself (identity covariance when
/// absent; the marginal only matters for Monte Carlo sampling).
#[derive(Debug, Clone)]
pub struct Predecessor {
    pub id: usize,
    pub conditional: CorrelationModel,
    pub marginal: Option<CorrelationModel>,
}

/// One requested source together with the set of sources that may have been
/// requested just before it.
#[derive(Debug, Clone)]
pub struct SourceNetwork {
    source_id: usize,
    n: usize,
    predecessors: Vec<Predecessor>,
}

impl SourceNetwork {
    pub fn new(source_id: usize, n: usize, predecessors: Vec<Predecessor>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter(
                "block length n must be at least 1".into(),
            ));
        }
        if predecessors.is_empty() {
            return Err(Error::InvalidParameter(
                "predecessor set must be non-empty".into(),
            ));
        }
        let mut seen = Vec::with_capacity(predecessors.len());
        for pred in &predecessors {
            if seen.contains(&pred.id) {
                return Err(Error::InvalidParameter(format!(
                    "duplicate predecessor id {}",
                    pred.id
                )));
            }
            seen.push(pred.id);
            pred.conditional.validate()?;
            if let Some(marginal) = &pred.marginal {
                marginal.validate()?;
            }
        }
        Ok(Self {
            source_id,
            n,
            predecessors,
        })
    }

    pub fn source_id(&self) -> usize {
        self.source_id
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn predecessors(&self) -> &[Predecessor] {
        &self.predecessors
    }

    pub fn predecessor_count(&self) -> usize {
        self.predecessors.len()
    }

    pub fn predecessor(&self, id: usize) -> Result<&Predecessor> {
        self.predecessors
            .iter()
            .find(|p| p.id == id)
            .ok_or(Error::UnknownPredecessor(id))
    }

    /// The same network with every conditional model replaced by the
    /// memoryless model of equal per-symbol variance.
    pub fn memoryless_baseline(&self) -> SourceNetwork {
        SourceNetwork {
            source_id: self.source_id,
            n: self.n,
            predecessors: self
                .predecessors
                .iter()
                .map(|p| Predecessor {
                    id: p.id,
                    conditional: p.conditional.memoryless_equivalent(),
                    marginal: p.marginal.clone(),
                })
                .collect(),
        }
    }
}

/// The two built-in three-predecessor example networks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PresetFamily {
    /// Nearest-neighbor correlation with variances 1, 2 and 4.
    NearestNeighbor,
    /// First-order Markov correlation with unit variance and
    /// gamma = 1/2, 1/4, 1/5.
    FirstOrderMarkov,
}

impl PresetFamily {
    pub fn name(self) -> &'static str {
        match self {
            Self::NearestNeighbor => "nearest_neighbor",
            Self::FirstOrderMarkov => "first_order_markov",
        }
    }
}

/// Builds one of the preset networks at block length `n`. The matched
/// memoryless baseline is available through
/// [`SourceNetwork::memoryless_baseline`].
pub fn preset_network(family: PresetFamily, n: usize) -> Result<SourceNetwork> {
    let models = match family {
        PresetFamily::NearestNeighbor => vec![
            CorrelationModel::NearestNeighbor { sigma2: 1.0 },
            CorrelationModel::NearestNeighbor { sigma2: 2.0 },
            CorrelationModel::NearestNeighbor { sigma2: 4.0 },
        ],
        PresetFamily::FirstOrderMarkov => vec![
            CorrelationModel::FirstOrderMarkov {
                sigma2: 1.0,
                gamma: 0.5,
            },
            CorrelationModel::FirstOrderMarkov {
                sigma2: 1.0,
                gamma: 0.25,
            },
            CorrelationModel::FirstOrderMarkov {
                sigma2: 1.0,
                gamma: 0.2,
            },
        ],
    };
    let predecessors = models
        .into_iter()
        .enumerate()
        .map(|(i, conditional)| Predecessor {
            id: i + 1,
            conditional,
            marginal: None,
        })
        .collect();
    SourceNetwork::new(0, n, predecessors)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn memoryless_is_scaled_identity() {
        let m = build_covariance(&CorrelationModel::Memoryless { sigma2: 1.0 }, 3).unwrap();
        for a in 0..3 {
            for b in 0..3 {
                let expected = if a == b { 1.0 } else { 0.0 };
                assert_eq!(m.entry(a, b), expected);
            }
        }
        assert_eq!(m.bandwidth(), 0);
    }

    #[test]
    fn nearest_neighbor_rows() {
        let m = build_covariance(&CorrelationModel::NearestNeighbor { sigma2: 1.0 }, 3).unwrap();
        let expected = [[1.0, 0.5, 0.0], [0.5, 1.0, 0.5], [0.0, 0.5, 1.0]];
        for a in 0..3 {
            for b in 0..3 {
                assert_eq!(m.dense()[(a, b)], expected[a][b]);
            }
        }
        assert_eq!(m.bandwidth(), 1);
    }

    #[test]
    fn markov_rows() {
        let model = CorrelationModel::FirstOrderMarkov {
            sigma2: 1.0,
            gamma: 0.5,
        };
        let m = build_covariance(&model, 3).unwrap();
        let expected = [[1.0, 0.5, 0.25], [0.5, 1.0, 0.5], [0.25, 0.5, 1.0]];
        for a in 0..3 {
            for b in 0..3 {
                assert_eq!(m.dense()[(a, b)], expected[a][b]);
            }
        }
    }

    #[test]
    fn matrices_are_symmetric_toeplitz_with_expected_trace() {
        let models = [
            CorrelationModel::Memoryless { sigma2: 2.5 },
            CorrelationModel::NearestNeighbor { sigma2: 4.0 },
            CorrelationModel::FirstOrderMarkov {
                sigma2: 1.0,
                gamma: -0.7,
            },
            CorrelationModel::Custom {
                rho: vec![2.0, 0.5, 0.1],
            },
        ];
        for model in &models {
            for n in [1usize, 2, 5, 17] {
                let m = build_covariance(model, n).unwrap();
                for a in 0..n {
                    for b in 0..n {
                        assert_eq!(m.dense()[(a, b)], m.dense()[(b, a)]);
                        if a + 1 < n && b + 1 < n {
                            assert_eq!(m.dense()[(a, b)], m.dense()[(a + 1, b + 1)]);
                        }
                    }
                }
                assert_abs_diff_eq!(
                    m.dense().trace(),
                    n as f64 * model.variance(),
                    epsilon = 1e-12 * n as f64
                );
            }
        }
    }

    #[test]
    fn negative_gamma_matches_positive_magnitude() {
        let pos = CorrelationModel::FirstOrderMarkov {
            sigma2: 1.0,
            gamma: 0.5,
        };
        let neg = CorrelationModel::FirstOrderMarkov {
            sigma2: 1.0,
            gamma: -0.5,
        };
        assert_eq!(pos.rho_sequence(6), neg.rho_sequence(6));
    }

    #[test]
    fn invalid_parameters_are_rejected() {
        assert!(build_covariance(&CorrelationModel::Memoryless { sigma2: 0.0 }, 4).is_err());
        assert!(build_covariance(&CorrelationModel::Memoryless { sigma2: -1.0 }, 4).is_err());
        assert!(build_covariance(
            &CorrelationModel::FirstOrderMarkov {
                sigma2: 1.0,
                gamma: 1.0
            },
            4
        )
        .is_err());
        assert!(build_covariance(&CorrelationModel::Custom { rho: vec![] }, 4).is_err());
        assert!(build_covariance(&CorrelationModel::Memoryless { sigma2: 1.0 }, 0).is_err());
    }

    #[test]
    fn non_pd_custom_sequence_is_rejected() {
        // rho = (1, 0.9, 0) has spectral density 1 + 1.8 cos(w) < 0 near pi.
        let model = CorrelationModel::Custom {
            rho: vec![1.0, 0.9],
        };
        let err = build_covariance(&model, 16).unwrap_err();
        assert!(matches!(err, Error::NotPositiveDefinite { .. }));
    }

    #[test]
    fn custom_sequence_is_zero_extended() {
        let model = CorrelationModel::Custom {
            rho: vec![1.0, 0.3],
        };
        let m = build_covariance(&model, 5).unwrap();
        assert_eq!(m.entry(0, 4), 0.0);
        assert_eq!(m.entry(0, 1), 0.3);
    }

    #[test]
    fn preset_networks_use_expected_parameters() {
        let nn = preset_network(PresetFamily::NearestNeighbor, 1000).unwrap();
        let sigmas: Vec<f64> = nn
            .predecessors()
            .iter()
            .map(|p| p.conditional.variance())
            .collect();
        assert_eq!(sigmas, vec![1.0, 2.0, 4.0]);

        let markov = preset_network(PresetFamily::FirstOrderMarkov, 1000).unwrap();
        let gammas: Vec<f64> = markov
            .predecessors()
            .iter()
            .map(|p| match p.conditional {
                CorrelationModel::FirstOrderMarkov { gamma, .. } => gamma,
                _ => panic!("expected Markov model"),
            })
            .collect();
        assert_eq!(gammas, vec![0.5, 0.25, 0.2]);
        assert_eq!(markov.predecessor_count(), 3);
    }

    #[test]
    fn preset_nearest_neighbor_at_n2() {
        let net = preset_network(PresetFamily::NearestNeighbor, 2).unwrap();
        for pred in net.predecessors() {
            let s2 = pred.conditional.variance();
            let m = build_covariance(&pred.conditional, 2).unwrap();
            assert_eq!(m.dense()[(0, 0)], s2);
            assert_eq!(m.dense()[(0, 1)], s2 / 2.0);
            assert_eq!(m.dense()[(1, 0)], s2 / 2.0);
            assert_eq!(m.dense()[(1, 1)], s2);
        }
    }

    #[test]
    fn memoryless_baseline_preserves_variance() {
        let net = preset_network(PresetFamily::NearestNeighbor, 8).unwrap();
        let base = net.memoryless_baseline();
        for (p, b) in net.predecessors().iter().zip(base.predecessors()) {
            assert_eq!(b.id, p.id);
            assert_eq!(
                b.conditional,
                CorrelationModel::Memoryless {
                    sigma2: p.conditional.variance()
                }
            );
        }
    }

    #[test]
    fn duplicate_predecessor_ids_are_rejected() {
        let pred = |id| Predecessor {
            id,
            conditional: CorrelationModel::Memoryless { sigma2: 1.0 },
            marginal: None,
        };
        assert!(SourceNetwork::new(0, 4, vec![pred(1), pred(1)]).is_err());
        assert!(SourceNetwork::new(0, 4, vec![]).is_err());
    }
}
