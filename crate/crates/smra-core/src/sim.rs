//! Monte Carlo oracle for the test-channel construction: the linear MMSE
//! estimator built from the conditional covariance, its analytic distortion
//! and rate, and a seeded simulator that checks the analytic values against
//! empirical averages.

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::covariance::{build_covariance, CorrelationModel, ToeplitzMatrix};
use crate::error::{Error, Result};

/// Which estimator combination matrix multiplies the side information.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BForm {
    /// `B = I - A`, the conditional-mean estimator; its error covariance is
    /// exactly `(delta^-1 I + Sigma^-1)^-1`.
    ConditionalMean,
    /// `B = (I + delta Sigma)^-1 Sigma Sigma_j^-1`, kept as a diagnostic so
    /// that its distortion penalty can be measured.
    Printed,
}

/// Test channel for one predecessor: the description is the source plus
/// white noise of variance `delta`, and the decoder combines it with the
/// side information through the gain matrices `A` and `B`.
#[derive(Debug, Clone)]
pub struct TestChannel {
    n: usize,
    delta: f64,
    cond: ToeplitzMatrix,
    marginal: DMatrix<f64>,
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    b_form: BForm,
}

/// Builds the estimator for a conditional covariance and noise variance:
/// `A = Sigma (delta I + Sigma)^-1` and `B = I - A`. The marginal covariance
/// of the side information defaults to the identity.
pub fn build_estimator(cond: &ToeplitzMatrix, delta: f64) -> Result<TestChannel> {
    if !(delta.is_finite() && delta > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "delta must be positive and finite, got {delta}"
        )));
    }
    let n = cond.n();
    let mut shifted = cond.dense().clone();
    for i in 0..n {
        shifted[(i, i)] += delta;
    }
    let chol = Cholesky::new(shifted).ok_or(Error::SingularSystem)?;
    // (delta I + Sigma)^-1 Sigma is A transposed; both factors share the
    // eigenbasis, so A is symmetric up to rounding.
    let a = chol.solve(cond.dense()).transpose();
    let b = DMatrix::identity(n, n) - &a;
    Ok(TestChannel {
        n,
        delta,
        cond: cond.clone(),
        marginal: DMatrix::identity(n, n),
        a,
        b,
        b_form: BForm::ConditionalMean,
    })
}

impl TestChannel {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn conditional(&self) -> &ToeplitzMatrix {
        &self.cond
    }

    pub fn marginal(&self) -> &DMatrix<f64> {
        &self.marginal
    }

    pub fn matrix_a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn matrix_b(&self) -> &DMatrix<f64> {
        &self.b
    }

    pub fn b_form(&self) -> BForm {
        self.b_form
    }

    /// Replaces the side-information marginal covariance (identity by
    /// default). Only the sampler depends on it; with the conditional-mean
    /// estimator, the distortion does not.
    pub fn with_marginal_matrix(mut self, marginal: DMatrix<f64>) -> Result<Self> {
        if marginal.nrows() != self.n || marginal.ncols() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                actual: marginal.nrows(),
            });
        }
        self.marginal = marginal;
        if self.b_form == BForm::Printed {
            self = self.with_printed_b()?;
        }
        Ok(self)
    }

    /// Builds the marginal from a correlation model at this block length.
    pub fn with_marginal_model(self, model: &CorrelationModel) -> Result<Self> {
        let n = self.n;
        self.with_marginal_matrix(build_covariance(model, n)?.dense().clone())
    }

    /// Diagnostic variant: replaces `B` by
    /// `(I + delta Sigma)^-1 Sigma Sigma_j^-1`.
    pub fn with_printed_b(mut self) -> Result<Self> {
        let mut shifted = self.cond.dense() * self.delta;
        for i in 0..self.n {
            shifted[(i, i)] += 1.0;
        }
        let chol = Cholesky::new(shifted).ok_or(Error::SingularSystem)?;
        let marginal_inv = Cholesky::new(self.marginal.clone())
            .ok_or(Error::NotPositiveDefinite {
                context: "marginal covariance".into(),
            })?
            .inverse();
        self.b = chol.solve(self.cond.dense()) * marginal_inv;
        self.b_form = BForm::Printed;
        Ok(self)
    }
}

/// Analytic per-symbol distortion `(1/n) trace((delta^-1 I + Sigma^-1)^-1)`,
/// equal to the eigenvalue average `(1/n) sum_i lambda_i delta / (lambda_i + delta)`.
pub fn analytic_distortion(chan: &TestChannel) -> f64 {
    let n = chan.n;
    let cond_inv = Cholesky::new(chan.cond.dense().clone())
        .expect("conditional covariance is positive definite")
        .inverse();
    let mut m = cond_inv;
    let noise_precision = 1.0 / chan.delta;
    for i in 0..n {
        m[(i, i)] += noise_precision;
    }
    let error_cov = Cholesky::new(m)
        .expect("precision sum is positive definite")
        .inverse();
    error_cov.trace() / n as f64
}

/// Analytic per-symbol rate
/// `(1/(2n)) log2(det(Sigma + delta I) / det(delta I))`, equal to the
/// eigenvalue sum `(1/n) sum_i 0.5 log2((lambda_i + delta) / delta)`.
/// Evaluated through the Cholesky log-determinant to avoid overflow.
pub fn analytic_rate(chan: &TestChannel) -> f64 {
    let n = chan.n;
    let mut shifted = chan.cond.dense().clone();
    for i in 0..n {
        shifted[(i, i)] += chan.delta;
    }
    let chol = Cholesky::new(shifted).expect("shifted covariance is positive definite");
    let log2_det_shifted: f64 = (0..n).map(|i| 2.0 * chol.l_dirty()[(i, i)].log2()).sum();
    let log2_det_noise = n as f64 * chan.delta.log2();
    (log2_det_shifted - log2_det_noise) / (2.0 * n as f64)
}

/// Outcome of one Monte Carlo run.
#[derive(Debug, Clone, Serialize)]
pub struct SimResult {
    pub samples: u64,
    pub empirical_distortion: f64,
    pub standard_error: f64,
    pub analytic_distortion: f64,
    pub analytic_rate: f64,
    pub seed: u64,
}

impl SimResult {
    /// Normalized deviation of the empirical distortion from the analytic
    /// value.
    pub fn z_score(&self) -> f64 {
        (self.empirical_distortion - self.analytic_distortion) / self.standard_error
    }

    pub fn within(&self, sigmas: f64) -> bool {
        self.z_score().abs() <= sigmas
    }
}

#[derive(Debug, Clone, Copy)]
struct ShardStats {
    count: u64,
    mean: f64,
    m2: f64,
}

impl ShardStats {
    fn merge(self, other: ShardStats) -> ShardStats {
        if self.count == 0 {
            return other;
        }
        if other.count == 0 {
            return self;
        }
        let ca = self.count as f64;
        let cb = other.count as f64;
        let total = ca + cb;
        let shift = other.mean - self.mean;
        ShardStats {
            count: self.count + other.count,
            mean: self.mean + shift * cb / total,
            m2: self.m2 + other.m2 + shift * shift * ca * cb / total,
        }
    }
}

/// Single-shard Monte Carlo run; bit-reproducible for a given seed.
pub fn simulate(chan: &TestChannel, samples: u64, seed: u64) -> Result<SimResult> {
    simulate_sharded(chan, samples, seed, 1)
}

/// Monte Carlo run split over `shards` independent substreams (stream `s` of
/// the seeded generator). Shards are merged in index order, so the result is
/// deterministic for fixed (seed, shards); one shard reproduces
/// [`simulate`] exactly.
pub fn simulate_sharded(
    chan: &TestChannel,
    samples: u64,
    seed: u64,
    shards: usize,
) -> Result<SimResult> {
    if samples < 100 {
        return Err(Error::InvalidSampleCount(samples));
    }
    if shards == 0 || shards as u64 > samples {
        return Err(Error::InvalidParameter(format!(
            "shard count {shards} must be in 1..={samples}"
        )));
    }
    let factor_cond = Cholesky::new(chan.cond.dense().clone())
        .ok_or(Error::SingularSystem)?
        .unpack();
    let factor_marg = Cholesky::new(chan.marginal.clone())
        .ok_or(Error::NotPositiveDefinite {
            context: "marginal covariance".into(),
        })?
        .unpack();

    let base = samples / shards as u64;
    let remainder = samples % shards as u64;
    let counts: Vec<u64> = (0..shards as u64)
        .map(|s| base + u64::from(s < remainder))
        .collect();

    let stats = counts
        .par_iter()
        .enumerate()
        .map(|(idx, &count)| run_shard(chan, &factor_cond, &factor_marg, count, seed, idx as u64))
        .collect::<Vec<_>>()
        .into_iter()
        .fold(
            ShardStats {
                count: 0,
                mean: 0.0,
                m2: 0.0,
            },
            ShardStats::merge,
        );

    let count = stats.count as f64;
    let variance = stats.m2 / (count - 1.0);
    Ok(SimResult {
        samples: stats.count,
        empirical_distortion: stats.mean,
        standard_error: (variance / count).sqrt(),
        analytic_distortion: analytic_distortion(chan),
        analytic_rate: analytic_rate(chan),
        seed,
    })
}

fn run_shard(
    chan: &TestChannel,
    factor_cond: &DMatrix<f64>,
    factor_marg: &DMatrix<f64>,
    count: u64,
    seed: u64,
    stream: u64,
) -> ShardStats {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let n = chan.n;
    let noise_sd = chan.delta.sqrt();
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for s in 0..count {
        let side_info = factor_marg * standard_normal_vector(n, &mut rng);
        let innovation = factor_cond * standard_normal_vector(n, &mut rng);
        let source = &side_info + innovation;
        let description = &source + noise_sd * standard_normal_vector(n, &mut rng);
        let estimate = &chan.a * description + &chan.b * &side_info;
        let err = (source - estimate).norm_squared() / n as f64;
        let k = (s + 1) as f64;
        let delta1 = err - mean;
        mean += delta1 / k;
        m2 += delta1 * (err - mean);
    }
    ShardStats { count, mean, m2 }
}

fn standard_normal_vector(n: usize, rng: &mut impl Rng) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.sample(StandardNormal))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::eigenvalues;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn scalar_channel(delta: f64) -> TestChannel {
        let m = build_covariance(&CorrelationModel::Memoryless { sigma2: 1.0 }, 1).unwrap();
        build_estimator(&m, delta).unwrap()
    }

    fn two_by_two_channel() -> TestChannel {
        let m = build_covariance(
            &CorrelationModel::Custom {
                rho: vec![1.0, 0.5],
            },
            2,
        )
        .unwrap();
        build_estimator(&m, 1.0).unwrap()
    }

    #[test]
    fn scalar_estimator() {
        let chan = scalar_channel(1.0);
        assert_abs_diff_eq!(chan.matrix_a()[(0, 0)], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(chan.matrix_b()[(0, 0)], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(analytic_distortion(&chan), 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(analytic_rate(&chan), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn scalar_estimator_large_noise_limit() {
        let chan = scalar_channel(1e9);
        assert!(chan.matrix_a()[(0, 0)] < 2e-9);
        assert_abs_diff_eq!(chan.matrix_b()[(0, 0)], 1.0, epsilon = 1e-8);
        assert!(analytic_rate(&chan) < 1e-9);
    }

    #[test]
    fn two_by_two_estimator_matches_hand_values() {
        let chan = two_by_two_channel();
        // A = Sigma (I + Sigma)^-1 = [[7/15, 2/15], [2/15, 7/15]].
        assert_relative_eq!(chan.matrix_a()[(0, 0)], 7.0 / 15.0, max_relative = 1e-12);
        assert_relative_eq!(chan.matrix_a()[(0, 1)], 2.0 / 15.0, max_relative = 1e-12);
        assert_relative_eq!(
            analytic_distortion(&chan),
            7.0 / 15.0,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            analytic_rate(&chan),
            0.47672264890212956,
            max_relative = 1e-12
        );
    }

    #[test]
    fn a_plus_b_is_identity_and_a_contractive() {
        let m = build_covariance(&CorrelationModel::NearestNeighbor { sigma2: 2.0 }, 6).unwrap();
        let chan = build_estimator(&m, 0.7).unwrap();
        let sum = chan.matrix_a() + chan.matrix_b();
        for i in 0..6 {
            for j in 0..6 {
                let expected = if i == j { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(sum[(i, j)], expected, epsilon = 1e-13);
            }
        }
        let evs = chan.matrix_a().clone().symmetric_eigenvalues();
        for ev in evs.iter() {
            assert!(*ev > 0.0 && *ev < 1.0, "eigenvalue of A out of (0,1): {ev}");
        }
    }

    #[test]
    fn analytic_distortion_matches_eigenvalue_form() {
        for model in [
            CorrelationModel::NearestNeighbor { sigma2: 1.0 },
            CorrelationModel::FirstOrderMarkov {
                sigma2: 2.0,
                gamma: 0.5,
            },
        ] {
            for n in [1usize, 2, 8, 64] {
                for delta in [0.1, 1.0, 10.0] {
                    let m = build_covariance(&model, n).unwrap();
                    let chan = build_estimator(&m, delta).unwrap();
                    let s = eigenvalues(&m).unwrap();
                    let eig_form: f64 = s
                        .eigenvalues()
                        .iter()
                        .map(|&l| l * delta / (l + delta))
                        .sum::<f64>()
                        / n as f64;
                    assert_relative_eq!(
                        analytic_distortion(&chan),
                        eig_form,
                        max_relative = 1e-9
                    );
                }
            }
        }
    }

    #[test]
    fn analytic_rate_matches_eigenvalue_form() {
        let m = build_covariance(
            &CorrelationModel::FirstOrderMarkov {
                sigma2: 1.0,
                gamma: 0.25,
            },
            16,
        )
        .unwrap();
        let chan = build_estimator(&m, 0.4).unwrap();
        let s = eigenvalues(&m).unwrap();
        let eig_form: f64 = s
            .eigenvalues()
            .iter()
            .map(|&l| 0.5 * ((l + 0.4) / 0.4).log2())
            .sum::<f64>()
            / 16.0;
        assert_relative_eq!(analytic_rate(&chan), eig_form, max_relative = 1e-12);
    }

    #[test]
    fn noiseless_limit_distortion_vanishes() {
        let chan = two_by_two_channel();
        let m = build_covariance(
            &CorrelationModel::Custom {
                rho: vec![1.0, 0.5],
            },
            2,
        )
        .unwrap();
        let tiny = build_estimator(&m, 1e-9).unwrap();
        assert!(analytic_distortion(&tiny) < 1e-6);
        assert!(analytic_distortion(&chan) > 0.0);
    }

    #[test]
    fn simulate_scalar_agrees_with_analytic() {
        let chan = scalar_channel(1.0);
        let r = simulate(&chan, 100_000, 42).unwrap();
        assert!(r.within(3.0), "z = {}", r.z_score());
        assert_abs_diff_eq!(r.analytic_distortion, 0.5, epsilon = 1e-12);
    }

    #[test]
    fn simulate_two_by_two_agrees_with_analytic() {
        let chan = two_by_two_channel();
        let r = simulate(&chan, 100_000, 7).unwrap();
        assert!(r.within(3.0), "z = {}", r.z_score());
        assert_relative_eq!(r.analytic_distortion, 7.0 / 15.0, max_relative = 1e-12);
    }

    #[test]
    fn simulate_near_noiseless_is_near_zero() {
        let m = build_covariance(&CorrelationModel::NearestNeighbor { sigma2: 1.0 }, 4).unwrap();
        let chan = build_estimator(&m, 1e-9).unwrap();
        let r = simulate(&chan, 1000, 3).unwrap();
        assert!(r.empirical_distortion <= 1e-6);
    }

    #[test]
    fn simulate_is_deterministic_per_seed() {
        let chan = two_by_two_channel();
        let a = simulate(&chan, 500, 11).unwrap();
        let b = simulate(&chan, 500, 11).unwrap();
        assert_eq!(a.empirical_distortion.to_bits(), b.empirical_distortion.to_bits());
        assert_eq!(a.standard_error.to_bits(), b.standard_error.to_bits());
        let c = simulate(&chan, 500, 12).unwrap();
        assert_ne!(a.empirical_distortion.to_bits(), c.empirical_distortion.to_bits());
    }

    #[test]
    fn sharded_run_matches_single_shard_statistically() {
        let chan = two_by_two_channel();
        let single = simulate_sharded(&chan, 40_000, 5, 1).unwrap();
        let quad = simulate_sharded(&chan, 40_000, 5, 4).unwrap();
        assert_eq!(single.samples, quad.samples);
        assert!((single.empirical_distortion - quad.empirical_distortion).abs()
            < 5.0 * single.standard_error);
        // One shard is exactly the plain path.
        let plain = simulate(&chan, 40_000, 5).unwrap();
        assert_eq!(
            plain.empirical_distortion.to_bits(),
            single.empirical_distortion.to_bits()
        );
        // Sharded runs are reproducible too.
        let quad2 = simulate_sharded(&chan, 40_000, 5, 4).unwrap();
        assert_eq!(
            quad.empirical_distortion.to_bits(),
            quad2.empirical_distortion.to_bits()
        );
    }

    #[test]
    fn sample_count_validation() {
        let chan = scalar_channel(1.0);
        assert!(matches!(
            simulate(&chan, 99, 0).unwrap_err(),
            Error::InvalidSampleCount(99)
        ));
        assert!(simulate_sharded(&chan, 100, 0, 0).is_err());
        assert!(simulate_sharded(&chan, 100, 0, 101).is_err());
    }

    #[test]
    fn distortion_does_not_depend_on_marginal() {
        let m = build_covariance(&CorrelationModel::NearestNeighbor { sigma2: 1.0 }, 8).unwrap();
        let identity = build_estimator(&m, 0.8).unwrap();
        let correlated = build_estimator(&m, 0.8)
            .unwrap()
            .with_marginal_model(&CorrelationModel::FirstOrderMarkov {
                sigma2: 3.0,
                gamma: 0.6,
            })
            .unwrap();
        let a = simulate(&identity, 2000, 21).unwrap();
        let b = simulate(&correlated, 2000, 21).unwrap();
        // With B = I - A the error is (I - A) W - A Psi: the side information
        // cancels algebraically, so only rounding differs.
        assert_abs_diff_eq!(
            a.empirical_distortion,
            b.empirical_distortion,
            epsilon = 1e-9
        );
    }

    #[test]
    fn printed_b_form_pays_a_distortion_penalty() {
        let m = build_covariance(
            &CorrelationModel::Custom {
                rho: vec![1.0, 0.5],
            },
            2,
        )
        .unwrap();
        let printed = build_estimator(&m, 1.0).unwrap().with_printed_b().unwrap();
        assert_eq!(printed.b_form(), BForm::Printed);
        // With identity marginal and delta = 1, the printed B collapses to A.
        for i in 0..2 {
            for j in 0..2 {
                assert_relative_eq!(
                    printed.matrix_b()[(i, j)],
                    printed.matrix_a()[(i, j)],
                    max_relative = 1e-12
                );
            }
        }
        let base = simulate(&two_by_two_channel(), 20_000, 9).unwrap();
        let worse = simulate(&printed, 20_000, 9).unwrap();
        assert!(
            worse.empirical_distortion > base.empirical_distortion + 3.0 * base.standard_error,
            "printed form should be measurably worse: {} vs {}",
            worse.empirical_distortion,
            base.empirical_distortion
        );
    }

    #[test]
    fn estimator_is_a_local_minimum() {
        let m = build_covariance(
            &CorrelationModel::Custom {
                rho: vec![1.0, 0.5],
            },
            2,
        )
        .unwrap();
        let chan = build_estimator(&m, 1.0).unwrap();
        let base = simulate(&chan, 20_000, 13).unwrap().empirical_distortion;
        let eps = 0.05;
        for row in 0..2 {
            for col in 0..2 {
                for sign in [1.0, -1.0] {
                    let mut perturbed_a = chan.clone();
                    perturbed_a.a[(row, col)] += sign * eps;
                    let da = simulate(&perturbed_a, 20_000, 13)
                        .unwrap()
                        .empirical_distortion;
                    assert!(
                        da >= base,
                        "perturbing A[{row},{col}] by {} lowered distortion: {da} < {base}",
                        sign * eps
                    );

                    let mut perturbed_b = chan.clone();
                    perturbed_b.b[(row, col)] += sign * eps;
                    let db = simulate(&perturbed_b, 20_000, 13)
                        .unwrap()
                        .empirical_distortion;
                    assert!(
                        db >= base,
                        "perturbing B[{row},{col}] by {} lowered distortion: {db} < {base}",
                        sign * eps
                    );
                }
            }
        }
    }

    #[test]
    fn marginal_dimension_is_checked() {
        let chan = two_by_two_channel();
        assert!(matches!(
            chan.with_marginal_matrix(DMatrix::identity(3, 3)).unwrap_err(),
            Error::DimensionMismatch { .. }
        ));
    }
}
