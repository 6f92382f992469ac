//! Synthetic populations with known item probabilities.
//!
//! A run draws `n` observations, then `floor(t * n)` more from the same RNG
//! stream; the number of distinct items in the second phase that never
//! appeared in the first is the ground truth the estimator targets.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand_chacha::ChaCha8Rng;
use rand_distr::Poisson;

use crate::error::{Error, Result};
use crate::estimator::{self, EstimatorConfig};
use crate::prevalence::{ClusteredCounts, ItemId, PrevalenceHistogram};
use crate::stats::{mean, sample_std};
use crate::validation::{repetition_rng, ObservationSequence};

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
#[cfg_attr(feature = "serde", serde(tag = "family", rename_all = "lowercase"))]
pub enum Family {
    Uniform,
    /// Weights `i^-exponent` over ranks `1..=N`.
    Zipf { exponent: f64 },
    Explicit { probs: Vec<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum SamplingModel {
    /// `n` sequential categorical draws.
    Multinomial,
    /// Item `i` is seen `Poisson(n * p_i)` times, independently.
    Poissonized,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct SimSpec {
    pub family: Family,
    pub support_size: usize,
    pub n_draws: u64,
    pub t: f64,
    pub seed: u64,
    pub sampling_model: SamplingModel,
}

impl SimSpec {
    pub fn uniform(support_size: usize, n_draws: u64, t: f64, seed: u64) -> Self {
        SimSpec {
            family: Family::Uniform,
            support_size,
            n_draws,
            t,
            seed,
            sampling_model: SamplingModel::Multinomial,
        }
    }

    pub fn zipf(support_size: usize, exponent: f64, n_draws: u64, t: f64, seed: u64) -> Self {
        SimSpec { family: Family::Zipf { exponent }, ..Self::uniform(support_size, n_draws, t, seed) }
    }

    pub fn explicit(probs: Vec<f64>, n_draws: u64, t: f64, seed: u64) -> Self {
        let support_size = probs.len();
        SimSpec { family: Family::Explicit { probs }, ..Self::uniform(support_size, n_draws, t, seed) }
    }

    pub fn poissonized(mut self) -> Self {
        self.sampling_model = SamplingModel::Poissonized;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.support_size == 0 {
            return Err(Error::InvalidConfig("support size must be >= 1".into()));
        }
        if self.support_size > u32::MAX as usize {
            return Err(Error::InvalidConfig("support size exceeds u32 range".into()));
        }
        if self.n_draws == 0 {
            return Err(Error::InvalidConfig("n_draws must be >= 1".into()));
        }
        if !(self.t.is_finite() && self.t > 0.0) {
            return Err(Error::InvalidConfig(format!("t must be finite and > 0, got {}", self.t)));
        }
        match &self.family {
            Family::Uniform => {}
            Family::Zipf { exponent } => {
                if !(exponent.is_finite() && *exponent > 0.0) {
                    return Err(Error::InvalidConfig(format!(
                        "zipf exponent must be finite and > 0, got {exponent}"
                    )));
                }
            }
            Family::Explicit { probs } => {
                if probs.len() != self.support_size {
                    return Err(Error::InvalidConfig(format!(
                        "support size {} does not match {} explicit probabilities",
                        self.support_size,
                        probs.len()
                    )));
                }
                if probs.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
                    return Err(Error::InvalidConfig(
                        "explicit probabilities must be finite and non-negative".into(),
                    ));
                }
                let sum: f64 = probs.iter().sum();
                if (sum - 1.0).abs() > 1e-12 {
                    return Err(Error::InvalidConfig(format!(
                        "explicit probabilities sum to {sum}, not 1"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Normalized item probabilities.
    pub fn probabilities(&self) -> Result<Vec<f64>> {
        self.validate()?;
        let n = self.support_size;
        Ok(match &self.family {
            Family::Uniform => vec![1.0 / n as f64; n],
            Family::Zipf { exponent } => {
                let w: Vec<f64> = (1..=n).map(|i| libm::pow(i as f64, -exponent)).collect();
                let z: f64 = w.iter().sum();
                w.into_iter().map(|x| x / z).collect()
            }
            Family::Explicit { probs } => probs.clone(),
        })
    }

    /// `floor(t * n)`.
    pub fn future_draws(&self) -> u64 {
        libm::floor(self.t * self.n_draws as f64) as u64
    }
}

/// Synthetic item name for population index `i`.
pub fn item_name(i: usize) -> ItemId {
    ItemId::new(format!("i{}", i + 1)).expect("non-empty")
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimRun {
    pub spec: SimSpec,
    /// Per-item counts over the observation phase.
    pub observed_counts: Vec<u64>,
    /// Draw order (item indices); absent under the Poissonized model.
    pub observed_order: Option<Vec<u32>>,
    /// Distinct items in the future phase that were absent from the first.
    pub future_new_distinct: u64,
}

impl SimRun {
    pub fn histogram(&self) -> PrevalenceHistogram {
        PrevalenceHistogram::from_count_values(self.observed_counts.iter().copied())
    }

    pub fn observed_distinct(&self) -> u64 {
        self.observed_counts.iter().filter(|&&c| c > 0).count() as u64
    }

    pub fn clustered_counts(&self) -> ClusteredCounts {
        let pairs = self
            .observed_counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(i, &c)| (item_name(i), c));
        ClusteredCounts::from_pairs(pairs).expect("distinct names and positive counts")
    }

    /// The observation phase as a sequence (multinomial runs only).
    pub fn observed_sequence(&self) -> Option<ObservationSequence> {
        let order = self.observed_order.as_ref()?;
        Some(ObservationSequence::new(order.iter().map(|&i| item_name(i as usize)).collect()))
    }
}

fn multinomial(spec: &SimSpec, probs: &[f64], rng: &mut ChaCha8Rng) -> Result<SimRun> {
    let dist = WeightedIndex::new(probs)
        .map_err(|e| Error::InvalidConfig(format!("unusable probabilities: {e}")))?;
    let mut counts = vec![0u64; probs.len()];
    let mut order = Vec::with_capacity(spec.n_draws as usize);
    for _ in 0..spec.n_draws {
        let i = dist.sample(rng);
        counts[i] += 1;
        order.push(i as u32);
    }
    let mut fresh = vec![false; probs.len()];
    let mut future_new_distinct = 0;
    for _ in 0..spec.future_draws() {
        let i = dist.sample(rng);
        if counts[i] == 0 && !fresh[i] {
            fresh[i] = true;
            future_new_distinct += 1;
        }
    }
    Ok(SimRun {
        spec: spec.clone(),
        observed_counts: counts,
        observed_order: Some(order),
        future_new_distinct,
    })
}

fn poisson_count(rate: f64, rng: &mut ChaCha8Rng) -> Result<u64> {
    if rate == 0.0 {
        return Ok(0);
    }
    let d = Poisson::new(rate)
        .map_err(|e| Error::NumericRange(format!("poisson rate {rate}: {e}")))?;
    Ok(d.sample(rng) as u64)
}

fn poissonized(spec: &SimSpec, probs: &[f64], rng: &mut ChaCha8Rng) -> Result<SimRun> {
    let n = spec.n_draws as f64;
    let future = spec.future_draws() as f64;
    let mut counts = Vec::with_capacity(probs.len());
    let mut future_new_distinct = 0;
    for &p in probs {
        let seen = poisson_count(n * p, rng)?;
        let later = poisson_count(future * p, rng)?;
        if seen == 0 && later > 0 {
            future_new_distinct += 1;
        }
        counts.push(seen);
    }
    Ok(SimRun { spec: spec.clone(), observed_counts: counts, observed_order: None, future_new_distinct })
}

/// Runs trial `trial` of `spec`, drawing from the stream `(spec.seed, trial)`.
pub fn run_trial(spec: &SimSpec, trial: u64) -> Result<SimRun> {
    let probs = spec.probabilities()?;
    let mut rng = repetition_rng(spec.seed, trial);
    match spec.sampling_model {
        SamplingModel::Multinomial => multinomial(spec, &probs, &mut rng),
        SamplingModel::Poissonized => poissonized(spec, &probs, &mut rng),
    }
}

/// A single run, deterministic in `spec.seed`.
pub fn run_simulation(spec: &SimSpec) -> Result<SimRun> {
    run_trial(spec, 0)
}

/// Expected number of items first seen among `floor(t * n)` further uniform
/// draws over `N` items: `N (1 - 1/N)^n (1 - (1 - 1/N)^floor(t n))`.
pub fn analytic_expected_unseen_uniform(support: u64, n: u64, t: f64) -> f64 {
    let q = 1.0 - 1.0 / support as f64;
    let future = libm::floor(t * n as f64);
    support as f64 * libm::pow(q, n as f64) * (1.0 - libm::pow(q, future))
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct TrialOutcome {
    /// Clamped estimate of unseen items.
    pub estimate: f64,
    pub truth: u64,
    pub observed_distinct: u64,
}

pub fn trial_outcome(spec: &SimSpec, trial: u64, config: &EstimatorConfig) -> Result<TrialOutcome> {
    let run = run_trial(spec, trial)?;
    let raw = estimator::estimate_unseen(&run.histogram(), config)?;
    Ok(TrialOutcome {
        estimate: raw.max(0.0),
        truth: run.future_new_distinct,
        observed_distinct: run.observed_distinct(),
    })
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct TrialSummary {
    pub trials: u64,
    pub config: EstimatorConfig,
    pub mean_estimate: f64,
    pub mean_truth: f64,
    pub std_estimate: f64,
    pub std_truth: f64,
    pub mean_observed_distinct: f64,
    /// `|mean_estimate - mean_truth| / mean_truth`; `None` when `mean_truth` is 0.
    pub rel_error_of_means: Option<f64>,
}

impl TrialSummary {
    /// Aggregates outcomes in trial order.
    pub fn assemble(config: EstimatorConfig, outcomes: &[TrialOutcome]) -> Result<Self> {
        if outcomes.is_empty() {
            return Err(Error::InvalidConfig("trials must be >= 1".into()));
        }
        let est: Vec<f64> = outcomes.iter().map(|o| o.estimate).collect();
        let truth: Vec<f64> = outcomes.iter().map(|o| o.truth as f64).collect();
        let seen: Vec<f64> = outcomes.iter().map(|o| o.observed_distinct as f64).collect();
        let (mean_estimate, mean_truth) = (mean(&est), mean(&truth));
        Ok(TrialSummary {
            trials: outcomes.len() as u64,
            config,
            mean_estimate,
            mean_truth,
            std_estimate: sample_std(&est),
            std_truth: sample_std(&truth),
            mean_observed_distinct: mean(&seen),
            rel_error_of_means: (mean_truth > 0.0)
                .then(|| (mean_estimate - mean_truth).abs() / mean_truth),
        })
    }
}

/// Runs `trials` independent simulations and aggregates estimate vs truth.
pub fn run_trials(spec: &SimSpec, trials: u64, config: &EstimatorConfig) -> Result<TrialSummary> {
    if trials == 0 {
        return Err(Error::InvalidConfig("trials must be >= 1".into()));
    }
    spec.validate()?;
    let outcomes = (0..trials)
        .map(|i| trial_outcome(spec, i, config))
        .collect::<Result<Vec<_>>>()?;
    TrialSummary::assemble(*config, &outcomes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_item_population_has_no_future_novelty() {
        for seed in 0..20 {
            let run = run_simulation(&SimSpec::uniform(1, 5, 1.0, seed)).unwrap();
            assert_eq!(run.future_new_distinct, 0);
            assert_eq!(run.observed_counts, vec![5]);
        }
    }

    #[test]
    fn degenerate_explicit_distribution() {
        let spec = SimSpec::explicit(vec![1.0, 0.0, 0.0], 10, 3.0, 4);
        assert_eq!(run_simulation(&spec).unwrap().future_new_distinct, 0);
        let p = run_simulation(&spec.clone().poissonized()).unwrap();
        assert_eq!(p.future_new_distinct, 0);
        assert_eq!(&p.observed_counts[1..], &[0, 0]);

        let s = run_trials(&spec, 20, &EstimatorConfig::new(8, 3.0).unwrap()).unwrap();
        assert_eq!(s.mean_truth, 0.0);
        assert_eq!(s.mean_estimate, 0.0);
        assert_eq!(s.rel_error_of_means, None);
    }

    #[test]
    fn analytic_examples() {
        let v = analytic_expected_unseen_uniform(10, 10, 1.0);
        let expected = 10.0 * libm::pow(0.9, 10.0) * (1.0 - libm::pow(0.9, 10.0));
        assert!((v - expected).abs() < 1e-12);
        assert!((v - 2.2710).abs() < 1e-4);
        assert_eq!(analytic_expected_unseen_uniform(1, 7, 2.0), 0.0);
        assert_eq!(analytic_expected_unseen_uniform(10, 0, 1.0), 0.0);
    }

    #[test]
    fn spec_validation() {
        assert!(SimSpec::uniform(0, 5, 1.0, 0).validate().is_err());
        assert!(SimSpec::uniform(3, 0, 1.0, 0).validate().is_err());
        assert!(SimSpec::uniform(3, 5, 0.0, 0).validate().is_err());
        assert!(SimSpec::zipf(3, -1.0, 5, 1.0, 0).validate().is_err());
        assert!(SimSpec::explicit(vec![0.5, 0.4], 5, 1.0, 0).validate().is_err());
        assert!(SimSpec::explicit(vec![0.5, -0.5, 1.0], 5, 1.0, 0).validate().is_err());
        let mut bad = SimSpec::explicit(vec![0.5, 0.5], 5, 1.0, 0);
        bad.support_size = 3;
        assert!(bad.validate().is_err());
        assert!(run_trials(&SimSpec::uniform(3, 5, 1.0, 0), 0, &EstimatorConfig::new(1, 1.0).unwrap())
            .is_err());
    }

    #[test]
    fn zipf_weights_are_normalized_and_decreasing() {
        let p = SimSpec::zipf(50, 1.1, 1, 1.0, 0).probabilities().unwrap();
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(p.windows(2).all(|w| w[0] > w[1]));
        assert!((p[0] / p[1] - libm::pow(2.0, 1.1)).abs() < 1e-12);
    }

    #[test]
    fn runs_are_deterministic_and_conserve_support() {
        let spec = SimSpec::zipf(200, 1.1, 300, 2.0, 17);
        let a = run_simulation(&spec).unwrap();
        assert_eq!(a, run_simulation(&spec).unwrap());
        assert_eq!(a.observed_counts.iter().sum::<u64>(), 300);
        assert!(a.observed_distinct() + a.future_new_distinct <= 200);
        let seq = a.observed_sequence().unwrap();
        assert_eq!(seq.len(), 300);
        assert_eq!(PrevalenceHistogram::from_counts(&a.clustered_counts()), a.histogram());
        assert!(run_simulation(&spec.poissonized()).unwrap().observed_sequence().is_none());
    }

    #[test]
    fn single_trial_has_zero_spread() {
        let s = run_trials(&SimSpec::uniform(10, 10, 1.0, 5), 1, &EstimatorConfig::new(8, 1.0).unwrap())
            .unwrap();
        assert_eq!((s.std_estimate, s.std_truth), (0.0, 0.0));
    }
}
