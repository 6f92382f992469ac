//! Multi-threaded drivers for repetitions and trials.
//!
//! Each repetition or trial draws from its own seeded stream and results are
//! collected in index order, so outputs do not depend on the thread count.

use knowsum_core::estimator::EstimatorConfig;
use knowsum_core::simulator::{trial_outcome, SimSpec, TrialSummary};
use knowsum_core::validation::{
    HeldOut, KSelectionReport, ObservationSequence, RepetitionResult, SplitSpec, ValidationReport,
};
use rayon::prelude::*;

use crate::error::{Error, Result};

/// A thread pool of the requested size (`None` lets rayon decide).
pub fn pool(threads: Option<usize>) -> Result<rayon::ThreadPool> {
    if threads == Some(0) {
        return Err(Error::Usage("--threads must be >= 1".into()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))
}

pub fn held_out_validate(
    pool: &rayon::ThreadPool,
    seq: &ObservationSequence,
    split: SplitSpec,
    config: EstimatorConfig,
) -> Result<ValidationReport> {
    let held = HeldOut::new(seq, split)?;
    let per_rep = pool.install(|| {
        (0..split.repetitions)
            .into_par_iter()
            .map(|rep| {
                held.repetition(rep, config.t(), &[config.k()]).map(|o| RepetitionResult {
                    estimate: o.estimates[0],
                    ground_truth: o.ground_truth,
                })
            })
            .collect::<knowsum_core::Result<Vec<_>>>()
    })?;
    Ok(ValidationReport::assemble(config, split, per_rep)?)
}

pub fn select_k(
    pool: &rayon::ThreadPool,
    seq: &ObservationSequence,
    split: SplitSpec,
    candidates: &[u32],
    t: f64,
) -> Result<KSelectionReport> {
    let held = HeldOut::new(seq, split)?;
    let outcomes = pool.install(|| {
        (0..split.repetitions)
            .into_par_iter()
            .map(|rep| held.repetition(rep, t, candidates))
            .collect::<knowsum_core::Result<Vec<_>>>()
    })?;
    Ok(KSelectionReport::assemble(candidates, t, split, &outcomes)?)
}

pub fn run_trials(
    pool: &rayon::ThreadPool,
    spec: &SimSpec,
    trials: u64,
    config: &EstimatorConfig,
) -> Result<TrialSummary> {
    spec.validate()?;
    let outcomes = pool.install(|| {
        (0..trials)
            .into_par_iter()
            .map(|i| trial_outcome(spec, i, config))
            .collect::<knowsum_core::Result<Vec<_>>>()
    })?;
    Ok(TrialSummary::assemble(*config, &outcomes)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use knowsum_core::validation::ObservedFraction;
    use knowsum_core::ItemId;

    #[test]
    fn matches_sequential_drivers() {
        let seq = ObservationSequence::new(
            (0..300u32).map(|i| ItemId::new(format!("x{}", (i * i) % 97)).unwrap()).collect(),
        );
        let split = SplitSpec::new(ObservedFraction::new(1, 3).unwrap(), 17, 5);
        let cfg = EstimatorConfig::new(6, 2.0).unwrap();
        let p = pool(Some(3)).unwrap();
        assert_eq!(
            held_out_validate(&p, &seq, split, cfg).unwrap(),
            knowsum_core::validation::held_out_validate(&seq, split, cfg).unwrap()
        );
        assert_eq!(
            select_k(&p, &seq, split, &[4, 6], 2.0).unwrap(),
            knowsum_core::validation::select_k(&seq, split, &[4, 6], 2.0).unwrap()
        );
        let spec = SimSpec::zipf(200, 1.1, 150, 1.0, 3);
        assert_eq!(
            run_trials(&p, &spec, 40, &cfg).unwrap(),
            knowsum_core::simulator::run_trials(&spec, 40, &cfg).unwrap()
        );
    }
}
