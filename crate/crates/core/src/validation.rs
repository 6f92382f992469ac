//! Held-out validation of the estimator and cross-validated choice of `k`.
//!
//! An observation sequence is shuffled, the first `r_obs` fraction is kept as
//! "observed" and the estimator is asked how many new items the remainder
//! contains. The holdout supplies the ground truth. Repetition `i` draws its
//! shuffle from a ChaCha8 stream keyed by `(master_seed, i)`, so each
//! repetition can run independently and in any order.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::estimator::{self, EstimatorConfig};
use crate::prevalence::{ItemId, PrevalenceHistogram};
use crate::stats::{mean, sample_std};

/// Ordered list of observations, one entry per occurrence.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ObservationSequence(pub Vec<ItemId>);

impl ObservationSequence {
    pub fn new(items: Vec<ItemId>) -> Self {
        ObservationSequence(items)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn items(&self) -> &[ItemId] {
        &self.0
    }
}

/// Observed fraction `r_obs = num / den`, strictly between 0 and 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ObservedFraction {
    num: u32,
    den: u32,
}

impl ObservedFraction {
    pub fn new(num: u32, den: u32) -> Result<Self> {
        if num == 0 || den == 0 || num >= den {
            return Err(Error::Split(format!("r_obs = {num}/{den} is not in (0, 1)")));
        }
        Ok(ObservedFraction { num, den })
    }

    pub fn numerator(&self) -> u32 {
        self.num
    }

    pub fn denominator(&self) -> u32 {
        self.den
    }

    pub fn as_f64(&self) -> f64 {
        f64::from(self.num) / f64::from(self.den)
    }

    /// Largest extrapolation factor the holdout can check, `(1 - r) / r`.
    pub fn max_t(&self) -> f64 {
        f64::from(self.den - self.num) / f64::from(self.num)
    }

    /// `floor(r_obs * len)`.
    pub fn observed_len(&self, len: usize) -> usize {
        (len as u128 * u128::from(self.num) / u128::from(self.den)) as usize
    }
}

impl fmt::Display for ObservedFraction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

#[cfg(feature = "serde")]
impl serde::Serialize for ObservedFraction {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> core::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

/// How the held-out protocol splits and repeats.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct SplitSpec {
    pub r_obs: ObservedFraction,
    pub repetitions: u32,
    pub master_seed: u64,
    /// When false every repetition uses the sequence in its given order.
    pub shuffle: bool,
}

impl SplitSpec {
    pub fn new(r_obs: ObservedFraction, repetitions: u32, master_seed: u64) -> Self {
        SplitSpec { r_obs, repetitions, master_seed, shuffle: true }
    }

    pub fn without_shuffle(mut self) -> Self {
        self.shuffle = false;
        self
    }
}

/// The RNG used for repetition `rep` under `master_seed`.
pub fn repetition_rng(master_seed: u64, rep: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(rep);
    rng
}

fn check_split(len: usize, r_obs: ObservedFraction) -> Result<usize> {
    if len < 2 {
        return Err(Error::Split(format!("need at least 2 observations, got {len}")));
    }
    let m = r_obs.observed_len(len);
    if m == 0 || m == len {
        return Err(Error::Split(format!(
            "r_obs = {r_obs} leaves one side empty for {len} observations"
        )));
    }
    Ok(m)
}

/// Seeded uniform shuffle of `seq`, cut at `floor(r_obs * len)`.
pub fn split_sequence(
    seq: &ObservationSequence,
    r_obs: ObservedFraction,
    seed: u64,
) -> Result<(ObservationSequence, ObservationSequence)> {
    let m = check_split(seq.len(), r_obs)?;
    let mut items = seq.0.clone();
    items.shuffle(&mut repetition_rng(seed, 0));
    let holdout = items.split_off(m);
    Ok((ObservationSequence(items), ObservationSequence(holdout)))
}

/// Number of distinct holdout items that never occur in `observed`.
pub fn ground_truth_unseen(observed: &ObservationSequence, holdout: &ObservationSequence) -> u64 {
    let seen: alloc::collections::BTreeSet<&ItemId> = observed.0.iter().collect();
    let fresh: alloc::collections::BTreeSet<&ItemId> =
        holdout.0.iter().filter(|id| !seen.contains(id)).collect();
    fresh.len() as u64
}

/// `mean(((estimate - truth) / max(truth, 1))^2)`.
pub fn normalized_mse(per_rep: &[RepetitionResult]) -> Result<f64> {
    if per_rep.is_empty() {
        return Err(Error::EmptyInput("normalized MSE of zero repetitions".into()));
    }
    let total: f64 = per_rep
        .iter()
        .map(|r| {
            let truth = r.ground_truth as f64;
            let e = (r.estimate - truth) / truth.max(1.0);
            e * e
        })
        .sum();
    Ok(total / per_rep.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct RepetitionResult {
    /// Signed estimator output.
    pub estimate: f64,
    pub ground_truth: u64,
}

/// One repetition evaluated for several truncation levels at once.
#[derive(Debug, Clone, PartialEq)]
pub struct RepetitionOutcome {
    pub ground_truth: u64,
    /// One estimate per requested `k`, same order.
    pub estimates: Vec<f64>,
}

/// A sequence prepared for repeated held-out splits (items interned to indices).
#[derive(Debug, Clone)]
pub struct HeldOut {
    ids: Vec<u32>,
    distinct: usize,
    observed_len: usize,
    split: SplitSpec,
}

impl HeldOut {
    pub fn new(seq: &ObservationSequence, split: SplitSpec) -> Result<Self> {
        if split.repetitions == 0 {
            return Err(Error::Split("repetitions must be >= 1".into()));
        }
        let observed_len = check_split(seq.len(), split.r_obs)?;
        let mut index = alloc::collections::BTreeMap::new();
        let ids = seq
            .0
            .iter()
            .map(|id| {
                let next = index.len() as u32;
                *index.entry(id).or_insert(next)
            })
            .collect();
        Ok(HeldOut { ids, distinct: index.len(), observed_len, split })
    }

    pub fn split(&self) -> &SplitSpec {
        &self.split
    }

    fn check_t(&self, t: f64) -> Result<()> {
        let max_t = self.split.r_obs.max_t();
        if !(t.is_finite() && t > 0.0) || t > max_t * (1.0 + 1e-12) {
            return Err(Error::InvalidConfig(format!(
                "t = {t} is outside (0, {max_t}] for r_obs = {}",
                self.split.r_obs
            )));
        }
        Ok(())
    }

    /// Runs repetition `rep`: split, estimate with each `k` at factor `t`, and
    /// count new distinct items in the first `floor(t * |observed|)` holdout
    /// entries.
    pub fn repetition(&self, rep: u32, t: f64, ks: &[u32]) -> Result<RepetitionOutcome> {
        self.check_t(t)?;
        let configs = ks
            .iter()
            .map(|&k| EstimatorConfig::new(k, t))
            .collect::<Result<Vec<_>>>()?;

        let mut order = self.ids.clone();
        if self.split.shuffle {
            order.shuffle(&mut repetition_rng(self.split.master_seed, u64::from(rep)));
        }
        let (observed, holdout) = order.split_at(self.observed_len);

        let mut counts = vec![0u64; self.distinct];
        for &id in observed {
            counts[id as usize] += 1;
        }
        let hist = PrevalenceHistogram::from_count_values(counts.iter().copied());

        let horizon = libm::floor(t * observed.len() as f64) as usize;
        let horizon = horizon.min(holdout.len());
        let mut ground_truth = 0;
        for &id in &holdout[..horizon] {
            let c = &mut counts[id as usize];
            if *c == 0 {
                ground_truth += 1;
                // mark as counted
                *c = u64::MAX;
            }
        }

        let estimates = configs
            .iter()
            .map(|c| estimator::estimate_unseen(&hist, c))
            .collect::<Result<Vec<_>>>()?;
        Ok(RepetitionOutcome { ground_truth, estimates })
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct ValidationReport {
    pub config: EstimatorConfig,
    pub split: SplitSpec,
    pub per_rep: Vec<RepetitionResult>,
    pub mean_estimate: f64,
    pub std_estimate: f64,
    pub mean_truth: f64,
    pub std_truth: f64,
    pub nmse: f64,
}

impl ValidationReport {
    /// Summarizes per-repetition results, kept in repetition order.
    pub fn assemble(
        config: EstimatorConfig,
        split: SplitSpec,
        per_rep: Vec<RepetitionResult>,
    ) -> Result<Self> {
        let est: Vec<f64> = per_rep.iter().map(|r| r.estimate).collect();
        let truth: Vec<f64> = per_rep.iter().map(|r| r.ground_truth as f64).collect();
        let nmse = normalized_mse(&per_rep)?;
        Ok(ValidationReport {
            config,
            split,
            mean_estimate: mean(&est),
            std_estimate: sample_std(&est),
            mean_truth: mean(&truth),
            std_truth: sample_std(&truth),
            nmse,
            per_rep,
        })
    }

    /// `|mean_estimate - mean_truth| / mean_truth`, `None` when the mean truth is 0.
    pub fn relative_error_of_means(&self) -> Option<f64> {
        (self.mean_truth > 0.0)
            .then(|| (self.mean_estimate - self.mean_truth).abs() / self.mean_truth)
    }
}

/// Runs every repetition in order and summarizes.
pub fn held_out_validate(
    seq: &ObservationSequence,
    split: SplitSpec,
    config: EstimatorConfig,
) -> Result<ValidationReport> {
    let held = HeldOut::new(seq, split)?;
    let per_rep = (0..split.repetitions)
        .map(|rep| {
            held.repetition(rep, config.t(), &[config.k()]).map(|o| RepetitionResult {
                estimate: o.estimates[0],
                ground_truth: o.ground_truth,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    ValidationReport::assemble(config, split, per_rep)
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct KScore {
    pub k: u32,
    pub nmse: f64,
    pub mean_estimate: f64,
    pub mean_truth: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct KSelectionReport {
    pub t: f64,
    pub split: SplitSpec,
    pub candidates: Vec<KScore>,
    /// Minimum-NMSE candidate; the smallest such `k` on ties.
    pub selected_k: u32,
}

fn check_candidates(candidates: &[u32]) -> Result<()> {
    if candidates.is_empty() {
        return Err(Error::InvalidConfig("no candidate truncation levels".into()));
    }
    if candidates.contains(&0) {
        return Err(Error::InvalidConfig("truncation level k must be >= 1".into()));
    }
    Ok(())
}

impl KSelectionReport {
    /// Scores candidates from outcomes produced by
    /// [`HeldOut::repetition`] with `ks = candidates`.
    pub fn assemble(
        candidates: &[u32],
        t: f64,
        split: SplitSpec,
        outcomes: &[RepetitionOutcome],
    ) -> Result<Self> {
        check_candidates(candidates)?;
        let mut scores = Vec::with_capacity(candidates.len());
        for (i, &k) in candidates.iter().enumerate() {
            let per_rep: Vec<RepetitionResult> = outcomes
                .iter()
                .map(|o| RepetitionResult { estimate: o.estimates[i], ground_truth: o.ground_truth })
                .collect();
            let est: Vec<f64> = per_rep.iter().map(|r| r.estimate).collect();
            let truth: Vec<f64> = per_rep.iter().map(|r| r.ground_truth as f64).collect();
            scores.push(KScore {
                k,
                nmse: normalized_mse(&per_rep)?,
                mean_estimate: mean(&est),
                mean_truth: mean(&truth),
            });
        }
        let selected_k = scores
            .iter()
            .min_by(|a, b| a.nmse.total_cmp(&b.nmse).then(a.k.cmp(&b.k)))
            .map(|s| s.k)
            .expect("candidates checked non-empty");
        Ok(KSelectionReport { t, split, candidates: scores, selected_k })
    }
}

/// Cross-validates each candidate `k` on the same shuffles and picks the
/// minimum-NMSE one.
pub fn select_k(
    seq: &ObservationSequence,
    split: SplitSpec,
    candidates: &[u32],
    t: f64,
) -> Result<KSelectionReport> {
    check_candidates(candidates)?;
    let held = HeldOut::new(seq, split)?;
    let outcomes = (0..split.repetitions)
        .map(|rep| held.repetition(rep, t, candidates))
        .collect::<Result<Vec<_>>>()?;
    KSelectionReport::assemble(candidates, t, split, &outcomes)
}

/// One point on a sensitivity curve.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct SweepPoint {
    pub k: u32,
    pub t: f64,
    pub unseen: f64,
    pub unseen_raw: f64,
    pub total: f64,
    pub skr: f64,
}

fn sweep_point(hist: &PrevalenceHistogram, k: u32, t: f64) -> Result<SweepPoint> {
    let e = estimator::estimate_total(hist, &EstimatorConfig::new(k, t)?)?;
    Ok(SweepPoint { k, t, unseen: e.unseen, unseen_raw: e.unseen_raw, total: e.total, skr: e.skr })
}

/// Estimates over a strictly increasing grid of extrapolation factors.
pub fn sweep_t(hist: &PrevalenceHistogram, k: u32, t_grid: &[f64]) -> Result<Vec<SweepPoint>> {
    if t_grid.windows(2).any(|w| w[0].partial_cmp(&w[1]) != Some(core::cmp::Ordering::Less)) {
        return Err(Error::InvalidConfig("t grid must be strictly increasing".into()));
    }
    t_grid.iter().map(|&t| sweep_point(hist, k, t)).collect()
}

/// Estimates over a strictly increasing grid of truncation levels.
pub fn sweep_k(hist: &PrevalenceHistogram, t: f64, k_grid: &[u32]) -> Result<Vec<SweepPoint>> {
    if k_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidConfig("k grid must be strictly increasing".into()));
    }
    k_grid.iter().map(|&k| sweep_point(hist, k, t)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;

    fn seq(s: &str) -> ObservationSequence {
        ObservationSequence(s.chars().map(|c| ItemId::new(c.to_string()).unwrap()).collect())
    }

    fn half() -> ObservedFraction {
        ObservedFraction::new(1, 2).unwrap()
    }

    #[test]
    fn fraction_validation() {
        assert!(ObservedFraction::new(0, 2).is_err());
        assert!(ObservedFraction::new(2, 2).is_err());
        assert!(ObservedFraction::new(1, 0).is_err());
        let third = ObservedFraction::new(1, 3).unwrap();
        assert_eq!(third.max_t(), 2.0);
        assert_eq!(ObservedFraction::new(1, 4).unwrap().max_t(), 3.0);
        assert_eq!(third.to_string(), "1/3");
    }

    #[test]
    fn split_sizes() {
        let (o, h) = split_sequence(&seq("ABCDEFGH"), half(), 7).unwrap();
        assert_eq!((o.len(), h.len()), (4, 4));
        let (o, h) = split_sequence(&seq("ABCDEFGHI"), ObservedFraction::new(1, 3).unwrap(), 7)
            .unwrap();
        assert_eq!((o.len(), h.len()), (3, 6));
        assert_eq!(
            split_sequence(&seq("ABCDEFGH"), half(), 11).unwrap(),
            split_sequence(&seq("ABCDEFGH"), half(), 11).unwrap()
        );
    }

    #[test]
    fn split_errors() {
        assert!(matches!(split_sequence(&seq("A"), half(), 0), Err(Error::Split(_))));
        let small = ObservedFraction::new(1, 4).unwrap();
        assert!(matches!(split_sequence(&seq("AB"), small, 0), Err(Error::Split(_))));
    }

    #[test]
    fn ground_truth_examples() {
        assert_eq!(ground_truth_unseen(&seq("AABC"), &seq("CDEE")), 2);
        assert_eq!(ground_truth_unseen(&seq("ABC"), &seq("CBA")), 0);
        assert_eq!(ground_truth_unseen(&seq(""), &seq("X")), 1);
    }

    #[test]
    fn worked_sequence_without_shuffle() {
        let split = SplitSpec::new(half(), 1, 42).without_shuffle();
        let r = held_out_validate(&seq("AABCCDEE"), split, EstimatorConfig::new(2, 1.0).unwrap())
            .unwrap();
        assert_eq!(r.per_rep.len(), 1);
        assert!((r.per_rep[0].estimate - 1.25).abs() < 1e-12);
        assert_eq!(r.per_rep[0].ground_truth, 2);
        assert!((r.nmse - 0.140625).abs() < 1e-12);
        assert_eq!(r.std_estimate, 0.0);
    }

    #[test]
    fn zero_repetitions_is_a_split_error() {
        let split = SplitSpec::new(half(), 0, 1);
        let err = held_out_validate(&seq("AABCCDEE"), split, EstimatorConfig::new(2, 1.0).unwrap());
        assert!(matches!(err, Err(Error::Split(_))));
    }

    #[test]
    fn t_beyond_holdout_is_rejected() {
        let split = SplitSpec::new(half(), 3, 1);
        let err = held_out_validate(&seq("AABCCDEE"), split, EstimatorConfig::new(2, 1.5).unwrap());
        assert!(matches!(err, Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn partial_t_counts_holdout_prefix() {
        // observed AABC, holdout CDEE; t = 0.5 looks at "CD" only.
        let split = SplitSpec::new(half(), 1, 0).without_shuffle();
        let held = HeldOut::new(&seq("AABCCDEE"), split).unwrap();
        assert_eq!(held.repetition(0, 0.5, &[1]).unwrap().ground_truth, 1);
        assert_eq!(held.repetition(0, 1.0, &[1]).unwrap().ground_truth, 2);
    }

    #[test]
    fn deterministic_reports() {
        let s = seq("AABBCDEFGGHIJKLLMNOPQRSTUVWXYZ");
        let split = SplitSpec::new(ObservedFraction::new(1, 3).unwrap(), 20, 99);
        let c = EstimatorConfig::new(3, 2.0).unwrap();
        assert_eq!(held_out_validate(&s, split, c).unwrap(), held_out_validate(&s, split, c).unwrap());
    }

    #[test]
    fn nmse_examples() {
        let r = |estimate, ground_truth| RepetitionResult { estimate, ground_truth };
        assert!((normalized_mse(&[r(1.25, 2)]).unwrap() - 0.140625).abs() < 1e-15);
        assert_eq!(normalized_mse(&[r(5.0, 5)]).unwrap(), 0.0);
        assert_eq!(normalized_mse(&[r(3.0, 0)]).unwrap(), 9.0);
        assert!(matches!(normalized_mse(&[]), Err(Error::EmptyInput(_))));
    }

    #[test]
    fn select_k_contract() {
        let s = seq("AAAABBBCCDEFGHHIIJKLMNOPQQRSTUVWXYZZ");
        let split = SplitSpec::new(half(), 10, 3);
        let one = select_k(&s, split, &[8], 1.0).unwrap();
        assert_eq!(one.selected_k, 8);
        assert!(matches!(select_k(&s, split, &[], 1.0), Err(Error::InvalidConfig(_))));

        let r = select_k(&s, split, &[1, 2, 3], 1.0).unwrap();
        let best = r.candidates.iter().map(|c| c.nmse).fold(f64::INFINITY, f64::min);
        let first_best = r.candidates.iter().find(|c| c.nmse == best).unwrap().k;
        assert_eq!(r.selected_k, first_best);
        assert_eq!(r, select_k(&s, split, &[1, 2, 3], 1.0).unwrap());
    }

    #[test]
    fn select_k_ties_pick_smallest() {
        let outcomes = [RepetitionOutcome { ground_truth: 2, estimates: vec![1.0, 3.0, 1.0] }];
        let split = SplitSpec::new(half(), 1, 0);
        let r = KSelectionReport::assemble(&[10, 6, 8], 1.0, split, &outcomes).unwrap();
        assert_eq!(r.selected_k, 6);
    }

    #[test]
    fn sweep_examples() {
        let h = PrevalenceHistogram::from_buckets([(1, 10)]).unwrap();
        let pts = sweep_t(&h, 1, &[1.0, 2.0, 3.0]).unwrap();
        let unseen: Vec<f64> = pts.iter().map(|p| p.unseen).collect();
        for (got, want) in unseen.iter().zip([5.0, 20.0 / 3.0, 7.5]) {
            assert!((got - want).abs() < 1e-12);
        }
        assert!(sweep_t(&h, 1, &[]).unwrap().is_empty());
        let far = PrevalenceHistogram::from_buckets([(5, 1)]).unwrap();
        assert!(sweep_t(&far, 1, &[1.0, 10.0, 100.0]).unwrap().iter().all(|p| p.unseen == 0.0));
        assert!(sweep_t(&h, 1, &[2.0, 1.0]).is_err());
        assert!(sweep_k(&h, 1.0, &[3, 3]).is_err());
        assert_eq!(sweep_k(&h, 1.0, &[1, 2]).unwrap().len(), 2);
    }
}
