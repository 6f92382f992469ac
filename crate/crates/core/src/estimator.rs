//! Smoothed Good-Turing extrapolation of the number of unseen items.
//!
//! Given a prevalence histogram from `n` observations, the estimator predicts
//! how many new distinct items would show up in the next `t * n`
//! observations:
//!
//! ```text
//! U(t) = sum_{s=1..k} h_s * n_s,
//! h_s  = -(-t)^s * P(Bin(k, 1/(t+1)) >= s)
//! ```
//!
//! `k` truncates the alternating Efron-Thisted series, and the binomial tail
//! damps the high-order terms that make the raw series blow up for `t > 1`.
//!
//! The definitional form multiplies `t^s` (up to `100^12` in practice) by a
//! tail probability of comparable smallness. [`compute_coefficients`] instead
//! folds `t^s` into every tail term:
//!
//! ```text
//! |h_s| = sum_{j=s..k} C(k,j) * r^(s+k-j) * (t+1)^(s-j),   r = t/(t+1)
//! ```
//!
//! Every factor there is at most `C(k,j)` in magnitude, and the sum has no
//! cancellation.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::prevalence::PrevalenceHistogram;

/// Truncation level `k` and extrapolation factor `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct EstimatorConfig {
    k: u32,
    t: f64,
}

impl EstimatorConfig {
    pub fn new(k: u32, t: f64) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidConfig("truncation level k must be >= 1".into()));
        }
        if !(t.is_finite() && t > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "extrapolation factor t must be finite and > 0, got {t}"
            )));
        }
        Ok(EstimatorConfig { k, t })
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    /// Whether `t >= k - 1`, the regime where the growth bound is guaranteed.
    pub fn growth_bound_regime(&self) -> bool {
        self.t >= f64::from(self.k - 1)
    }
}

/// Weights `h_1 ..= h_k`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
#[cfg_attr(feature = "serde", serde(transparent))]
pub struct CoefficientVector(Vec<f64>);

impl CoefficientVector {
    /// `h_s` for `1 <= s <= k`.
    pub fn get(&self, s: u64) -> Option<f64> {
        let idx = usize::try_from(s).ok()?.checked_sub(1)?;
        self.0.get(idx).copied()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `sum_s h_s * n_s` over the histogram; buckets above `k` drop out.
    pub fn apply(&self, hist: &PrevalenceHistogram) -> f64 {
        hist.iter()
            .map_while(|b| self.get(b.s).map(|h| h * b.n_s as f64))
            .sum()
    }
}

/// Result of one estimation run.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct Estimate {
    pub config: EstimatorConfig,
    pub n_seen: u64,
    pub coefficients: CoefficientVector,
    /// Signed weighted sum, may be negative on adversarial histograms.
    pub unseen_raw: f64,
    /// `max(unseen_raw, 0)`.
    pub unseen: f64,
    /// `n_seen + unseen`.
    pub total: f64,
    /// `n_seen / total`.
    pub skr: f64,
}

/// Computes `h_1 ..= h_k` for the given configuration.
pub fn compute_coefficients(config: &EstimatorConfig) -> Result<CoefficientVector> {
    let k = config.k as usize;
    let t = config.t;
    let r = t / (t + 1.0);

    let mut binom = Vec::with_capacity(k + 1);
    let mut c = 1.0_f64;
    binom.push(c);
    for j in 1..=k {
        c = c * (k + 1 - j) as f64 / j as f64;
        binom.push(c);
    }

    let mut h = Vec::with_capacity(k);
    for s in 1..=k {
        let magnitude: f64 = (s..=k)
            .map(|j| {
                binom[j] * libm::pow(r, (s + k - j) as f64) * libm::pow(t + 1.0, s as f64 - j as f64)
            })
            .sum();
        if !magnitude.is_finite() {
            return Err(Error::NumericRange(format!(
                "coefficient h_{s} is not finite for k={k}, t={t}"
            )));
        }
        h.push(if s % 2 == 1 { magnitude } else { -magnitude });
    }
    Ok(CoefficientVector(h))
}

/// The signed estimate `sum_{s<=k} h_s * n_s`.
pub fn estimate_unseen(hist: &PrevalenceHistogram, config: &EstimatorConfig) -> Result<f64> {
    Ok(compute_coefficients(config)?.apply(hist))
}

/// Full estimate: unseen count (clamped at zero), total and seen-knowledge ratio.
pub fn estimate_total(hist: &PrevalenceHistogram, config: &EstimatorConfig) -> Result<Estimate> {
    if hist.n_seen() == 0 {
        return Err(Error::EmptyInput("seen-knowledge ratio undefined with no observed items".into()));
    }
    let coefficients = compute_coefficients(config)?;
    let unseen_raw = coefficients.apply(hist);
    let unseen = unseen_raw.max(0.0);
    let n_seen = hist.n_seen();
    Ok(Estimate {
        config: *config,
        n_seen,
        coefficients,
        unseen_raw,
        unseen,
        total: n_seen as f64 + unseen,
        skr: skr(n_seen, unseen)?,
    })
}

/// Seen-knowledge ratio `n_seen / (n_seen + unseen)`.
pub fn skr(n_seen: u64, unseen: f64) -> Result<f64> {
    if n_seen == 0 {
        return Err(Error::EmptyInput("seen-knowledge ratio undefined with no observed items".into()));
    }
    if !(unseen.is_finite() && unseen >= 0.0) {
        return Err(Error::InvalidInput(format!(
            "unseen count must be finite and non-negative, got {unseen}"
        )));
    }
    let seen = n_seen as f64;
    Ok(seen / (seen + unseen))
}

/// The untruncated alternating series `sum_{s<=s_max} (-1)^(s+1) t^s n_s`.
///
/// High-variance baseline; diverges for `t > 1` as `s_max` grows.
pub fn efron_thisted_raw(hist: &PrevalenceHistogram, t: f64, s_max: u64) -> Result<f64> {
    if s_max == 0 {
        return Err(Error::InvalidConfig("s_max must be >= 1".into()));
    }
    if !(t.is_finite() && t > 0.0) {
        return Err(Error::InvalidConfig(format!("t must be finite and > 0, got {t}")));
    }
    let mut sum = 0.0;
    for b in hist.iter().take_while(|b| b.s <= s_max) {
        let term = libm::pow(t, b.s as f64) * b.n_s as f64;
        if !term.is_finite() {
            return Err(Error::NumericRange(format!("term s={} is not finite for t={t}", b.s)));
        }
        sum += if b.s % 2 == 1 { term } else { -term };
    }
    if !sum.is_finite() {
        return Err(Error::NumericRange("series sum is not finite".into()));
    }
    Ok(sum)
}

/// Outcome of checking `|U(t)| <= e^(kt/(t+1)) * N_seen`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct GrowthBoundCheck {
    pub bound: f64,
    pub estimate: f64,
    pub satisfied: bool,
    /// `t >= k - 1`; only then is `satisfied` guaranteed.
    pub applicable: bool,
}

pub fn growth_bound(hist: &PrevalenceHistogram, config: &EstimatorConfig) -> Result<GrowthBoundCheck> {
    let k = f64::from(config.k);
    let t = config.t;
    let bound = libm::exp(k * t / (t + 1.0)) * hist.n_seen() as f64;
    let estimate = estimate_unseen(hist, config)?;
    Ok(GrowthBoundCheck {
        bound,
        estimate,
        satisfied: estimate.abs() <= bound,
        applicable: config.growth_bound_regime(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(k: u32, t: f64) -> EstimatorConfig {
        EstimatorConfig::new(k, t).unwrap()
    }

    fn hist(pairs: &[(u64, u64)]) -> PrevalenceHistogram {
        PrevalenceHistogram::from_buckets(pairs.iter().copied()).unwrap()
    }

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-12 * b.abs().max(1.0)
    }

    #[test]
    fn config_validation() {
        assert!(EstimatorConfig::new(0, 1.0).is_err());
        assert!(EstimatorConfig::new(1, 0.0).is_err());
        assert!(EstimatorConfig::new(1, f64::NAN).is_err());
        assert!(EstimatorConfig::new(1, f64::INFINITY).is_err());
        assert!(cfg(2, 1.0).growth_bound_regime());
        assert!(!cfg(5, 1.0).growth_bound_regime());
    }

    #[test]
    fn coefficient_examples() {
        assert_eq!(compute_coefficients(&cfg(1, 1.0)).unwrap().as_slice(), &[0.5]);
        let h = compute_coefficients(&cfg(2, 1.0)).unwrap();
        assert!(close(h.as_slice()[0], 0.75) && close(h.as_slice()[1], -0.25));
        let h = compute_coefficients(&cfg(2, 3.0)).unwrap();
        assert!(close(h.as_slice()[0], 1.3125) && close(h.as_slice()[1], -0.5625));
    }

    #[test]
    fn first_coefficient_closed_form() {
        for k in 1..=12u32 {
            for &t in &[0.5, 1.0, 2.0, 7.5, 100.0, 1e4] {
                let h1 = compute_coefficients(&cfg(k, t)).unwrap().as_slice()[0];
                let expected = t * (1.0 - libm::pow(t / (t + 1.0), f64::from(k)));
                assert!((h1 - expected).abs() <= 1e-12 * expected, "k={k} t={t}");
            }
        }
    }

    #[test]
    fn extreme_config_reports_numeric_range() {
        assert!(matches!(
            compute_coefficients(&cfg(2000, 1e6)),
            Err(Error::NumericRange(_))
        ));
    }

    #[test]
    fn unseen_examples() {
        assert_eq!(estimate_unseen(&hist(&[(1, 10)]), &cfg(1, 1.0)).unwrap(), 5.0);
        assert!(close(estimate_unseen(&hist(&[(1, 4), (2, 2)]), &cfg(2, 1.0)).unwrap(), 2.5));
        assert_eq!(estimate_unseen(&hist(&[(5, 3), (9, 1)]), &cfg(2, 1.0)).unwrap(), 0.0);
        assert_eq!(estimate_unseen(&PrevalenceHistogram::new(), &cfg(8, 100.0)).unwrap(), 0.0);
    }

    #[test]
    fn total_examples() {
        let e = estimate_total(&hist(&[(1, 4), (2, 2)]), &cfg(2, 1.0)).unwrap();
        assert!(close(e.unseen, 2.5));
        assert!(close(e.total, 8.5));
        assert!(close(e.skr, 6.0 / 8.5));

        let e = estimate_total(&hist(&[(5, 3)]), &cfg(2, 1.0)).unwrap();
        assert_eq!((e.unseen, e.total, e.skr), (0.0, 3.0, 1.0));

        assert!(matches!(
            estimate_total(&PrevalenceHistogram::new(), &cfg(2, 1.0)),
            Err(Error::EmptyInput(_))
        ));
    }

    #[test]
    fn negative_estimates_are_clamped() {
        // Only doubletons: h_2 < 0.
        let e = estimate_total(&hist(&[(2, 10)]), &cfg(2, 1.0)).unwrap();
        assert!(e.unseen_raw < 0.0);
        assert_eq!(e.unseen, 0.0);
        assert_eq!(e.total, 10.0);
        assert_eq!(e.skr, 1.0);
    }

    #[test]
    fn skr_examples() {
        assert!((skr(702, 487.0).unwrap() - 0.5904).abs() < 1e-4);
        assert!((skr(1432, 274.0).unwrap() - 0.8394).abs() < 1e-4);
        assert_eq!(skr(5, 0.0).unwrap(), 1.0);
        assert!(matches!(skr(0, 1.0), Err(Error::EmptyInput(_))));
        assert!(skr(3, -1.0).is_err());
    }

    #[test]
    fn efron_thisted_examples() {
        assert_eq!(efron_thisted_raw(&hist(&[(1, 4), (2, 2)]), 1.0, 2).unwrap(), 2.0);
        assert_eq!(efron_thisted_raw(&hist(&[(1, 1), (2, 1), (3, 1)]), 2.0, 3).unwrap(), 6.0);
        assert_eq!(efron_thisted_raw(&PrevalenceHistogram::new(), 5.0, 10).unwrap(), 0.0);
        assert!(efron_thisted_raw(&hist(&[(1, 1)]), 1.0, 0).is_err());
        assert!(matches!(
            efron_thisted_raw(&hist(&[(400, 1)]), 1e3, 400),
            Err(Error::NumericRange(_))
        ));
    }

    #[test]
    fn growth_bound_examples() {
        let c = growth_bound(&hist(&[(1, 10)]), &cfg(1, 1.0)).unwrap();
        assert!((c.bound - 16.487212707).abs() < 1e-8);
        assert_eq!(c.estimate, 5.0);
        assert!(c.satisfied && c.applicable);

        let c = growth_bound(&hist(&[(1, 4), (2, 2)]), &cfg(2, 1.0)).unwrap();
        assert!((c.bound - 6.0 * core::f64::consts::E).abs() < 1e-12);
        assert!(close(c.estimate, 2.5));
        assert!(c.satisfied && c.applicable);

        let c = growth_bound(&hist(&[(1, 1)]), &cfg(5, 1.0)).unwrap();
        assert!(!c.applicable);
        assert!((c.bound - libm::exp(2.5)).abs() < 1e-12);
    }
}
