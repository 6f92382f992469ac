//! Unseen-item estimation from prevalence histograms.
//!
//! The crate is `no_std` (with `alloc`) and contains only the algorithmic
//! pieces: histogram construction, the smoothed Good-Turing estimator and its
//! seen-knowledge ratio, held-out validation with truncation selection, a
//! synthetic sampling simulator, and the offline verify/normalize/cluster
//! pipeline. File formats, reports and the command-line front end live in the
//! `knowsum` crate.
//!
//! ```
//! use knowsum_core::estimator::{estimate_total, EstimatorConfig};
//! use knowsum_core::prevalence::PrevalenceHistogram;
//!
//! let hist = PrevalenceHistogram::from_buckets([(1, 4), (2, 2)]).unwrap();
//! let est = estimate_total(&hist, &EstimatorConfig::new(2, 1.0).unwrap()).unwrap();
//! assert!((est.unseen - 2.5).abs() < 1e-12);
//! assert!((est.total - 8.5).abs() < 1e-12);
//! ```

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod error;
pub mod estimator;
pub mod pipeline;
pub mod prevalence;
pub mod simulator;
mod stats;
pub mod validation;

pub use error::{Error, Result};
pub use estimator::{EstimatorConfig, Estimate};
pub use prevalence::{ClusteredCounts, ItemId, PrevalenceHistogram};
