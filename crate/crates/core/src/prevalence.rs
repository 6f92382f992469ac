//! Item counts and the prevalence histogram `s -> n_s` built from them.
//!
//! Everything here is exact integer arithmetic. `n_s` is the number of
//! distinct items observed exactly `s` times, `n = sum(s * n_s)` is the number
//! of observations and `N_seen = sum(n_s)` the number of distinct items.

use alloc::collections::btree_map::{self, BTreeMap};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};

/// Canonical identifier of one cluster of equivalent items.
///
/// Equality is byte equality; normalization happens before an id is built.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(transparent))]
pub struct ItemId(String);

impl ItemId {
    pub fn new(id: impl Into<String>) -> Result<Self> {
        let id = id.into();
        if id.is_empty() {
            return Err(Error::InvalidInput("item id must be non-empty".into()));
        }
        Ok(ItemId(id))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn into_string(self) -> String {
        self.0
    }
}

impl fmt::Display for ItemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl AsRef<str> for ItemId {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

/// Occurrence count of every distinct item. All counts are at least 1.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ClusteredCounts {
    counts: BTreeMap<ItemId, u64>,
}

impl ClusteredCounts {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds counts from `(item, count)` pairs. Rejects zero counts and
    /// repeated items.
    pub fn from_pairs<I>(pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (ItemId, u64)>,
    {
        let mut out = Self::new();
        for (id, count) in pairs {
            out.insert(id, count)?;
        }
        Ok(out)
    }

    /// Counts each occurrence in `items`.
    pub fn from_occurrences<'a, I>(items: I) -> Self
    where
        I: IntoIterator<Item = &'a ItemId>,
    {
        let mut out = Self::new();
        for id in items {
            out.add_occurrence(id.clone());
        }
        out
    }

    pub fn insert(&mut self, id: ItemId, count: u64) -> Result<()> {
        if count == 0 {
            return Err(Error::InvalidInput(format!("item {id:?} has count 0")));
        }
        match self.counts.entry(id) {
            btree_map::Entry::Occupied(e) => Err(Error::InvalidInput(format!(
                "item {:?} listed more than once",
                e.key().as_str()
            ))),
            btree_map::Entry::Vacant(e) => {
                e.insert(count);
                Ok(())
            }
        }
    }

    pub fn add_occurrence(&mut self, id: ItemId) {
        *self.counts.entry(id).or_insert(0) += 1;
    }

    pub fn get(&self, id: &ItemId) -> Option<u64> {
        self.counts.get(id).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&ItemId, u64)> + '_ {
        self.counts.iter().map(|(k, &v)| (k, v))
    }

    /// Number of distinct items.
    pub fn distinct(&self) -> usize {
        self.counts.len()
    }

    /// Total number of observations.
    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// Expands the counts into an observation list, items in id order.
    pub fn to_occurrences(&self) -> Vec<ItemId> {
        let mut out = Vec::with_capacity(self.total() as usize);
        for (id, &c) in &self.counts {
            for _ in 0..c {
                out.push(id.clone());
            }
        }
        out
    }
}

/// One histogram bucket: `n_s` distinct items were seen exactly `s` times.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Bucket {
    pub s: u64,
    pub n_s: u64,
}

/// Sparse prevalence histogram. Zero buckets are never stored.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PrevalenceHistogram {
    buckets: BTreeMap<u64, u64>,
    n: u64,
    n_seen: u64,
}

impl PrevalenceHistogram {
    pub fn new() -> Self {
        Self::default()
    }

    /// `n_s` = number of items with count exactly `s`.
    pub fn from_counts(counts: &ClusteredCounts) -> Self {
        Self::from_count_values(counts.iter().map(|(_, c)| c))
    }

    /// Same as [`from_counts`](Self::from_counts) over bare per-item counts.
    /// Zero counts (items never observed) are skipped.
    pub fn from_count_values<I: IntoIterator<Item = u64>>(counts: I) -> Self {
        let mut buckets = BTreeMap::new();
        let mut n = 0;
        let mut n_seen = 0;
        for c in counts {
            if c == 0 {
                continue;
            }
            *buckets.entry(c).or_insert(0) += 1;
            n += c;
            n_seen += 1;
        }
        PrevalenceHistogram { buckets, n, n_seen }
    }

    /// Loads a histogram directly from `(s, n_s)` pairs.
    ///
    /// Both `s` and `n_s` must be positive and each `s` may appear once.
    pub fn from_buckets<I: IntoIterator<Item = (u64, u64)>>(pairs: I) -> Result<Self> {
        let mut out = Self::new();
        for (s, n_s) in pairs {
            if s == 0 {
                return Err(Error::InvalidInput("bucket s must be positive".into()));
            }
            if n_s == 0 {
                return Err(Error::InvalidInput(format!("bucket s={s} has n_s = 0")));
            }
            if out.buckets.insert(s, n_s).is_some() {
                return Err(Error::InvalidInput(format!("bucket s={s} listed more than once")));
            }
            let obs = s
                .checked_mul(n_s)
                .and_then(|x| x.checked_add(out.n))
                .ok_or_else(|| Error::InvalidInput("total observations overflow u64".into()))?;
            out.n = obs;
            out.n_seen += n_s;
        }
        Ok(out)
    }

    /// Bucketwise sum of two histograms.
    ///
    /// Only meaningful when the underlying item sets are disjoint: if the same
    /// item occurs in both corpora its counts must be added first, and the
    /// histogram rebuilt from the combined [`ClusteredCounts`]. This cannot be
    /// detected at histogram level.
    pub fn merge(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (&s, &n_s) in &other.buckets {
            *out.buckets.entry(s).or_insert(0) += n_s;
        }
        out.n += other.n;
        out.n_seen += other.n_seen;
        out
    }

    /// `n_s`, zero when the bucket is absent.
    pub fn get(&self, s: u64) -> u64 {
        self.buckets.get(&s).copied().unwrap_or(0)
    }

    /// Non-zero buckets in increasing `s`.
    pub fn iter(&self) -> impl Iterator<Item = Bucket> + '_ {
        self.buckets.iter().map(|(&s, &n_s)| Bucket { s, n_s })
    }

    pub fn buckets(&self) -> Vec<Bucket> {
        self.iter().collect()
    }

    /// Total observations `n`.
    pub fn n(&self) -> u64 {
        self.n
    }

    /// Distinct observed items `N_seen`.
    pub fn n_seen(&self) -> u64 {
        self.n_seen
    }

    pub fn max_s(&self) -> Option<u64> {
        self.buckets.keys().next_back().copied()
    }

    pub fn is_empty(&self) -> bool {
        self.buckets.is_empty()
    }

    /// The multiset of per-item counts, sorted ascending.
    pub fn count_multiset(&self) -> Vec<u64> {
        let mut out = Vec::with_capacity(self.n_seen as usize);
        for (&s, &n_s) in &self.buckets {
            out.extend(core::iter::repeat_n(s, n_s as usize));
        }
        out
    }

    /// Counts over synthetic item ids (`s{s}-{i}`) reproducing this histogram.
    pub fn to_synthetic_counts(&self) -> ClusteredCounts {
        let mut out = ClusteredCounts::new();
        for (&s, &n_s) in &self.buckets {
            for i in 0..n_s {
                let id = ItemId(format!("s{s}-{i}"));
                out.counts.insert(id, s);
            }
        }
        out
    }
}
