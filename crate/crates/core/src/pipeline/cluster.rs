use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use super::dsu::DisjointSets;
use super::normalize::normalize_name;
use crate::error::{Error, Result};
use crate::prevalence::{ClusteredCounts, ItemId};
use crate::validation::ObservationSequence;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Metric {
    #[default]
    Euclidean,
    /// `1 - cos(a, b)`.
    Cosine,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
#[cfg_attr(feature = "serde", serde(tag = "mode", rename_all = "lowercase"))]
pub enum ClusterMode {
    Exact,
    Embedding { q: f64, knn: usize, metric: Metric },
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
#[cfg_attr(feature = "serde", serde(transparent))]
pub struct ClusterSpec {
    pub mode: ClusterMode,
}

impl ClusterSpec {
    pub fn exact() -> Self {
        ClusterSpec { mode: ClusterMode::Exact }
    }

    /// Embedding clustering with `q = 0.5`, `knn = 10`, Euclidean distance.
    pub fn embedding() -> Self {
        ClusterSpec { mode: ClusterMode::Embedding { q: 0.5, knn: 10, metric: Metric::Euclidean } }
    }
}

/// Vectors keyed by normalized item name; all of one dimension.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EmbeddingTable {
    dim: Option<usize>,
    vectors: BTreeMap<String, Vec<f64>>,
}

impl EmbeddingTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, item: &str, vector: Vec<f64>) -> Result<()> {
        let key = normalize_name(item)
            .ok_or_else(|| Error::InvalidInput("embedding row has an empty item name".into()))?;
        if vector.is_empty() {
            return Err(Error::InvalidInput(format!("empty vector for {key:?}")));
        }
        if vector.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite vector entry for {key:?}")));
        }
        match self.dim {
            Some(d) if d != vector.len() => {
                return Err(Error::InvalidInput(format!(
                    "vector for {key:?} has dimension {}, table has {d}",
                    vector.len()
                )))
            }
            _ => self.dim = Some(vector.len()),
        }
        if self.vectors.insert(key.clone(), vector).is_some() {
            return Err(Error::InvalidInput(format!("duplicate embedding for {key:?}")));
        }
        Ok(())
    }

    pub fn get(&self, normalized: &str) -> Option<&[f64]> {
        self.vectors.get(normalized).map(Vec::as_slice)
    }

    pub fn dim(&self) -> Option<usize> {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }
}

/// Cluster label of every clustered occurrence, in input order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Clustering {
    pub labels: Vec<ItemId>,
}

impl Clustering {
    pub fn counts(&self) -> ClusteredCounts {
        ClusteredCounts::from_occurrences(&self.labels)
    }

    pub fn sequence(&self) -> ObservationSequence {
        ObservationSequence::new(self.labels.clone())
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// Labels each item by its normalized name. Items that normalize to nothing
/// are dropped.
pub fn assign_exact(items: &[String]) -> Clustering {
    let labels = items
        .iter()
        .filter_map(|s| normalize_name(s))
        .map(|n| ItemId::new(n).expect("normalized names are non-empty"))
        .collect();
    Clustering { labels }
}

pub fn cluster_exact(items: &[String]) -> ClusteredCounts {
    assign_exact(items).counts()
}

pub fn distance(a: &[f64], b: &[f64], metric: Metric) -> f64 {
    match metric {
        Metric::Euclidean => {
            libm::sqrt(a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>())
        }
        Metric::Cosine => {
            let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
            let na = libm::sqrt(a.iter().map(|x| x * x).sum::<f64>());
            let nb = libm::sqrt(b.iter().map(|x| x * x).sum::<f64>());
            (1.0 - dot / (na * nb)).max(0.0)
        }
    }
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = libm::floor(h) as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Pools every point's `knn` nearest-neighbor distances and returns their
/// `q`-quantile (linear interpolation between order statistics).
pub fn compute_threshold(vectors: &[&[f64]], knn: usize, q: f64, metric: Metric) -> Result<f64> {
    if knn == 0 {
        return Err(Error::InvalidConfig("knn must be >= 1".into()));
    }
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::InvalidConfig(format!("quantile q must be in [0, 1], got {q}")));
    }
    if vectors.len() < knn + 1 {
        return Err(Error::InvalidInput(format!(
            "need at least {} vectors for {knn}-nearest-neighbor distances, got {}",
            knn + 1,
            vectors.len()
        )));
    }
    let mut pooled = Vec::with_capacity(vectors.len() * knn);
    let mut row = Vec::with_capacity(vectors.len() - 1);
    for (i, a) in vectors.iter().enumerate() {
        row.clear();
        row.extend(
            vectors.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, b)| distance(a, b, metric)),
        );
        row.sort_by(f64::total_cmp);
        pooled.extend_from_slice(&row[..knn]);
    }
    pooled.sort_by(f64::total_cmp);
    Ok(quantile(&pooled, q))
}

struct Distinct<'a> {
    names: Vec<String>,
    vectors: Vec<&'a [f64]>,
    normalized: Vec<String>,
}

fn distinct_vectors<'a>(items: &[String], table: &'a EmbeddingTable, metric: Metric) -> Result<Distinct<'a>> {
    let normalized: Vec<String> = items.iter().filter_map(|s| normalize_name(s)).collect();
    let names: Vec<String> = normalized.iter().cloned().collect::<BTreeSet<_>>().into_iter().collect();
    let vectors = names
        .iter()
        .map(|n| table.get(n).ok_or_else(|| Error::MissingVector(n.clone())))
        .collect::<Result<Vec<_>>>()?;
    if metric == Metric::Cosine {
        if let Some(i) = vectors.iter().position(|v| v.iter().all(|&x| x == 0.0)) {
            return Err(Error::InvalidInput(format!(
                "zero vector for {:?} has no cosine distance",
                names[i]
            )));
        }
    }
    Ok(Distinct { names, vectors, normalized })
}

fn label_components(d: &Distinct<'_>, threshold: f64, metric: Metric) -> Clustering {
    let m = d.names.len();
    let mut sets = DisjointSets::new(m);
    for i in 0..m {
        for j in (i + 1)..m {
            if distance(d.vectors[i], d.vectors[j], metric) < threshold {
                sets.union(i, j);
            }
        }
    }
    // names are sorted, so the smallest index is the lexicographically smallest member
    let rep = sets.labels();
    let index: BTreeMap<&str, usize> =
        d.names.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();
    let labels = d
        .normalized
        .iter()
        .map(|n| {
            let r = rep[index[n.as_str()]];
            ItemId::new(d.names[r].clone()).expect("normalized names are non-empty")
        })
        .collect();
    Clustering { labels }
}

/// Single-linkage clustering at a fixed threshold: two distinct names join
/// when their distance is strictly below `threshold`, and clusters are the
/// connected components. Identical names always share a cluster.
pub fn cluster_with_threshold(
    items: &[String],
    table: &EmbeddingTable,
    threshold: f64,
    metric: Metric,
) -> Result<Clustering> {
    let d = distinct_vectors(items, table, metric)?;
    Ok(label_components(&d, threshold, metric))
}

/// Clusters by embedding distance (threshold from [`compute_threshold`] over
/// the distinct names) or by exact name, per `spec`. Returns the labels and
/// the threshold used (`None` for exact mode).
pub fn assign_embeddings(
    items: &[String],
    table: &EmbeddingTable,
    spec: &ClusterSpec,
) -> Result<(Clustering, Option<f64>)> {
    match spec.mode {
        ClusterMode::Exact => Ok((assign_exact(items), None)),
        ClusterMode::Embedding { q, knn, metric } => {
            let d = distinct_vectors(items, table, metric)?;
            let threshold = compute_threshold(&d.vectors, knn, q, metric)?;
            Ok((label_components(&d, threshold, metric), Some(threshold)))
        }
    }
}

pub fn cluster_embeddings(
    items: &[String],
    table: &EmbeddingTable,
    spec: &ClusterSpec,
) -> Result<ClusteredCounts> {
    Ok(assign_embeddings(items, table, spec)?.0.counts())
}
