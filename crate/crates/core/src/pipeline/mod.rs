//! Offline verification and clustering of raw response items.
//!
//! Responses are pre-split into item strings. Each item is normalized, checked
//! by a [`VerifierSpec`], and the survivors are grouped into clusters whose
//! representative becomes the [`ItemId`](crate::ItemId).

mod cluster;
mod dsu;
mod normalize;
mod verify;

use alloc::string::String;
use alloc::vec::Vec;

pub use cluster::{
    assign_embeddings, assign_exact, cluster_embeddings, cluster_exact, cluster_with_threshold,
    compute_threshold, distance, ClusterMode, ClusterSpec, Clustering, EmbeddingTable, Metric,
};
pub use dsu::DisjointSets;
pub use normalize::normalize_name;
pub use verify::{
    edit_distance, similarity, verify_items, Allowlist, KeywordPreset, RejectReason, Rejection,
    Verification, VerifierSpec, MATH_RELAXED, THEOREM_STRICT,
};

/// One model response, already split into item strings.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ResponseRecord {
    pub query_id: String,
    pub items: Vec<String>,
}
