use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use super::normalize::normalize_name;
use super::ResponseRecord;
use crate::error::{Error, Result};

/// Strict criterion: the name must say "theorem".
pub const THEOREM_STRICT: &[&str] = &["theorem"];

/// Relaxed criterion: any of twelve mathematical result terms.
pub const MATH_RELAXED: &[&str] = &[
    "theorem",
    "lemma",
    "law",
    "principle",
    "formula",
    "criterion",
    "identity",
    "conjecture",
    "rule",
    "equation",
    "postulate",
    "corollary",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum KeywordPreset {
    TheoremStrict,
    MathRelaxed,
}

impl KeywordPreset {
    pub fn keywords(self) -> &'static [&'static str] {
        match self {
            KeywordPreset::TheoremStrict => THEOREM_STRICT,
            KeywordPreset::MathRelaxed => MATH_RELAXED,
        }
    }
}

/// Set of accepted names, stored normalized.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Allowlist {
    entries: BTreeSet<String>,
    /// Entries bucketed by char length for fuzzy lookups.
    by_len: BTreeMap<usize, Vec<Vec<char>>>,
}

impl Allowlist {
    /// Builds from raw entries; entries that normalize to nothing are skipped.
    pub fn from_entries<'a, I: IntoIterator<Item = &'a str>>(entries: I) -> Self {
        let mut out = Allowlist::default();
        for e in entries {
            if let Some(n) = normalize_name(e) {
                if out.entries.insert(n.clone()) {
                    let chars: Vec<char> = n.chars().collect();
                    out.by_len.entry(chars.len()).or_default().push(chars);
                }
            }
        }
        out
    }

    pub fn contains(&self, normalized: &str) -> bool {
        self.entries.contains(normalized)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Best similarity to any entry, considering only entries that could reach
    /// `threshold` given their length difference.
    fn best_similarity(&self, item: &str, threshold: f64) -> f64 {
        let chars: Vec<char> = item.chars().collect();
        let len = chars.len();
        let mut best = 0.0f64;
        for (&elen, group) in &self.by_len {
            let max_len = len.max(elen) as f64;
            let diff = len.abs_diff(elen) as f64;
            // edit distance is at least the length difference
            if 1.0 - diff / max_len < threshold {
                continue;
            }
            for entry in group {
                best = best.max(1.0 - levenshtein(&chars, entry) as f64 / max_len);
                if best >= 1.0 {
                    return best;
                }
            }
        }
        best
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum VerifierSpec {
    /// Every non-empty item is valid.
    AcceptAll,
    /// Exact membership after normalization.
    Allowlist(Allowlist),
    /// Normalized item contains any keyword as a substring.
    Keyword(Vec<String>),
    /// Normalized edit similarity to some entry is at least `threshold`.
    FuzzyAllowlist { allowlist: Allowlist, threshold: f64 },
}

impl VerifierSpec {
    pub fn keywords(preset: KeywordPreset) -> Self {
        VerifierSpec::Keyword(preset.keywords().iter().map(|s| String::from(*s)).collect())
    }

    pub fn fuzzy(allowlist: Allowlist) -> Self {
        VerifierSpec::FuzzyAllowlist { allowlist, threshold: 0.9 }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            VerifierSpec::Keyword(kw) => {
                if kw.iter().all(|k| normalize_name(k).is_none()) {
                    return Err(Error::InvalidConfig("keyword verifier needs at least one keyword".into()));
                }
            }
            VerifierSpec::FuzzyAllowlist { threshold, .. } => {
                if !(*threshold > 0.0 && *threshold <= 1.0) {
                    return Err(Error::InvalidConfig(format!(
                        "similarity threshold must be in (0, 1], got {threshold}"
                    )));
                }
            }
            VerifierSpec::AcceptAll | VerifierSpec::Allowlist(_) => {}
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum RejectReason {
    NoKeyword,
    NotInAllowlist,
    BelowSimilarity,
    EmptyAfterNormalize,
}

impl RejectReason {
    pub fn as_str(self) -> &'static str {
        match self {
            RejectReason::NoKeyword => "no_keyword",
            RejectReason::NotInAllowlist => "not_in_allowlist",
            RejectReason::BelowSimilarity => "below_similarity",
            RejectReason::EmptyAfterNormalize => "empty_after_normalize",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct Rejection {
    pub query_id: String,
    /// The raw item as it appeared in the response.
    pub item: String,
    pub reason: RejectReason,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Verification {
    /// Normalized valid items, in input order.
    pub valid: Vec<String>,
    pub rejected: Vec<Rejection>,
}

impl Verification {
    pub fn total(&self) -> usize {
        self.valid.len() + self.rejected.len()
    }

    /// Rejection counts per reason.
    pub fn tallies(&self) -> BTreeMap<RejectReason, usize> {
        let mut out = BTreeMap::new();
        for r in &self.rejected {
            *out.entry(r.reason).or_insert(0) += 1;
        }
        out
    }
}

fn check(item: &str, spec: &VerifierSpec, keywords: &[String]) -> Option<RejectReason> {
    match spec {
        VerifierSpec::AcceptAll => None,
        VerifierSpec::Allowlist(list) => (!list.contains(item)).then_some(RejectReason::NotInAllowlist),
        VerifierSpec::Keyword(_) => {
            (!keywords.iter().any(|k| item.contains(k.as_str()))).then_some(RejectReason::NoKeyword)
        }
        VerifierSpec::FuzzyAllowlist { allowlist, threshold } => {
            if allowlist.contains(item) {
                return None;
            }
            (allowlist.best_similarity(item, *threshold) < *threshold)
                .then_some(RejectReason::BelowSimilarity)
        }
    }
}

/// Partitions every item of every record into valid (normalized) and rejected.
pub fn verify_items(records: &[ResponseRecord], spec: &VerifierSpec) -> Result<Verification> {
    spec.validate()?;
    let keywords: Vec<String> = match spec {
        VerifierSpec::Keyword(kw) => kw.iter().filter_map(|k| normalize_name(k)).collect(),
        _ => Vec::new(),
    };
    let mut out = Verification::default();
    for rec in records {
        for raw in &rec.items {
            let reason = match normalize_name(raw) {
                None => Some(RejectReason::EmptyAfterNormalize),
                Some(item) => match check(&item, spec, &keywords) {
                    None => {
                        out.valid.push(item);
                        continue;
                    }
                    r => r,
                },
            };
            if let Some(reason) = reason {
                out.rejected.push(Rejection { query_id: rec.query_id.clone(), item: raw.clone(), reason });
            }
        }
    }
    Ok(out)
}

fn levenshtein(a: &[char], b: &[char]) -> usize {
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = alloc::vec![0; b.len() + 1];
    for (i, ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ca != cb);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        core::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Levenshtein distance over Unicode scalar values.
pub fn edit_distance(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    levenshtein(&a, &b)
}

/// `1 - edit_distance / max(len_a, len_b)`, 1 for two empty strings.
pub fn similarity(a: &str, b: &str) -> f64 {
    let max_len = a.chars().count().max(b.chars().count());
    if max_len == 0 {
        return 1.0;
    }
    1.0 - edit_distance(a, b) as f64 / max_len as f64
}
