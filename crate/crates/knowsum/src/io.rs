//! Readers and writers for the on-disk formats.
//!
//! * counts CSV, schema A: header `item,count`, one row per distinct item;
//! * counts CSV, schema B: header `s,n_s`, one row per non-empty bucket;
//! * responses: line-delimited JSON `{"query_id": .., "items": [..]}`;
//! * allowlist: one entry per line;
//! * embeddings: CSV `item,v0,v1,..` or line-delimited JSON `{"item": .., "vector": [..]}`;
//! * sequence: one observed item per line, in observation order.
//!
//! `#`-prefixed lines are comments in every line-oriented format.

use std::fs;
use std::io::Read;
use std::path::Path;

use knowsum_core::pipeline::{Allowlist, EmbeddingTable, ResponseRecord};
use knowsum_core::validation::ObservationSequence;
use knowsum_core::{ClusteredCounts, ItemId, PrevalenceHistogram};
use serde::Deserialize;

use crate::error::{Error, Result};

/// Parsed counts file, in whichever schema it used.
#[derive(Debug, Clone, PartialEq)]
pub enum CountsFile {
    Items(ClusteredCounts),
    Histogram(PrevalenceHistogram),
}

impl CountsFile {
    pub fn histogram(&self) -> PrevalenceHistogram {
        match self {
            CountsFile::Items(c) => PrevalenceHistogram::from_counts(c),
            CountsFile::Histogram(h) => h.clone(),
        }
    }

    /// Observations in a canonical order. Histogram files expand to synthetic
    /// item names.
    pub fn sequence(&self) -> ObservationSequence {
        let counts = match self {
            CountsFile::Items(c) => c.to_occurrences(),
            CountsFile::Histogram(h) => h.to_synthetic_counts().to_occurrences(),
        };
        ObservationSequence::new(counts)
    }
}

pub fn read_to_string(path: &Path) -> Result<String> {
    let mut s = String::new();
    fs::File::open(path)
        .and_then(|mut f| f.read_to_string(&mut s))
        .map_err(|e| Error::io(path, e))?;
    Ok(s)
}

fn parse_err(path: &Path, line: u64, message: impl Into<String>) -> Error {
    Error::Parse { path: path.to_path_buf(), line, message: message.into() }
}

fn invalid(path: &Path, line: u64, message: impl Into<String>) -> Error {
    Error::Validation { path: path.to_path_buf(), line, message: message.into() }
}

fn positive(path: &Path, line: u64, field: &str, raw: &str) -> Result<u64> {
    let v: i128 = raw
        .parse()
        .map_err(|_| parse_err(path, line, format!("{field} {raw:?} is not an integer")))?;
    if v <= 0 {
        return Err(invalid(path, line, format!("{field} must be positive, got {v}")));
    }
    u64::try_from(v).map_err(|_| invalid(path, line, format!("{field} {v} is too large")))
}

/// Parses a counts CSV (either schema). `path` is used for messages only.
pub fn parse_counts(text: &str, path: &Path) -> Result<CountsFile> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes());
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| parse_err(path, 1, e.to_string()))?
        .iter()
        .map(str::to_owned)
        .collect();
    let schema_items = match header.iter().map(String::as_str).collect::<Vec<_>>().as_slice() {
        ["item", "count"] => true,
        ["s", "n_s"] => false,
        [] | [""] => return Err(parse_err(path, 1, "missing header")),
        other => {
            return Err(parse_err(
                path,
                1,
                format!("unknown header {other:?}, expected `item,count` or `s,n_s`"),
            ))
        }
    };

    let mut counts = ClusteredCounts::new();
    let mut buckets = std::collections::BTreeMap::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_err(path, line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != 2 {
            return Err(parse_err(path, line, format!("expected 2 fields, got {}", rec.len())));
        }
        if schema_items {
            let id = ItemId::new(&rec[0]).map_err(|_| invalid(path, line, "empty item name"))?;
            let c = positive(path, line, "count", &rec[1])?;
            counts.insert(id, c).map_err(|e| invalid(path, line, e.to_string()))?;
        } else {
            let s = positive(path, line, "s", &rec[0])?;
            let n_s = positive(path, line, "n_s", &rec[1])?;
            if buckets.insert(s, n_s).is_some() {
                return Err(invalid(path, line, format!("bucket s={s} listed more than once")));
            }
        }
    }
    if schema_items {
        Ok(CountsFile::Items(counts))
    } else {
        Ok(CountsFile::Histogram(PrevalenceHistogram::from_buckets(buckets)?))
    }
}

pub fn read_counts(path: &Path) -> Result<CountsFile> {
    parse_counts(&read_to_string(path)?, path)
}

/// Histogram of a counts file; the item-level schema goes through
/// [`PrevalenceHistogram::from_counts`].
pub fn histogram_from_counts_file(path: &Path) -> Result<PrevalenceHistogram> {
    Ok(read_counts(path)?.histogram())
}

/// Writes counts in schema A, items in id order.
pub fn counts_csv(counts: &ClusteredCounts) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::Config(format!("csv encoding: {e}"));
    w.write_record(["item", "count"]).map_err(csv_err)?;
    for (id, c) in counts.iter() {
        w.write_record([id.as_str(), &c.to_string()]).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Config(format!("csv encoding: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv writer emits utf-8 from utf-8 input"))
}

pub fn write_counts(path: &Path, counts: &ClusteredCounts) -> Result<()> {
    fs::write(path, counts_csv(counts)?).map_err(|e| Error::io(path, e))
}

/// Non-blank, non-comment lines with their 1-based line numbers.
fn content_lines(text: &str) -> impl Iterator<Item = (u64, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i as u64 + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

pub fn parse_responses(text: &str, path: &Path) -> Result<Vec<ResponseRecord>> {
    content_lines(text)
        .map(|(line, l)| {
            serde_json::from_str::<ResponseRecord>(l)
                .map_err(|e| parse_err(path, line, format!("bad response record: {e}")))
        })
        .collect()
}

pub fn read_responses(path: &Path) -> Result<Vec<ResponseRecord>> {
    parse_responses(&read_to_string(path)?, path)
}

pub fn parse_allowlist(text: &str) -> Allowlist {
    Allowlist::from_entries(content_lines(text).map(|(_, l)| l))
}

pub fn read_allowlist(path: &Path) -> Result<Allowlist> {
    Ok(parse_allowlist(&read_to_string(path)?))
}

pub fn parse_sequence(text: &str) -> ObservationSequence {
    ObservationSequence::new(
        content_lines(text)
            .map(|(_, l)| ItemId::new(l).expect("content lines are non-empty"))
            .collect(),
    )
}

pub fn read_sequence(path: &Path) -> Result<ObservationSequence> {
    Ok(parse_sequence(&read_to_string(path)?))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct EmbeddingRow {
    item: String,
    vector: Vec<f64>,
}

pub fn parse_embeddings(text: &str, path: &Path) -> Result<EmbeddingTable> {
    let mut table = EmbeddingTable::new();
    let json = content_lines(text).next().is_some_and(|(_, l)| l.starts_with('{'));
    if json {
        for (line, l) in content_lines(text) {
            let row: EmbeddingRow = serde_json::from_str(l)
                .map_err(|e| parse_err(path, line, format!("bad embedding record: {e}")))?;
            table.insert(&row.item, row.vector).map_err(|e| invalid(path, line, e.to_string()))?;
        }
        return Ok(table);
    }

    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header = rdr.headers().map_err(|e| parse_err(path, 1, e.to_string()))?.clone();
    let well_formed = header.len() >= 2
        && &header[0] == "item"
        && header.iter().skip(1).enumerate().all(|(i, h)| h == format!("v{i}"));
    if !well_formed {
        return Err(parse_err(path, 1, "expected header `item,v0,v1,...`"));
    }
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            parse_err(path, e.position().map_or(0, |p| p.line()), e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        let vector = rec
            .iter()
            .skip(1)
            .map(|x| x.parse::<f64>().map_err(|_| parse_err(path, line, format!("bad number {x:?}"))))
            .collect::<Result<Vec<_>>>()?;
        table.insert(&rec[0], vector).map_err(|e| invalid(path, line, e.to_string()))?;
    }
    Ok(table)
}

pub fn read_embeddings(path: &Path) -> Result<EmbeddingTable> {
    parse_embeddings(&read_to_string(path)?, path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p() -> &'static Path {
        Path::new("test.csv")
    }

    fn hist(pairs: &[(u64, u64)]) -> PrevalenceHistogram {
        PrevalenceHistogram::from_buckets(pairs.iter().copied()).unwrap()
    }

    #[test]
    fn counts_item_schema() {
        let c = parse_counts("item,count\na,2\nb,1\nc,1\n", p()).unwrap();
        assert_eq!(c.histogram(), hist(&[(1, 2), (2, 1)]));
        assert_eq!(c.sequence().len(), 4);
    }

    #[test]
    fn counts_histogram_schema() {
        let c = parse_counts("# exported\ns,n_s\n1,2\n2,1\n", p()).unwrap();
        assert_eq!(c, CountsFile::Histogram(hist(&[(1, 2), (2, 1)])));
        assert_eq!(c.sequence().len(), 4);
    }

    #[test]
    fn zero_count_names_line() {
        match parse_counts("item,count\na,0", p()) {
            Err(Error::Validation { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        match parse_counts("item,count\n# note\na,1\nb,-4\n", p()) {
            Err(Error::Validation { line, .. }) => assert_eq!(line, 4),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn malformed_rows() {
        match parse_counts("item,count\na,1\nb,x\n", p()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(parse_counts("item,count\na,1,2\n", p()), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(parse_counts("foo,bar\n", p()), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse_counts("s,n_s\n1,1\n1,2\n", p()), Err(Error::Validation { line: 3, .. })));
        assert!(matches!(parse_counts("item,count\na,1\na,2\n", p()), Err(Error::Validation { line: 3, .. })));
    }

    #[test]
    fn counts_csv_round_trip() {
        let c = parse_counts("item,count\n\"x, y\",3\nplain,1\n", p()).unwrap();
        let CountsFile::Items(items) = &c else { panic!() };
        let text = counts_csv(items).unwrap();
        assert_eq!(text, "item,count\nplain,1\n\"x, y\",3\n");
        assert_eq!(parse_counts(&text, p()).unwrap(), c);
    }

    #[test]
    fn responses() {
        let text = "{\"query_id\":\"q1\",\"items\":[\"a\",\"b\"]}\n\n{\"query_id\":\"q2\",\"items\":[]}\n";
        let r = parse_responses(text, p()).unwrap();
        assert_eq!(r.len(), 2);
        assert_eq!(r[0].items, vec!["a", "b"]);
        assert!(parse_responses("", p()).unwrap().is_empty());
        match parse_responses("{\"query_id\":\"q1\",\"items\":[]}\n{\"query_id\":\"q2\"}\n", p()) {
            Err(Error::Parse { line, message, .. }) => {
                assert_eq!(line, 2);
                assert!(message.contains("items"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn allowlist_and_sequence() {
        let a = parse_allowlist("# header\nBayes_Theorem\n\n  green's theorem \n");
        assert_eq!(a.len(), 2);
        assert!(a.contains("bayes theorem"));
        let s = parse_sequence("A\nA\n# skip\nB\n");
        assert_eq!(s.len(), 3);
    }

    #[test]
    fn embeddings_both_formats() {
        let csv = parse_embeddings("item,v0,v1\na,1,2\nB,3,4\n", p()).unwrap();
        assert_eq!(csv.get("b"), Some(&[3.0, 4.0][..]));
        let json = parse_embeddings("{\"item\":\"a\",\"vector\":[1,2]}\n{\"item\":\"B\",\"vector\":[3,4]}\n", p()).unwrap();
        assert_eq!(csv, json);
        assert!(parse_embeddings("item,x,y\na,1,2\n", p()).is_err());
        assert!(matches!(parse_embeddings("item,v0\na,1\nb,zz\n", p()), Err(Error::Parse { line: 3, .. })));
        assert!(matches!(parse_embeddings("item,v0,v1\na,1,2\nb,1\n", p()), Err(Error::Parse { .. })));
    }
}
