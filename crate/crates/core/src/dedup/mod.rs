//! N-gram shingle deduplication.
//!
//! Every document is reduced to the hashes of its windows of `n` consecutive
//! lowercased basic tokens (a document shorter than `n` tokens yields one
//! shingle covering all of it). A corpus-wide [`ShingleIndex`] counts how
//! often each hash occurs; a document's duplication ratio is the fraction
//! of its shingles that occur at least twice.
//!
//! Hashes are 64 bits wide. Over 10^8 distinct shingles the probability
//! that any two of them collide is about 2.7e-4, and a collision can only
//! inflate a ratio, never deflate it.

mod index;

use std::fmt;
use std::io;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Document;

pub use index::{shingle_hashes, ShingleIndex, DEFAULT_SHINGLE_LEN, INDEX_MAGIC};

#[derive(Debug, Error)]
pub enum DedupError {
    #[error("shingle length must be at least 1")]
    InvalidShingleLen,
    #[error("document {0:?} has shingles missing from the index")]
    IndexMismatch(String),
    #[error("threshold must be a finite non-negative number, got {0}")]
    InvalidThreshold(f64),
    #[error("bad index file: {0}")]
    BadIndexFile(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Duplication level bucket.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum DupGroup {
    /// No duplicated shingle.
    #[serde(rename = "0%")]
    None,
    /// Ratio in (0, 0.10].
    #[serde(rename = "0-10%")]
    Low,
    /// Ratio in (0.10, 0.25).
    #[serde(rename = "10-25%")]
    Medium,
    /// Ratio in [0.25, 1].
    #[serde(rename = "25-100%")]
    High,
}

impl DupGroup {
    pub fn of_ratio(ratio: f64) -> DupGroup {
        if ratio <= 0.0 {
            DupGroup::None
        } else if ratio <= 0.10 {
            DupGroup::Low
        } else if ratio < 0.25 {
            DupGroup::Medium
        } else {
            DupGroup::High
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            DupGroup::None => "0%",
            DupGroup::Low => "0-10%",
            DupGroup::Medium => "10-25%",
            DupGroup::High => "25-100%",
        }
    }
}

impl fmt::Display for DupGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DupReport {
    pub doc_id: String,
    pub ratio: f64,
    pub group: DupGroup,
}

impl DupReport {
    pub fn new(doc_id: impl Into<String>, ratio: f64) -> Self {
        DupReport {
            doc_id: doc_id.into(),
            ratio,
            group: DupGroup::of_ratio(ratio),
        }
    }
}

/// How copies of duplicated text are treated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DedupMode {
    /// Score against the whole corpus; every copy of a duplicated text is
    /// scored alike and removed together.
    #[default]
    Symmetric,
    /// Score each document only against documents kept before it, so the
    /// first copy survives.
    KeepFirst,
}

pub fn build_shingle_index(docs: &[Document], n: usize) -> Result<ShingleIndex, DedupError> {
    ShingleIndex::build(docs.iter().map(|d| d.text.as_str()), n)
}

/// Fraction of `doc`'s shingles whose corpus count is at least 2. A document
/// without tokens has ratio 0.
pub fn duplication_ratio(doc: &Document, index: &ShingleIndex) -> Result<f64, DedupError> {
    let shingles = shingle_hashes(&doc.text, index.n());
    if shingles.is_empty() {
        return Ok(0.0);
    }
    let mut dup = 0usize;
    for h in &shingles {
        match index.count(*h) {
            0 => return Err(DedupError::IndexMismatch(doc.id.clone())),
            1 => {}
            _ => dup += 1,
        }
    }
    Ok(dup as f64 / shingles.len() as f64)
}

fn check_threshold(threshold: f64) -> Result<(), DedupError> {
    if threshold.is_finite() && threshold >= 0.0 {
        Ok(())
    } else {
        Err(DedupError::InvalidThreshold(threshold))
    }
}

/// Removes every document whose ratio is at or above `threshold` and
/// reports a ratio for every document. Kept documents stay in input order.
pub fn dedup_filter(
    docs: &[Document],
    index: &ShingleIndex,
    threshold: f64,
) -> Result<(Vec<Document>, Vec<DupReport>), DedupError> {
    check_threshold(threshold)?;
    let reports = docs
        .par_iter()
        .map(|d| duplication_ratio(d, index).map(|r| DupReport::new(d.id.clone(), r)))
        .collect::<Result<Vec<_>, _>>()?;
    let kept = docs
        .iter()
        .zip(&reports)
        .filter(|(_, r)| r.ratio < threshold)
        .map(|(d, _)| d.clone())
        .collect();
    Ok((kept, reports))
}

/// Sequential variant that keeps first occurrences: each document is scored
/// against the shingles of the documents kept before it, and a kept
/// document's shingles join that index.
pub fn dedup_filter_keep_first(
    docs: &[Document],
    n: usize,
    threshold: f64,
) -> Result<(Vec<Document>, Vec<DupReport>), DedupError> {
    check_threshold(threshold)?;
    let mut seen = ShingleIndex::new(n)?;
    let mut kept = Vec::new();
    let mut reports = Vec::with_capacity(docs.len());
    for doc in docs {
        let shingles = shingle_hashes(&doc.text, n);
        let ratio = if shingles.is_empty() {
            0.0
        } else {
            shingles.iter().filter(|h| seen.count(**h) > 0).count() as f64 / shingles.len() as f64
        };
        if ratio < threshold {
            seen.insert_all(&shingles);
            kept.push(doc.clone());
        }
        reports.push(DupReport::new(doc.id.clone(), ratio));
    }
    Ok((kept, reports))
}

/// Runs either mode.
pub fn dedup_documents(
    docs: &[Document],
    n: usize,
    threshold: f64,
    mode: DedupMode,
) -> Result<(Vec<Document>, Vec<DupReport>), DedupError> {
    match mode {
        DedupMode::Symmetric => {
            let index = build_shingle_index(docs, n)?;
            dedup_filter(docs, &index, threshold)
        }
        DedupMode::KeepFirst => dedup_filter_keep_first(docs, n, threshold),
    }
}
