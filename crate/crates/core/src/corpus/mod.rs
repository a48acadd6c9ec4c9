//! Document model, JSON-lines ingestion, sentence splitting, corpus
//! statistics and chronological dataset splitting.

mod sentences;
mod split;
mod stats;

use std::collections::BTreeMap;
use std::fmt;
use std::io::{self, BufRead, Write};
use std::str::FromStr;

use chrono::{DateTime, NaiveDate, NaiveDateTime};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

pub use sentences::{split_sentences, SentenceSplitter, FINNISH_ABBREVIATIONS};
pub use split::{balanced_chronological_split, DatasetSplit, SplitSpec};
pub use stats::{corpus_stats, CorpusStats, StatsReport};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("document {id:?}: {message}")]
    InvalidDocument { id: String, message: String },
    #[error("insufficient class {class:?}: need {needed} documents, found {found}")]
    InsufficientClass {
        class: String,
        needed: usize,
        found: usize,
    },
    #[error("invalid split spec: {0}")]
    InvalidSplitSpec(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Where a document came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Source {
    News,
    Discussion,
    Crawl,
    Other,
}

impl Source {
    pub const ALL: [Source; 4] = [Source::News, Source::Discussion, Source::Crawl, Source::Other];

    pub fn as_str(&self) -> &'static str {
        match self {
            Source::News => "news",
            Source::Discussion => "discussion",
            Source::Crawl => "crawl",
            Source::Other => "other",
        }
    }

    /// Maps unknown names to [`Source::Other`].
    pub fn from_name(name: &str) -> Source {
        match name {
            "news" => Source::News,
            "discussion" => Source::Discussion,
            "crawl" => Source::Crawl,
            _ => Source::Other,
        }
    }
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Source {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(Source::from_name(s))
    }
}

impl Serialize for Source {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for Source {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let name = std::borrow::Cow::<'de, str>::deserialize(deserializer)?;
        Ok(Source::from_name(&name))
    }
}

/// One corpus text. Serialized as a single JSON object per line.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    #[serde(default = "default_source")]
    pub source: Source,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub meta: BTreeMap<String, String>,
}

fn default_source() -> Source {
    Source::Other
}

impl Document {
    pub fn new(id: impl Into<String>, source: Source, text: impl Into<String>) -> Self {
        Document {
            id: id.into(),
            source,
            text: text.into(),
            timestamp: None,
            label: None,
            meta: BTreeMap::new(),
        }
    }

    pub fn with_timestamp(mut self, timestamp: impl Into<String>) -> Self {
        self.timestamp = Some(timestamp.into());
        self
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    /// Parses the timestamp. Accepts `YYYY-MM-DD`, `YYYY-MM-DDTHH:MM:SS` and
    /// RFC 3339 (normalized to UTC).
    pub fn parsed_timestamp(&self) -> Result<Option<NaiveDateTime>, CorpusError> {
        let Some(raw) = self.timestamp.as_deref() else {
            return Ok(None);
        };
        parse_timestamp(raw).map(Some).ok_or_else(|| CorpusError::InvalidDocument {
            id: self.id.clone(),
            message: format!("unparsable timestamp {raw:?}"),
        })
    }

    /// Canonical single-line JSON form, without the trailing newline.
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("documents always serialize")
    }
}

fn parse_timestamp(raw: &str) -> Option<NaiveDateTime> {
    if let Ok(date) = NaiveDate::parse_from_str(raw, "%Y-%m-%d") {
        return date.and_hms_opt(0, 0, 0);
    }
    if let Ok(dt) = DateTime::parse_from_rfc3339(raw) {
        return Some(dt.naive_utc());
    }
    NaiveDateTime::parse_from_str(raw, "%Y-%m-%dT%H:%M:%S").ok()
}

/// Lazily parses JSON-lines documents. Blank lines are skipped.
pub struct DocumentReader<R> {
    reader: R,
    line: usize,
    buf: String,
}

impl<R: BufRead> DocumentReader<R> {
    pub fn new(reader: R) -> Self {
        DocumentReader {
            reader,
            line: 0,
            buf: String::new(),
        }
    }
}

impl<R: BufRead> Iterator for DocumentReader<R> {
    type Item = Result<Document, CorpusError>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            self.buf.clear();
            match self.reader.read_line(&mut self.buf) {
                Ok(0) => return None,
                Ok(_) => {}
                Err(e) if e.kind() == io::ErrorKind::InvalidData => {
                    self.line += 1;
                    return Some(Err(CorpusError::Parse {
                        line: self.line,
                        message: "invalid UTF-8".into(),
                    }));
                }
                Err(e) => return Some(Err(e.into())),
            }
            self.line += 1;
            let line = self.buf.trim_end_matches(['\n', '\r']);
            if line.trim().is_empty() {
                continue;
            }
            let parsed = serde_json::from_str::<Document>(line)
                .map_err(|e| CorpusError::Parse {
                    line: self.line,
                    message: e.to_string(),
                })
                .and_then(|doc| {
                    if doc.id.is_empty() {
                        Err(CorpusError::Parse {
                            line: self.line,
                            message: "empty `id`".into(),
                        })
                    } else {
                        Ok(doc)
                    }
                });
            return Some(parsed);
        }
    }
}

pub fn read_documents<R: BufRead>(reader: R) -> DocumentReader<R> {
    DocumentReader::new(reader)
}

/// Writes documents in canonical JSON-lines form and returns the count.
pub fn write_documents<'a, W, I>(mut writer: W, docs: I) -> io::Result<usize>
where
    W: Write,
    I: IntoIterator<Item = &'a Document>,
{
    let mut n = 0;
    for doc in docs {
        writer.write_all(doc.to_json_line().as_bytes())?;
        writer.write_all(b"\n")?;
        n += 1;
    }
    writer.flush()?;
    Ok(n)
}
