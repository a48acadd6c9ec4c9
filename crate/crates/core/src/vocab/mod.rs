//! Subword vocabularies: basic tokenization, BPE training, WordPiece and
//! merge-based encoding, and coverage evaluation.
//!
//! Pieces follow the WordPiece convention: a piece that continues a word
//! carries the `##` prefix, a word-initial piece carries none. The five
//! special tokens always occupy ids 0 through 4.

mod basic;
mod bpe;
mod coverage;
mod wordpiece;

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::io::{self, BufRead, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use basic::{basic_tokenize, count_basic_tokens, is_punctuation, strip_accents_lower};
pub use bpe::{bpe_encode, train_bpe, BpeEncoder};
pub use coverage::{bpe_coverage_stats, coverage_stats, CoverageCounter, CoverageReport};
pub use wordpiece::{wordpiece_encode, MAX_WORD_CHARS};

pub const CONTINUATION_PREFIX: &str = "##";

pub const PAD: &str = "[PAD]";
pub const UNK: &str = "[UNK]";
pub const CLS: &str = "[CLS]";
pub const SEP: &str = "[SEP]";
pub const MASK: &str = "[MASK]";

pub const SPECIAL_TOKENS: [&str; 5] = [PAD, UNK, CLS, SEP, MASK];

pub const PAD_ID: u32 = 0;
pub const UNK_ID: u32 = 1;
pub const CLS_ID: u32 = 2;
pub const SEP_ID: u32 = 3;
pub const MASK_ID: u32 = 4;

#[derive(Debug, Error)]
pub enum VocabError {
    #[error("vocab_size {requested} is below the minimum of {minimum} (alphabet plus special tokens)")]
    VocabTooSmall { requested: usize, minimum: usize },
    #[error("duplicate piece {0:?}")]
    DuplicatePiece(String),
    #[error("special token {token} must be at id {expected}")]
    MisplacedSpecial { token: &'static str, expected: u32 },
    #[error("invalid piece {0:?}")]
    InvalidPiece(String),
    #[error("duplicate merge ({0}, {1})")]
    DuplicateMerge(String, String),
    #[error("line {line}: malformed merge {content:?}")]
    MalformedMerge { line: usize, content: String },
    #[error("no basic tokens in input")]
    NoTokens,
    #[error("unknown casing mode {0:?}")]
    UnknownCasing(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CasingMode {
    #[default]
    Cased,
    /// Lowercased with accents stripped.
    Uncased,
}

impl fmt::Display for CasingMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CasingMode::Cased => "cased",
            CasingMode::Uncased => "uncased",
        })
    }
}

impl FromStr for CasingMode {
    type Err = VocabError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "cased" => Ok(CasingMode::Cased),
            "uncased" => Ok(CasingMode::Uncased),
            other => Err(VocabError::UnknownCasing(other.to_string())),
        }
    }
}

/// `true` if `piece` continues a word (carries the `##` prefix).
pub fn is_continuation(piece: &str) -> bool {
    piece.starts_with(CONTINUATION_PREFIX) && piece.len() > CONTINUATION_PREFIX.len()
}

/// An ordered, dense subword inventory.
#[derive(Debug, Clone, PartialEq)]
pub struct Vocab {
    pieces: Vec<String>,
    ids: HashMap<String, u32>,
    casing: CasingMode,
}

impl Vocab {
    /// Builds a vocabulary from pieces that do not include the special
    /// tokens; the specials are prepended at ids 0 through 4.
    pub fn with_specials<I, S>(pieces: I, casing: CasingMode) -> Result<Self, VocabError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let all = SPECIAL_TOKENS
            .iter()
            .map(|s| s.to_string())
            .chain(pieces.into_iter().map(Into::into))
            .collect();
        Self::from_pieces(all, casing)
    }

    /// Builds a vocabulary from the complete piece list, where the index of a
    /// piece is its id.
    pub fn from_pieces(pieces: Vec<String>, casing: CasingMode) -> Result<Self, VocabError> {
        for (id, token) in SPECIAL_TOKENS.iter().enumerate() {
            if pieces.get(id).map(String::as_str) != Some(*token) {
                return Err(VocabError::MisplacedSpecial {
                    token,
                    expected: id as u32,
                });
            }
        }
        let mut ids = HashMap::with_capacity(pieces.len());
        for (id, piece) in pieces.iter().enumerate() {
            if id >= SPECIAL_TOKENS.len() {
                let body = piece.strip_prefix(CONTINUATION_PREFIX).unwrap_or(piece);
                if body.is_empty() || piece.chars().any(char::is_whitespace) {
                    return Err(VocabError::InvalidPiece(piece.clone()));
                }
            }
            if ids.insert(piece.clone(), id as u32).is_some() {
                return Err(VocabError::DuplicatePiece(piece.clone()));
            }
        }
        Ok(Vocab {
            pieces,
            ids,
            casing,
        })
    }

    /// Reads a `vocab.txt` file: one piece per line, line number is the id.
    pub fn read<R: BufRead>(reader: R, casing: CasingMode) -> Result<Self, VocabError> {
        let mut pieces = Vec::new();
        for line in reader.lines() {
            let line = line?;
            let piece = line.strip_suffix('\r').unwrap_or(&line);
            pieces.push(piece.to_string());
        }
        Self::from_pieces(pieces, casing)
    }

    pub fn write<W: Write>(&self, mut writer: W) -> io::Result<()> {
        for piece in &self.pieces {
            writeln!(writer, "{piece}")?;
        }
        writer.flush()
    }

    pub fn len(&self) -> usize {
        self.pieces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pieces.is_empty()
    }

    pub fn casing(&self) -> CasingMode {
        self.casing
    }

    pub fn id(&self, piece: &str) -> Option<u32> {
        self.ids.get(piece).copied()
    }

    pub fn piece(&self, id: u32) -> Option<&str> {
        self.pieces.get(id as usize).map(String::as_str)
    }

    pub fn contains(&self, piece: &str) -> bool {
        self.ids.contains_key(piece)
    }

    pub fn pieces(&self) -> &[String] {
        &self.pieces
    }

    pub fn is_special(id: u32) -> bool {
        (id as usize) < SPECIAL_TOKENS.len()
    }
}

/// Ordered BPE merges; application order is training order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct MergeTable {
    merges: Vec<(String, String)>,
}

impl MergeTable {
    pub fn new(merges: Vec<(String, String)>) -> Result<Self, VocabError> {
        let mut seen = HashSet::with_capacity(merges.len());
        for (left, right) in &merges {
            if !seen.insert((left.as_str(), right.as_str())) {
                return Err(VocabError::DuplicateMerge(left.clone(), right.clone()));
            }
        }
        Ok(MergeTable { merges })
    }

    pub fn len(&self) -> usize {
        self.merges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.merges.is_empty()
    }

    pub fn merges(&self) -> &[(String, String)] {
        &self.merges
    }

    /// The first `len` merges (or all of them, if fewer).
    pub fn prefix(&self, len: usize) -> MergeTable {
        MergeTable {
            merges: self.merges[..len.min(self.merges.len())].to_vec(),
        }
    }

    /// Reads `merges.txt`: one `left right` pair per line.
    pub fn read<R: BufRead>(reader: R) -> Result<Self, VocabError> {
        let mut merges = Vec::new();
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            let line = line.strip_suffix('\r').unwrap_or(&line);
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split(' ');
            match (parts.next(), parts.next(), parts.next()) {
                (Some(l), Some(r), None) if !l.is_empty() && !r.is_empty() => {
                    merges.push((l.to_string(), r.to_string()))
                }
                _ => {
                    return Err(VocabError::MalformedMerge {
                        line: idx + 1,
                        content: line.to_string(),
                    })
                }
            }
        }
        Self::new(merges)
    }

    pub fn write<W: Write>(&self, mut writer: W) -> io::Result<()> {
        for (left, right) in &self.merges {
            writeln!(writer, "{left} {right}")?;
        }
        writer.flush()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn specials_come_first() {
        let vocab = Vocab::with_specials(["a", "##b"], CasingMode::Cased).unwrap();
        assert_eq!(vocab.id(PAD), Some(PAD_ID));
        assert_eq!(vocab.id(UNK), Some(UNK_ID));
        assert_eq!(vocab.id(CLS), Some(CLS_ID));
        assert_eq!(vocab.id(SEP), Some(SEP_ID));
        assert_eq!(vocab.id(MASK), Some(MASK_ID));
        assert_eq!(vocab.id("##b"), Some(6));
        assert_eq!(vocab.len(), 7);
    }

    #[test]
    fn rejects_bad_pieces() {
        assert!(matches!(
            Vocab::with_specials(["a", "a"], CasingMode::Cased),
            Err(VocabError::DuplicatePiece(_))
        ));
        assert!(matches!(
            Vocab::with_specials(["##"], CasingMode::Cased),
            Err(VocabError::InvalidPiece(_))
        ));
        assert!(matches!(
            Vocab::with_specials([UNK], CasingMode::Cased),
            Err(VocabError::DuplicatePiece(_))
        ));
        assert!(matches!(
            Vocab::from_pieces(vec!["a".into()], CasingMode::Cased),
            Err(VocabError::MisplacedSpecial { .. })
        ));
    }

    #[test]
    fn vocab_file_round_trip() {
        let vocab = Vocab::with_specials(["ab", "##c", "ä"], CasingMode::Uncased).unwrap();
        let mut buf = Vec::new();
        vocab.write(&mut buf).unwrap();
        assert!(String::from_utf8_lossy(&buf).starts_with("[PAD]\n[UNK]\n"));
        let back = Vocab::read(&buf[..], CasingMode::Uncased).unwrap();
        assert_eq!(back, vocab);
    }

    #[test]
    fn merges_file() {
        let table = MergeTable::read("a ##b\nab ##c\n".as_bytes()).unwrap();
        assert_eq!(table.len(), 2);
        let mut buf = Vec::new();
        table.write(&mut buf).unwrap();
        assert_eq!(buf, b"a ##b\nab ##c\n");
        assert!(matches!(
            MergeTable::read("a ##b c\n".as_bytes()),
            Err(VocabError::MalformedMerge { line: 1, .. })
        ));
        assert!(matches!(
            MergeTable::read("a ##b\na ##b\n".as_bytes()),
            Err(VocabError::DuplicateMerge(..))
        ));
    }

    #[test]
    fn casing_parse() {
        assert_eq!("uncased".parse::<CasingMode>().unwrap(), CasingMode::Uncased);
        assert!("lower".parse::<CasingMode>().is_err());
    }
}
