//! Masked language model and next sentence prediction example generation
//! with whole-word masking.
//!
//! Instance packing follows the reference BERT data tool: segment A takes a
//! random number of leading sentences from a chunk filled up to a target
//! length, segment B is either the rest of the chunk or a run of sentences
//! from another document, and the pair is truncated to fit.

mod instances;
mod mask;

use std::collections::BTreeMap;
use std::io::{self, BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Document, SentenceSplitter, Source};
use crate::vocab::{basic_tokenize, wordpiece_encode, Vocab, CLS_ID, SEP_ID, UNK_ID};

pub use instances::{create_instances, suggested_dup_factors, GenOutput, GenStats, SourceGenStats};
pub use mask::{apply_whole_word_mask, word_spans, MaskBranch, MaskOutcome};

#[derive(Debug, Error)]
pub enum PregenError {
    #[error("invalid generation config: {0}")]
    InvalidConfig(String),
    #[error("no candidate words to mask")]
    EmptyCandidates,
    #[error("no word fits within {max_predictions} predictions")]
    NoMaskableWord { max_predictions: usize },
    #[error("write failed after {written} examples: {source}")]
    Write { written: usize, source: io::Error },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid example: {0}")]
    InvalidExample(String),
}

/// Generation parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenConfig {
    pub max_seq_len: usize,
    pub max_predictions: usize,
    pub mask_prob: f64,
    pub random_next_prob: f64,
    pub mask_token_prob: f64,
    pub random_replace_prob: f64,
    pub keep_prob: f64,
    /// Probability of packing toward a shorter random target length.
    pub short_seq_prob: f64,
    /// Passes over each source's documents; missing sources get one pass.
    pub dup_factors: BTreeMap<Source, usize>,
    pub seed: u64,
}

/// Largest supported duplication factor; passes share the RNG stream id
/// space with document indices.
pub const MAX_DUP_FACTOR: usize = (1 << 24) - 1;

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig::for_seq_len(128)
    }
}

impl GenConfig {
    /// Defaults for a sequence length; 128 and 512 get 20 and 77 maximum
    /// predictions, other lengths `round(0.15 * len)`.
    pub fn for_seq_len(max_seq_len: usize) -> Self {
        let max_predictions = match max_seq_len {
            128 => 20,
            512 => 77,
            n => ((n as f64) * 0.15).round().max(1.0) as usize,
        };
        GenConfig {
            max_seq_len,
            max_predictions,
            mask_prob: 0.15,
            random_next_prob: 0.5,
            mask_token_prob: 0.8,
            random_replace_prob: 0.1,
            keep_prob: 0.1,
            short_seq_prob: 0.1,
            dup_factors: BTreeMap::new(),
            seed: 12345,
        }
    }

    pub fn dup_factor(&self, source: Source) -> usize {
        self.dup_factors.get(&source).copied().unwrap_or(1)
    }

    pub fn validate(&self) -> Result<(), PregenError> {
        let bad = |m: String| Err(PregenError::InvalidConfig(m));
        if self.max_seq_len < 5 {
            return bad(format!("max_seq_len must be at least 5, got {}", self.max_seq_len));
        }
        if self.max_predictions == 0 || self.max_predictions > self.max_seq_len {
            return bad(format!(
                "max_predictions must be in [1, {}], got {}",
                self.max_seq_len, self.max_predictions
            ));
        }
        if !(self.mask_prob > 0.0 && self.mask_prob < 1.0) {
            return bad(format!("mask_prob must be in (0, 1), got {}", self.mask_prob));
        }
        for (name, p) in [
            ("random_next_prob", self.random_next_prob),
            ("mask_token_prob", self.mask_token_prob),
            ("random_replace_prob", self.random_replace_prob),
            ("keep_prob", self.keep_prob),
            ("short_seq_prob", self.short_seq_prob),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("{name} must be in [0, 1], got {p}"));
            }
        }
        let sum = self.mask_token_prob + self.random_replace_prob + self.keep_prob;
        if (sum - 1.0).abs() > 1e-9 {
            return bad(format!("branch probabilities sum to {sum}, expected 1"));
        }
        for (source, &f) in &self.dup_factors {
            if f > MAX_DUP_FACTOR {
                return bad(format!("dup factor for {source} exceeds {MAX_DUP_FACTOR}"));
            }
        }
        Ok(())
    }
}

/// A document as per-sentence piece id lists.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PieceDocument {
    pub source: Source,
    pub sentences: Vec<Vec<u32>>,
}

impl PieceDocument {
    /// Splits `doc` into sentences and WordPiece-encodes each one. Sentences
    /// without pieces are dropped.
    pub fn encode(doc: &Document, vocab: &Vocab, splitter: &SentenceSplitter) -> Self {
        let sentences = splitter
            .split(&doc.text)
            .into_iter()
            .map(|s| {
                basic_tokenize(s, vocab.casing())
                    .iter()
                    .flat_map(|t| wordpiece_encode(t, vocab))
                    .map(|p| vocab.id(&p).unwrap_or(UNK_ID))
                    .collect::<Vec<u32>>()
            })
            .filter(|s| !s.is_empty())
            .collect();
        PieceDocument {
            source: doc.source,
            sentences,
        }
    }

    pub fn num_pieces(&self) -> usize {
        self.sentences.iter().map(Vec::len).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PretrainExample {
    pub pieces: Vec<u32>,
    pub segment_ids: Vec<u8>,
    pub masked_positions: Vec<usize>,
    pub masked_labels: Vec<u32>,
    pub is_next: bool,
}

impl PretrainExample {
    /// Checks the structural invariants against `max_seq_len` and
    /// `max_predictions`.
    pub fn validate(&self, max_seq_len: usize, max_predictions: usize) -> Result<(), PregenError> {
        let bad = |m: &str| Err(PregenError::InvalidExample(m.to_string()));
        let n = self.pieces.len();
        if n > max_seq_len {
            return bad("longer than max_seq_len");
        }
        if self.segment_ids.len() != n {
            return bad("segment_ids length differs from pieces");
        }
        if self.pieces.first() != Some(&CLS_ID) || self.pieces.last() != Some(&SEP_ID) {
            return bad("must start with [CLS] and end with [SEP]");
        }
        let seps: Vec<usize> = (0..n).filter(|&i| self.pieces[i] == SEP_ID).collect();
        if seps.len() != 2 || seps[0] < 2 || seps[1] < seps[0] + 2 {
            return bad("expected two non-empty segments");
        }
        for (i, &s) in self.segment_ids.iter().enumerate() {
            let want = u8::from(i > seps[0]);
            if s != want {
                return bad("segment_ids inconsistent with [SEP] placement");
            }
        }
        let m = self.masked_positions.len();
        if m == 0 || m > max_predictions {
            return bad("masked position count out of range");
        }
        if self.masked_labels.len() != m {
            return bad("masked_labels length differs from masked_positions");
        }
        if self.masked_positions.windows(2).any(|w| w[0] >= w[1]) {
            return bad("masked_positions not strictly increasing");
        }
        if self
            .masked_positions
            .iter()
            .any(|&p| p == 0 || p >= n || seps.contains(&p))
        {
            return bad("masked position points at a special slot");
        }
        Ok(())
    }

    /// Pieces with masked positions restored to their labels.
    pub fn original_pieces(&self) -> Vec<u32> {
        let mut out = self.pieces.clone();
        for (&p, &l) in self.masked_positions.iter().zip(&self.masked_labels) {
            out[p] = l;
        }
        out
    }
}

/// Writes one JSON object per line and returns the number written.
pub fn serialize_examples<'a, W, I>(mut sink: W, examples: I) -> Result<usize, PregenError>
where
    W: Write,
    I: IntoIterator<Item = &'a PretrainExample>,
{
    let mut written = 0;
    for ex in examples {
        let mut line = serde_json::to_string(ex).expect("examples always serialize");
        line.push('\n');
        if let Err(source) = sink.write_all(line.as_bytes()) {
            return Err(PregenError::Write { written, source });
        }
        written += 1;
    }
    sink.flush().map_err(|source| PregenError::Write { written, source })?;
    Ok(written)
}

pub fn read_examples<R: BufRead>(reader: R) -> Result<Vec<PretrainExample>, PregenError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| PregenError::Parse {
            line: i + 1,
            message: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| PregenError::Parse {
            line: i + 1,
            message: e.to_string(),
        })?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example() -> PretrainExample {
        PretrainExample {
            pieces: vec![CLS_ID, 7, 4, SEP_ID, 9, SEP_ID],
            segment_ids: vec![0, 0, 0, 0, 1, 1],
            masked_positions: vec![2],
            masked_labels: vec![8],
            is_next: true,
        }
    }

    #[test]
    fn presets() {
        assert_eq!(GenConfig::for_seq_len(128).max_predictions, 20);
        assert_eq!(GenConfig::for_seq_len(512).max_predictions, 77);
        assert!(GenConfig::default().validate().is_ok());
    }

    #[test]
    fn config_validation() {
        for c in [
            GenConfig { keep_prob: 0.2, ..GenConfig::default() },
            GenConfig { max_predictions: 200, ..GenConfig::default() },
            GenConfig { mask_prob: 0.0, ..GenConfig::default() },
        ] {
            assert!(c.validate().is_err());
        }
    }

    #[test]
    fn example_validation() {
        let ex = example();
        assert!(ex.validate(128, 20).is_ok());
        assert_eq!(ex.original_pieces(), vec![CLS_ID, 7, 8, SEP_ID, 9, SEP_ID]);
        let mut bad = ex.clone();
        bad.masked_positions = vec![3];
        assert!(bad.validate(128, 20).is_err());
        let mut bad = ex.clone();
        bad.segment_ids[3] = 1;
        assert!(bad.validate(128, 20).is_err());
        assert!(ex.validate(5, 20).is_err());
    }

    #[test]
    fn serialize_round_trip() {
        let mut buf = Vec::new();
        assert_eq!(serialize_examples(&mut buf, []).unwrap(), 0);
        assert!(buf.is_empty());
        let ex = example();
        assert_eq!(serialize_examples(&mut buf, [&ex]).unwrap(), 1);
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(
            text,
            "{\"pieces\":[2,7,4,3,9,3],\"segment_ids\":[0,0,0,0,1,1],\
             \"masked_positions\":[2],\"masked_labels\":[8],\"is_next\":true}\n"
        );
        assert_eq!(read_examples(&buf[..]).unwrap(), vec![ex]);
    }

    struct FailAfter(usize);

    impl Write for FailAfter {
        fn write(&mut self, buf: &[u8]) -> io::Result<usize> {
            if self.0 == 0 {
                return Err(io::Error::other("full"));
            }
            self.0 -= 1;
            Ok(buf.len())
        }
        fn flush(&mut self) -> io::Result<()> {
            Ok(())
        }
    }

    #[test]
    fn write_failure_reports_partial_count() {
        let ex = example();
        let err = serialize_examples(FailAfter(1), [&ex, &ex]).unwrap_err();
        assert!(matches!(err, PregenError::Write { written: 1, .. }));
    }
}
