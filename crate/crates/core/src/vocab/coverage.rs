use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{basic_tokenize, wordpiece_encode, BpeEncoder, MergeTable, Vocab, VocabError, UNK};

/// Average subword pieces and `[UNK]` pieces per basic token.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub tokens: u64,
    pub pieces: u64,
    pub unks: u64,
    pub pieces_per_token: f64,
    pub unk_per_token: f64,
}

/// Running totals for a coverage evaluation. An `[UNK]` counts as exactly
/// one piece.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CoverageCounter {
    pub tokens: u64,
    pub pieces: u64,
    pub unks: u64,
}

impl CoverageCounter {
    pub fn add_token<S: AsRef<str>>(&mut self, pieces: &[S]) {
        self.tokens += 1;
        self.pieces += pieces.len() as u64;
        self.unks += pieces.iter().filter(|p| p.as_ref() == UNK).count() as u64;
    }

    pub fn merge(&mut self, other: &CoverageCounter) {
        self.tokens += other.tokens;
        self.pieces += other.pieces;
        self.unks += other.unks;
    }

    pub fn report(&self) -> Result<CoverageReport, VocabError> {
        if self.tokens == 0 {
            return Err(VocabError::NoTokens);
        }
        let n = self.tokens as f64;
        Ok(CoverageReport {
            tokens: self.tokens,
            pieces: self.pieces,
            unks: self.unks,
            pieces_per_token: self.pieces as f64 / n,
            unk_per_token: self.unks as f64 / n,
        })
    }
}

/// WordPiece coverage of `vocab` over `texts`, tokenized in the vocabulary's
/// casing mode.
pub fn coverage_stats<'a, I>(texts: I, vocab: &Vocab) -> Result<CoverageReport, VocabError>
where
    I: IntoIterator<Item = &'a str>,
{
    let mut counter = CoverageCounter::default();
    let mut cache: HashMap<String, Vec<String>> = HashMap::new();
    for text in texts {
        for token in basic_tokenize(text, vocab.casing()) {
            let pieces = cache
                .entry(token)
                .or_insert_with_key(|t| wordpiece_encode(t, vocab));
            counter.add_token(pieces);
        }
    }
    counter.report()
}

/// Coverage when tokens are segmented by applying `merges` directly. A token
/// whose segmentation contains a piece outside `vocab` counts as one `[UNK]`.
pub fn bpe_coverage_stats<'a, I>(
    texts: I,
    merges: &MergeTable,
    vocab: &Vocab,
) -> Result<CoverageReport, VocabError>
where
    I: IntoIterator<Item = &'a str>,
{
    let encoder = BpeEncoder::new(merges);
    let unk = [UNK.to_string()];
    let mut counter = CoverageCounter::default();
    let mut cache: HashMap<String, Vec<String>> = HashMap::new();
    for text in texts {
        for token in basic_tokenize(text, vocab.casing()) {
            let pieces = cache.entry(token).or_insert_with_key(|t| {
                let pieces = encoder.encode(t);
                if pieces.iter().all(|p| vocab.contains(p)) {
                    pieces
                } else {
                    unk.to_vec()
                }
            });
            counter.add_token(pieces);
        }
    }
    counter.report()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vocab::CasingMode;

    #[test]
    fn all_known() {
        let v = Vocab::with_specials(["a", "b"], CasingMode::Cased).unwrap();
        let r = coverage_stats(["a b"], &v).unwrap();
        assert_eq!(r.pieces_per_token, 1.0);
        assert_eq!(r.unk_per_token, 0.0);
    }

    #[test]
    fn unk_counts_as_one_piece() {
        let v = Vocab::with_specials(["a"], CasingMode::Cased).unwrap();
        let r = coverage_stats(["a zzz"], &v).unwrap();
        assert_eq!(r.pieces_per_token, 1.0);
        assert_eq!(r.unk_per_token, 0.5);
    }

    #[test]
    fn multiple_pieces() {
        let v = Vocab::with_specials(["ab", "##c", "."], CasingMode::Cased).unwrap();
        let r = coverage_stats(["abc.", ""], &v).unwrap();
        assert_eq!((r.tokens, r.pieces, r.unks), (2, 3, 0));
        assert_eq!(r.pieces_per_token, 1.5);
    }

    #[test]
    fn no_tokens() {
        let v = Vocab::with_specials(["a"], CasingMode::Cased).unwrap();
        assert!(matches!(coverage_stats([" "], &v), Err(VocabError::NoTokens)));
    }

    #[test]
    fn bpe_coverage_marks_unknown_symbols() {
        let v = Vocab::with_specials(["a", "##b", "ab"], CasingMode::Cased).unwrap();
        let m = MergeTable::new(vec![("a".into(), "##b".into())]).unwrap();
        let r = bpe_coverage_stats(["ab abx"], &m, &v).unwrap();
        assert_eq!((r.tokens, r.pieces, r.unks), (2, 2, 1));
    }
}
