//! Byte-pair-encoding vocabulary training over WordPiece-style symbols.
//!
//! Training starts from code points, where every non-initial code point of a
//! word carries the `##` prefix, and repeatedly merges the most frequent
//! adjacent symbol pair. Pair frequency counts overlapping occurrences
//! weighted by word count; merges are applied left to right without overlap.
//! Equal counts are resolved by the lexicographically smallest
//! `(left, right)` pair.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap, HashSet};
use std::rc::Rc;

use super::{CasingMode, MergeTable, Vocab, VocabError, CONTINUATION_PREFIX, SPECIAL_TOKENS};

/// Splits `token` into its initial symbols: the first code point as is, every
/// following code point prefixed with `##`.
pub(crate) fn initial_symbols(token: &str) -> Vec<String> {
    token
        .chars()
        .enumerate()
        .map(|(i, c)| {
            if i == 0 {
                c.to_string()
            } else {
                format!("{CONTINUATION_PREFIX}{c}")
            }
        })
        .collect()
}

pub(crate) fn merged_symbol(left: &str, right: &str) -> String {
    let body = right.strip_prefix(CONTINUATION_PREFIX).unwrap_or(right);
    let mut merged = String::with_capacity(left.len() + body.len());
    merged.push_str(left);
    merged.push_str(body);
    merged
}

type Pair = (u32, u32);

struct Candidate {
    count: i64,
    pair: Pair,
    left: Rc<str>,
    right: Rc<str>,
}

impl PartialEq for Candidate {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Candidate {}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Candidate {
    // Max-heap order: higher count first, then the lexicographically smaller pair.
    fn cmp(&self, other: &Self) -> Ordering {
        self.count
            .cmp(&other.count)
            .then_with(|| other.left.cmp(&self.left))
            .then_with(|| other.right.cmp(&self.right))
    }
}

struct Symbols {
    names: Vec<Rc<str>>,
    ids: HashMap<Rc<str>, u32>,
}

impl Symbols {
    fn intern(&mut self, name: &str) -> u32 {
        if let Some(&id) = self.ids.get(name) {
            return id;
        }
        let id = self.names.len() as u32;
        let name: Rc<str> = Rc::from(name);
        self.names.push(name.clone());
        self.ids.insert(name, id);
        id
    }
}

fn merge_word(word: &[u32], pair: Pair, merged: u32) -> Vec<u32> {
    let mut out = Vec::with_capacity(word.len());
    let mut i = 0;
    while i < word.len() {
        if i + 1 < word.len() && word[i] == pair.0 && word[i + 1] == pair.1 {
            out.push(merged);
            i += 2;
        } else {
            out.push(word[i]);
            i += 1;
        }
    }
    out
}

/// Trains a BPE vocabulary of at most `vocab_size` pieces (specials
/// included) from basic-token counts.
///
/// The token counts are expected to already be basic-tokenized in `mode`;
/// `mode` is recorded on the resulting [`Vocab`]. Training stops when the
/// vocabulary is full or no pair occurs at least twice. A merge whose result
/// is already a piece is recorded in the table without growing the
/// vocabulary. A pair that was merged once is never selected again, even if
/// a later merge recreates the adjacency.
pub fn train_bpe(
    token_counts: &HashMap<String, u64>,
    vocab_size: usize,
    mode: CasingMode,
) -> Result<(Vocab, MergeTable), VocabError> {
    let mut tokens: Vec<(&str, u64)> = token_counts
        .iter()
        .filter(|(t, &c)| !t.is_empty() && c > 0)
        .map(|(t, &c)| (t.as_str(), c))
        .collect();
    tokens.sort_unstable();

    let mut alphabet: Vec<String> = tokens
        .iter()
        .flat_map(|(t, _)| initial_symbols(t))
        .collect::<HashSet<_>>()
        .into_iter()
        .collect();
    alphabet.sort_unstable();

    let minimum = alphabet.len() + SPECIAL_TOKENS.len();
    if vocab_size < minimum {
        return Err(VocabError::VocabTooSmall {
            requested: vocab_size,
            minimum,
        });
    }

    let mut symbols = Symbols {
        names: Vec::new(),
        ids: HashMap::new(),
    };
    for s in &alphabet {
        symbols.intern(s);
    }
    let mut pieces: Vec<String> = SPECIAL_TOKENS.iter().map(|s| s.to_string()).collect();
    pieces.extend(alphabet.iter().cloned());
    let mut in_vocab: HashSet<String> = pieces.iter().cloned().collect();

    let mut words: Vec<(Vec<u32>, i64)> = tokens
        .iter()
        .map(|(t, c)| {
            let syms = initial_symbols(t).iter().map(|s| symbols.intern(s)).collect();
            (syms, *c as i64)
        })
        .collect();

    let mut pair_counts: HashMap<Pair, i64> = HashMap::new();
    let mut occurrences: HashMap<Pair, Vec<usize>> = HashMap::new();
    for (idx, (word, count)) in words.iter().enumerate() {
        for w in word.windows(2) {
            let pair = (w[0], w[1]);
            *pair_counts.entry(pair).or_default() += count;
            let occ = occurrences.entry(pair).or_default();
            if occ.last() != Some(&idx) {
                occ.push(idx);
            }
        }
    }

    let candidate = |symbols: &Symbols, pair: Pair, count: i64| Candidate {
        count,
        pair,
        left: symbols.names[pair.0 as usize].clone(),
        right: symbols.names[pair.1 as usize].clone(),
    };
    let mut heap: BinaryHeap<Candidate> = pair_counts
        .iter()
        .map(|(&pair, &count)| candidate(&symbols, pair, count))
        .collect();

    let mut merges = Vec::new();
    let mut merged_pairs: HashSet<Pair> = HashSet::new();
    while pieces.len() < vocab_size {
        let Some(best) = heap.pop() else { break };
        if merged_pairs.contains(&best.pair)
            || pair_counts.get(&best.pair).copied().unwrap_or(0) != best.count
        {
            continue;
        }
        if best.count < 2 {
            break;
        }

        let new_name = merged_symbol(&best.left, &best.right);
        let new_id = symbols.intern(&new_name);
        if in_vocab.insert(new_name.clone()) {
            pieces.push(new_name);
        }
        merges.push((best.left.to_string(), best.right.to_string()));
        merged_pairs.insert(best.pair);

        let mut touched: HashMap<Pair, i64> = HashMap::new();
        let mut affected = occurrences.remove(&best.pair).unwrap_or_default();
        affected.sort_unstable();
        affected.dedup();
        for idx in affected {
            let (word, count) = &mut words[idx];
            let count = *count;
            if !word.windows(2).any(|w| (w[0], w[1]) == best.pair) {
                continue;
            }
            for w in word.windows(2) {
                *touched.entry((w[0], w[1])).or_default() -= count;
            }
            *word = merge_word(word, best.pair, new_id);
            for w in word.windows(2) {
                let pair = (w[0], w[1]);
                *touched.entry(pair).or_default() += count;
                let occ = occurrences.entry(pair).or_default();
                if occ.last() != Some(&idx) {
                    occ.push(idx);
                }
            }
        }

        for (pair, delta) in touched {
            if delta == 0 {
                continue;
            }
            let entry = pair_counts.entry(pair).or_default();
            *entry += delta;
            let current = *entry;
            if current <= 0 {
                pair_counts.remove(&pair);
            } else {
                heap.push(candidate(&symbols, pair, current));
            }
        }
    }

    let vocab = Vocab::from_pieces(pieces, mode)?;
    let table = MergeTable::new(merges)?;
    Ok((vocab, table))
}

/// A merge table compiled for repeated encoding.
#[derive(Debug, Clone)]
pub struct BpeEncoder {
    ids: HashMap<String, u32>,
    // (left id, right id) -> (rank, merged id)
    ranks: HashMap<(u32, u32), (usize, u32)>,
    names: Vec<String>,
}

impl BpeEncoder {
    pub fn new(table: &MergeTable) -> Self {
        let mut encoder = BpeEncoder {
            ids: HashMap::new(),
            ranks: HashMap::with_capacity(table.len()),
            names: Vec::new(),
        };
        for (rank, (left, right)) in table.merges().iter().enumerate() {
            let l = encoder.intern(left);
            let r = encoder.intern(right);
            let m = encoder.intern(&merged_symbol(left, right));
            encoder.ranks.entry((l, r)).or_insert((rank, m));
        }
        encoder
    }

    fn intern(&mut self, name: &str) -> u32 {
        if let Some(&id) = self.ids.get(name) {
            return id;
        }
        let id = self.names.len() as u32;
        self.names.push(name.to_string());
        self.ids.insert(name.to_string(), id);
        id
    }

    /// Applies the merges to `token` in table order, each one exhaustively.
    ///
    /// Merges whose pair is absent are skipped, so the next merge applied is
    /// always the lowest-ranked present pair ranked after the previous one.
    pub fn encode(&self, token: &str) -> Vec<String> {
        let initial = initial_symbols(token);
        // Symbols never mentioned by the table cannot take part in a merge.
        let mut syms: Vec<Option<u32>> = initial.iter().map(|s| self.ids.get(s).copied()).collect();
        let mut last_rank: Option<usize> = None;
        loop {
            let mut best: Option<((u32, u32), usize, u32)> = None;
            for w in syms.windows(2) {
                let (Some(l), Some(r)) = (w[0], w[1]) else { continue };
                if let Some(&(rank, merged)) = self.ranks.get(&(l, r)) {
                    if last_rank.is_some_and(|last| rank <= last) {
                        continue;
                    }
                    if best.is_none_or(|(_, b, _)| rank < b) {
                        best = Some(((l, r), rank, merged));
                    }
                }
            }
            let Some((pair, rank, merged)) = best else { break };
            let mut out = Vec::with_capacity(syms.len());
            let mut i = 0;
            while i < syms.len() {
                if i + 1 < syms.len() && syms[i] == Some(pair.0) && syms[i + 1] == Some(pair.1) {
                    out.push(Some(merged));
                    i += 2;
                } else {
                    out.push(syms[i]);
                    i += 1;
                }
            }
            syms = out;
            last_rank = Some(rank);
        }

        // Symbols unknown to the table keep their initial spelling; `pos` is
        // the code point offset into the token.
        let mut result = Vec::with_capacity(syms.len());
        let mut pos = 0;
        for sym in syms {
            match sym {
                Some(id) => {
                    let name = &self.names[id as usize];
                    let width = name
                        .strip_prefix(CONTINUATION_PREFIX)
                        .filter(|_| pos > 0)
                        .unwrap_or(name)
                        .chars()
                        .count();
                    result.push(name.clone());
                    pos += width;
                }
                None => {
                    result.push(initial[pos].clone());
                    pos += 1;
                }
            }
        }
        result
    }
}

/// Encodes one basic token with `merges`. For many tokens, build a
/// [`BpeEncoder`] once instead.
pub fn bpe_encode(token: &str, merges: &MergeTable) -> Vec<String> {
    BpeEncoder::new(merges).encode(token)
}
