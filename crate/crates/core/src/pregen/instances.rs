use std::collections::{BTreeMap, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::mask::{apply_whole_word_mask, word_spans, MaskBranch};
use super::{GenConfig, PieceDocument, PregenError, PretrainExample};
use crate::corpus::Source;
use crate::vocab::{Vocab, CLS_ID, SEP_ID};

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceGenStats {
    pub docs: usize,
    pub pieces: usize,
    pub passes: usize,
    pub examples: usize,
}

/// Counters collected while generating.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenStats {
    pub sources: BTreeMap<Source, SourceGenStats>,
    pub examples: usize,
    pub is_next: usize,
    /// Single-sentence chunks dropped for lack of a segment B: the last
    /// sentence of a document when it forms a chunk alone, or a lone
    /// sentence whose random segment had no partner document.
    pub skipped_no_partner: usize,
    /// Chunks dropped because no word could be masked.
    pub skipped_unmaskable: usize,
    pub candidate_pieces: usize,
    pub masked_pieces: usize,
    pub mask_words: usize,
    pub random_words: usize,
    pub keep_words: usize,
    pub suggested_dup_factors: BTreeMap<Source, usize>,
}

impl GenStats {
    fn absorb(&mut self, other: GenStats) {
        for (s, o) in other.sources {
            let e = self.sources.entry(s).or_default();
            e.docs += o.docs;
            e.pieces += o.pieces;
            e.passes += o.passes;
            e.examples += o.examples;
        }
        self.examples += other.examples;
        self.is_next += other.is_next;
        self.skipped_no_partner += other.skipped_no_partner;
        self.skipped_unmaskable += other.skipped_unmaskable;
        self.candidate_pieces += other.candidate_pieces;
        self.masked_pieces += other.masked_pieces;
        self.mask_words += other.mask_words;
        self.random_words += other.random_words;
        self.keep_words += other.keep_words;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenOutput {
    pub examples: Vec<PretrainExample>,
    pub stats: GenStats,
}

/// Duplication factors that roughly equalize the expected number of
/// examples per source: the largest source gets 1, every other source
/// `round(max_pieces / pieces)`. Sources without pieces are left out.
pub fn suggested_dup_factors(docs: &[PieceDocument]) -> BTreeMap<Source, usize> {
    let mut pieces: BTreeMap<Source, usize> = BTreeMap::new();
    for d in docs {
        *pieces.entry(d.source).or_default() += d.num_pieces();
    }
    pieces.retain(|_, p| *p > 0);
    let max = pieces.values().copied().max().unwrap_or(0) as f64;
    pieces
        .into_iter()
        .map(|(s, p)| (s, ((max / p as f64).round() as usize).max(1)))
        .collect()
}

fn stream_id(doc: usize, pass: usize) -> u64 {
    ((doc as u64) << 24) | pass as u64
}

fn truncate_seq_pair(a: &mut VecDeque<u32>, b: &mut VecDeque<u32>, max: usize, rng: &mut ChaCha8Rng) {
    while a.len() + b.len() > max {
        let longer = if a.len() > b.len() { &mut *a } else { &mut *b };
        if rng.gen::<f64>() < 0.5 {
            longer.pop_front();
        } else {
            longer.pop_back();
        }
    }
}

struct Ctx<'a> {
    docs: &'a [PieceDocument],
    /// Indices of documents that have at least one sentence.
    nonempty: &'a [usize],
    cfg: &'a GenConfig,
    vocab: &'a Vocab,
}

impl Ctx<'_> {
    /// A uniformly chosen non-empty document other than `doc`.
    fn partner(&self, doc: usize, rng: &mut ChaCha8Rng) -> Option<usize> {
        let pos = self.nonempty.binary_search(&doc).ok()?;
        if self.nonempty.len() < 2 {
            return None;
        }
        let mut r = rng.gen_range(0..self.nonempty.len() - 1);
        if r >= pos {
            r += 1;
        }
        Some(self.nonempty[r])
    }

    fn document_pass(&self, di: usize, pass: usize, out: &mut Vec<PretrainExample>, stats: &mut GenStats) {
        let cfg = self.cfg;
        let doc = &self.docs[di].sentences;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(stream_id(di, pass));

        let max_tokens = cfg.max_seq_len - 3;
        let mut target = max_tokens;
        if rng.gen::<f64>() < cfg.short_seq_prob {
            target = rng.gen_range(2..=max_tokens);
        }

        let mut chunk: Vec<&Vec<u32>> = Vec::new();
        let mut chunk_len = 0;
        let mut i = 0;
        while i < doc.len() {
            chunk.push(&doc[i]);
            chunk_len += doc[i].len();
            if i == doc.len() - 1 || chunk_len >= target {
                let a_end = if chunk.len() >= 2 {
                    rng.gen_range(1..chunk.len())
                } else {
                    1
                };
                let mut a: VecDeque<u32> = chunk[..a_end].iter().flat_map(|s| s.iter().copied()).collect();
                let mut b: VecDeque<u32> = VecDeque::new();
                let want_random = rng.gen::<f64>() < cfg.random_next_prob;
                // A lone final sentence has no continuation. Keeping it only
                // when a random segment is drawn would skew the label rate.
                let lone_tail = chunk.len() == 1 && i + 1 == doc.len();
                let partner = if want_random && !lone_tail {
                    // a lone document can only continue itself
                    self.partner(di, &mut rng)
                } else {
                    None
                };
                let is_next = match partner {
                    Some(p) => {
                        let other = &self.docs[p].sentences;
                        let target_b = target.saturating_sub(a.len());
                        let start = rng.gen_range(0..other.len());
                        for s in &other[start..] {
                            b.extend(s.iter().copied());
                            if b.len() >= target_b {
                                break;
                            }
                        }
                        // put back the sentences that segment B did not use
                        i -= chunk.len() - a_end;
                        false
                    }
                    None if chunk.len() == 1 && i + 1 < doc.len() => {
                        // a lone sentence continues into the sentences after it
                        let target_b = target.saturating_sub(a.len());
                        for s in &doc[i + 1..] {
                            b.extend(s.iter().copied());
                            i += 1;
                            if b.len() >= target_b {
                                break;
                            }
                        }
                        true
                    }
                    None if chunk.len() == 1 => {
                        stats.skipped_no_partner += 1;
                        chunk.clear();
                        chunk_len = 0;
                        i += 1;
                        continue;
                    }
                    None => {
                        b.extend(chunk[a_end..].iter().flat_map(|s| s.iter().copied()));
                        true
                    }
                };
                truncate_seq_pair(&mut a, &mut b, max_tokens, &mut rng);
                debug_assert!(!a.is_empty() && !b.is_empty());

                let mut pieces = Vec::with_capacity(a.len() + b.len() + 3);
                pieces.push(CLS_ID);
                pieces.extend(a.iter().copied());
                pieces.push(SEP_ID);
                let seg_a = pieces.len();
                pieces.extend(b.iter().copied());
                pieces.push(SEP_ID);
                let mut segment_ids = vec![0u8; seg_a];
                segment_ids.resize(pieces.len(), 1);

                let words = word_spans(&pieces, self.vocab);
                match apply_whole_word_mask(&pieces, &words, cfg, self.vocab.len(), &mut rng) {
                    Ok(m) => {
                        stats.candidate_pieces += words.iter().map(|w| w.len()).sum::<usize>();
                        stats.masked_pieces += m.positions.len();
                        for (_, branch) in &m.words {
                            match branch {
                                MaskBranch::Mask => stats.mask_words += 1,
                                MaskBranch::Random => stats.random_words += 1,
                                MaskBranch::Keep => stats.keep_words += 1,
                            }
                        }
                        stats.examples += 1;
                        stats.is_next += usize::from(is_next);
                        out.push(PretrainExample {
                            pieces: m.pieces,
                            segment_ids,
                            masked_positions: m.positions,
                            masked_labels: m.labels,
                            is_next,
                        });
                    }
                    Err(_) => stats.skipped_unmaskable += 1,
                }
                chunk.clear();
                chunk_len = 0;
            }
            i += 1;
        }
    }
}

/// Generates examples for every document and duplication pass.
///
/// Segment B comes from a random other document with probability
/// `random_next_prob`, independent of how many sentences the chunk holds;
/// otherwise it is the true continuation. A one-sentence chunk continues
/// into the sentences that follow it; the last sentence of a document
/// forming a chunk alone is skipped whichever segment was drawn.
///
/// Document `d` in pass `p` draws from the ChaCha8 stream
/// `(d << 24) | p` of a generator seeded with `cfg.seed`, so the output is
/// a pure function of the inputs and independent of thread scheduling.
/// Examples are ordered by document, then pass, then position.
pub fn create_instances(
    docs: &[PieceDocument],
    cfg: &GenConfig,
    vocab: &Vocab,
) -> Result<GenOutput, PregenError> {
    cfg.validate()?;
    let nonempty: Vec<usize> = (0..docs.len()).filter(|&i| !docs[i].sentences.is_empty()).collect();
    let ctx = Ctx {
        docs,
        nonempty: &nonempty,
        cfg,
        vocab,
    };
    let per_doc: Vec<(Vec<PretrainExample>, GenStats)> = docs
        .par_iter()
        .enumerate()
        .map(|(di, doc)| {
            let mut out = Vec::new();
            let mut stats = GenStats::default();
            let passes = cfg.dup_factor(doc.source);
            let entry = stats.sources.entry(doc.source).or_default();
            entry.docs = 1;
            entry.pieces = doc.num_pieces();
            entry.passes = passes;
            if !doc.sentences.is_empty() {
                for pass in 0..passes {
                    ctx.document_pass(di, pass, &mut out, &mut stats);
                }
            }
            stats.sources.get_mut(&doc.source).expect("entry inserted above").examples = out.len();
            (out, stats)
        })
        .collect();

    let mut examples = Vec::new();
    let mut stats = GenStats::default();
    for (ex, st) in per_doc {
        examples.extend(ex);
        stats.absorb(st);
    }
    stats.suggested_dup_factors = suggested_dup_factors(docs);
    Ok(GenOutput { examples, stats })
}
