use std::ops::Range;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{GenConfig, PregenError};
use crate::vocab::{is_continuation, Vocab, MASK_ID, SPECIAL_TOKENS};

/// What happened to a selected word.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaskBranch {
    Mask,
    Random,
    Keep,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaskOutcome {
    pub pieces: Vec<u32>,
    /// Sorted masked positions.
    pub positions: Vec<usize>,
    /// Original piece at each masked position.
    pub labels: Vec<u32>,
    /// Selected words in selection order, with the branch drawn for each.
    pub words: Vec<(Range<usize>, MaskBranch)>,
}

/// Groups the non-special positions of `pieces` into words: a continuation
/// piece joins the word before it unless a special piece intervenes.
pub fn word_spans(pieces: &[u32], vocab: &Vocab) -> Vec<Range<usize>> {
    let mut spans: Vec<Range<usize>> = Vec::new();
    let mut open = false;
    for (i, &id) in pieces.iter().enumerate() {
        if Vocab::is_special(id) && id != crate::vocab::UNK_ID {
            open = false;
            continue;
        }
        let cont = vocab.piece(id).is_some_and(is_continuation);
        match spans.last_mut() {
            Some(last) if open && cont => last.end = i + 1,
            _ => spans.push(i..i + 1),
        }
        open = true;
    }
    spans
}

/// Number of pieces to mask for `candidates` candidate pieces.
pub(crate) fn mask_target(candidates: usize, cfg: &GenConfig) -> usize {
    let raw = (cfg.mask_prob * candidates as f64).round_ties_even() as usize;
    raw.min(cfg.max_predictions).max(1)
}

/// Selects whole words in random order until the masking target is reached,
/// skipping any word that would overshoot it, then applies one branch draw
/// per selected word. When every word is too long for the target, the first
/// word in the shuffled order that fits `max_predictions` is taken alone.
///
/// Random replacements are drawn uniformly from the non-special ids below
/// `vocab_size`; with no such id the piece is left unchanged.
pub fn apply_whole_word_mask<R: Rng>(
    pieces: &[u32],
    words: &[Range<usize>],
    cfg: &GenConfig,
    vocab_size: usize,
    rng: &mut R,
) -> Result<MaskOutcome, PregenError> {
    let candidates: usize = words.iter().map(|w| w.len()).sum();
    if words.is_empty() || candidates == 0 {
        return Err(PregenError::EmptyCandidates);
    }
    let target = mask_target(candidates, cfg);

    let mut order: Vec<usize> = (0..words.len()).collect();
    order.shuffle(rng);

    let mut selected = Vec::new();
    let mut covered = 0;
    for &w in &order {
        if covered >= target {
            break;
        }
        let len = words[w].len();
        if covered + len > target {
            continue;
        }
        covered += len;
        selected.push(w);
    }
    if selected.is_empty() {
        let w = order
            .iter()
            .copied()
            .find(|&w| words[w].len() <= cfg.max_predictions)
            .ok_or(PregenError::NoMaskableWord {
                max_predictions: cfg.max_predictions,
            })?;
        selected.push(w);
    }

    let first_regular = SPECIAL_TOKENS.len() as u32;
    let mut out = pieces.to_vec();
    let mut masked: Vec<(usize, u32)> = Vec::with_capacity(covered.max(1));
    let mut chosen = Vec::with_capacity(selected.len());
    for w in selected {
        let span = words[w].clone();
        let u: f64 = rng.gen();
        let branch = if u < cfg.mask_token_prob {
            MaskBranch::Mask
        } else if u < cfg.mask_token_prob + cfg.random_replace_prob {
            MaskBranch::Random
        } else {
            MaskBranch::Keep
        };
        for p in span.clone() {
            masked.push((p, pieces[p]));
            match branch {
                MaskBranch::Mask => out[p] = MASK_ID,
                MaskBranch::Random if vocab_size > first_regular as usize => {
                    out[p] = rng.gen_range(first_regular..vocab_size as u32);
                }
                _ => {}
            }
        }
        chosen.push((span, branch));
    }
    masked.sort_unstable();
    let (positions, labels) = masked.into_iter().unzip();
    Ok(MaskOutcome {
        pieces: out,
        positions,
        labels,
        words: chosen,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vocab::{CasingMode, CLS_ID, SEP_ID};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn vocab() -> Vocab {
        Vocab::with_specials(
            ["valtiovarain", "##ministeri", "kesän", "aikana", "##na", "a"],
            CasingMode::Cased,
        )
        .unwrap()
    }

    #[test]
    fn spans_follow_continuations() {
        let v = vocab();
        let ids: Vec<u32> = [CLS_ID, 5, 6, 7, 8, SEP_ID, 6, 9, SEP_ID].to_vec();
        assert_eq!(word_spans(&ids, &v), vec![1..3, 3..4, 4..5, 6..8]);
        // "aikana" followed by "##na" forms one word
        let ids = [CLS_ID, 8, 9, SEP_ID];
        assert_eq!(word_spans(&ids, &v), vec![1..3]);
    }

    #[test]
    fn mask_branch_masks_every_piece_of_word() {
        let v = vocab();
        let ids = vec![5, 6];
        let words = word_spans(&ids, &v);
        let cfg = GenConfig {
            mask_prob: 0.9,
            mask_token_prob: 1.0,
            random_replace_prob: 0.0,
            keep_prob: 0.0,
            ..GenConfig::default()
        };
        let out = apply_whole_word_mask(&ids, &words, &cfg, v.len(), &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert_eq!(out.pieces, vec![MASK_ID, MASK_ID]);
        assert_eq!(out.positions, vec![0, 1]);
        assert_eq!(out.labels, vec![5, 6]);
    }

    #[test]
    fn minimum_one_word() {
        let cfg = GenConfig {
            mask_prob: 1e-9,
            ..GenConfig::default()
        };
        let words = vec![0..2, 2..3, 3..5];
        for seed in 0..50 {
            let out = apply_whole_word_mask(&[9; 5], &words, &cfg, 10, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
            assert_eq!(out.words.len(), 1);
        }
        // only multi-piece words: the fallback still picks exactly one
        let words = vec![0..2, 2..5];
        let out = apply_whole_word_mask(&[9; 5], &words, &cfg, 10, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        assert_eq!(out.words.len(), 1);
    }

    #[test]
    fn empty_candidates() {
        let cfg = GenConfig::default();
        assert!(matches!(
            apply_whole_word_mask(&[], &[], &cfg, 10, &mut ChaCha8Rng::seed_from_u64(0)),
            Err(PregenError::EmptyCandidates)
        ));
    }

    #[test]
    fn target_rounding() {
        let cfg = GenConfig::default();
        assert_eq!(mask_target(100, &cfg), 15);
        assert_eq!(mask_target(3, &cfg), 1);
        assert_eq!(mask_target(10, &cfg), 2);
        assert_eq!(mask_target(125, &cfg), 19);
        assert_eq!(mask_target(1000, &cfg), 20);
    }

    #[test]
    fn random_branch_avoids_specials() {
        let cfg = GenConfig {
            mask_prob: 0.5,
            mask_token_prob: 0.0,
            random_replace_prob: 1.0,
            keep_prob: 0.0,
            ..GenConfig::default()
        };
        let words: Vec<_> = (0..20).map(|i| i..i + 1).collect();
        let out = apply_whole_word_mask(&[7; 20], &words, &cfg, 8, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        assert_eq!(out.positions.len(), 10);
        assert!(out.pieces.iter().all(|p| (5..8).contains(p)));
    }
}
