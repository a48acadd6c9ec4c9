//! Evaluation metrics on gold segmentation: UPOS accuracy, mention-level
//! NER precision/recall/F1 and labeled attachment score.

mod conll;
mod iob;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use conll::{parse_conll_tags, parse_conllu, read_conll_tags, read_conllu};
pub use iob::{detect_scheme, extract_mentions, IobScheme, IobTag, Mention};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("sentence count differs: gold has {gold}, predicted has {pred}")]
    SentenceCount { gold: usize, pred: usize },
    #[error("sentence {index}: gold has {gold} tokens, predicted has {pred}")]
    LengthMismatch { index: usize, gold: usize, pred: usize },
    #[error("sentence {index}: token {token} differs ({gold:?} vs {pred:?})")]
    TokenMismatch { index: usize, token: usize, gold: String, pred: String },
    #[error("no tokens to evaluate")]
    Empty,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TaggedSentence {
    pub tokens: Vec<String>,
    pub tags: Vec<String>,
}

impl TaggedSentence {
    pub fn new<S: Into<String>, T: Into<String>>(tokens: Vec<S>, tags: Vec<T>) -> Self {
        let s = TaggedSentence {
            tokens: tokens.into_iter().map(Into::into).collect(),
            tags: tags.into_iter().map(Into::into).collect(),
        };
        assert_eq!(s.tokens.len(), s.tags.len(), "tokens and tags must align");
        s
    }

    /// Sentence whose tokens are placeholders, for tag-only fixtures.
    pub fn from_tags<T: Into<String>>(tags: Vec<T>) -> Self {
        let tags: Vec<String> = tags.into_iter().map(Into::into).collect();
        let tokens = (0..tags.len()).map(|i| format!("t{i}")).collect();
        TaggedSentence { tokens, tags }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct DepGraph {
    /// 1-based head index per token, 0 for the root.
    pub heads: Vec<usize>,
    pub deprels: Vec<String>,
}

impl DepGraph {
    pub fn len(&self) -> usize {
        self.heads.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heads.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub gold_mentions: usize,
    pub pred_mentions: usize,
    pub correct: usize,
}

impl Prf {
    pub fn from_counts(correct: usize, gold_mentions: usize, pred_mentions: usize) -> Self {
        let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        let precision = ratio(correct, pred_mentions);
        let recall = ratio(correct, gold_mentions);
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        Prf {
            precision,
            recall,
            f1,
            gold_mentions,
            pred_mentions,
            correct,
        }
    }
}

fn check_lengths<I>(gold: usize, pred: usize, lens: I) -> Result<(), EvalError>
where
    I: Iterator<Item = (usize, usize)>,
{
    if gold != pred {
        return Err(EvalError::SentenceCount { gold, pred });
    }
    for (index, (g, p)) in lens.enumerate() {
        if g != p {
            return Err(EvalError::LengthMismatch { index, gold: g, pred: p });
        }
    }
    Ok(())
}

fn check_tokens(gold: &[TaggedSentence], pred: &[TaggedSentence]) -> Result<(), EvalError> {
    check_lengths(gold.len(), pred.len(), gold.iter().zip(pred).map(|(g, p)| (g.len(), p.len())))?;
    for (index, (g, p)) in gold.iter().zip(pred).enumerate() {
        if let Some(token) = (0..g.len()).find(|&i| g.tokens[i] != p.tokens[i]) {
            return Err(EvalError::TokenMismatch {
                index,
                token,
                gold: g.tokens[token].clone(),
                pred: p.tokens[token].clone(),
            });
        }
    }
    Ok(())
}

/// Fraction of tokens whose predicted tag equals the gold tag.
pub fn upos_accuracy(gold: &[TaggedSentence], pred: &[TaggedSentence]) -> Result<f64, EvalError> {
    check_tokens(gold, pred)?;
    let total: usize = gold.iter().map(TaggedSentence::len).sum();
    if total == 0 {
        return Err(EvalError::Empty);
    }
    let correct: usize = gold
        .iter()
        .zip(pred)
        .map(|(g, p)| g.tags.iter().zip(&p.tags).filter(|(a, b)| a == b).count())
        .sum();
    Ok(correct as f64 / total as f64)
}

/// Exact-match mention precision, recall and F1 under conlleval chunk
/// semantics.
pub fn mention_prf(gold: &[TaggedSentence], pred: &[TaggedSentence]) -> Result<Prf, EvalError> {
    check_tokens(gold, pred)?;
    let (mut correct, mut n_gold, mut n_pred) = (0, 0, 0);
    for (g, p) in gold.iter().zip(pred) {
        let gm = extract_mentions(&g.tags);
        let pm = extract_mentions(&p.tags);
        n_gold += gm.len();
        n_pred += pm.len();
        correct += pm.iter().filter(|m| gm.contains(m)).count();
    }
    Ok(Prf::from_counts(correct, n_gold, n_pred))
}

/// Labeled attachment score: tokens with the correct head and the exact
/// gold relation string over all tokens.
pub fn las(gold: &[DepGraph], pred: &[DepGraph]) -> Result<f64, EvalError> {
    check_lengths(gold.len(), pred.len(), gold.iter().zip(pred).map(|(g, p)| (g.len(), p.len())))?;
    let total: usize = gold.iter().map(DepGraph::len).sum();
    if total == 0 {
        return Err(EvalError::Empty);
    }
    let correct: usize = gold
        .iter()
        .zip(pred)
        .map(|(g, p)| {
            (0..g.len())
                .filter(|&i| g.heads[i] == p.heads[i] && g.deprels[i] == p.deprels[i])
                .count()
        })
        .sum();
    Ok(correct as f64 / total as f64)
}

/// Unlabeled attachment score.
pub fn uas(gold: &[DepGraph], pred: &[DepGraph]) -> Result<f64, EvalError> {
    check_lengths(gold.len(), pred.len(), gold.iter().zip(pred).map(|(g, p)| (g.len(), p.len())))?;
    let total: usize = gold.iter().map(DepGraph::len).sum();
    if total == 0 {
        return Err(EvalError::Empty);
    }
    let correct: usize = gold
        .iter()
        .zip(pred)
        .map(|(g, p)| (0..g.len()).filter(|&i| g.heads[i] == p.heads[i]).count())
        .sum();
    Ok(correct as f64 / total as f64)
}
