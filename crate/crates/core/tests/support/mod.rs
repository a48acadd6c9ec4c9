//! Reference implementations and fixture generators shared by the
//! integration tests. Everything here is written for clarity, not speed.

#![allow(dead_code)]

use std::collections::{HashMap, HashSet};
use std::path::PathBuf;

use corpusprep::corpus::{Document, Source};
use corpusprep::pregen::PieceDocument;
use corpusprep::vocab::{CasingMode, Vocab};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

pub fn read_fixture(name: &str) -> String {
    std::fs::read_to_string(fixture(name)).expect("fixture exists")
}

// ---------------------------------------------------------------- BPE

fn symbols(token: &str) -> Vec<String> {
    token
        .chars()
        .enumerate()
        .map(|(i, c)| if i == 0 { c.to_string() } else { format!("##{c}") })
        .collect()
}

/// Quadratic BPE: recounts every pair before each merge.
pub fn naive_bpe_merges(counts: &HashMap<String, u64>, vocab_size: usize) -> Vec<(String, String)> {
    let mut words: Vec<(Vec<String>, u64)> = counts
        .iter()
        .filter(|(t, &c)| !t.is_empty() && c > 0)
        .map(|(t, &c)| (symbols(t), c))
        .collect();
    let mut vocab: HashSet<String> = words.iter().flat_map(|(w, _)| w.iter().cloned()).collect();
    let mut size = vocab.len() + 5;
    let mut done: HashSet<(String, String)> = HashSet::new();
    let mut merges = Vec::new();
    while size < vocab_size {
        let mut pairs: HashMap<(String, String), u64> = HashMap::new();
        for (w, c) in &words {
            for i in 1..w.len() {
                *pairs.entry((w[i - 1].clone(), w[i].clone())).or_default() += c;
            }
        }
        let best = pairs
            .into_iter()
            .filter(|(p, _)| !done.contains(p))
            .max_by(|(pa, ca), (pb, cb)| ca.cmp(cb).then_with(|| pb.cmp(pa)));
        let Some((pair, count)) = best else { break };
        if count < 2 {
            break;
        }
        let merged = format!("{}{}", pair.0, pair.1.trim_start_matches("##"));
        for (w, _) in words.iter_mut() {
            let mut out = Vec::new();
            let mut i = 0;
            while i < w.len() {
                if i + 1 < w.len() && w[i] == pair.0 && w[i + 1] == pair.1 {
                    out.push(merged.clone());
                    i += 2;
                } else {
                    out.push(w[i].clone());
                    i += 1;
                }
            }
            *w = out;
        }
        if vocab.insert(merged) {
            size += 1;
        }
        done.insert(pair.clone());
        merges.push(pair);
    }
    merges
}

/// Token counts over a small alphabet, so that many pairs compete and ties
/// are common.
pub fn random_token_counts(rng: &mut ChaCha8Rng, distinct: usize) -> HashMap<String, u64> {
    const ALPHABET: [char; 7] = ['a', 'b', 'c', 'd', 'e', 'ä', 'ö'];
    let mut counts = HashMap::new();
    while counts.len() < distinct {
        let len = rng.gen_range(1..=8);
        let tok: String = (0..len).map(|_| ALPHABET[rng.gen_range(0..ALPHABET.len())]).collect();
        let c = if rng.gen_bool(0.3) { 1 } else { rng.gen_range(1..=40) };
        counts.insert(tok, c);
    }
    counts
}

// ---------------------------------------------------------------- conlleval

fn split_tag(tag: &str) -> (&str, &str) {
    match tag.split_once('-') {
        Some((t, ty)) => (t, ty),
        None => (tag, ""),
    }
}

fn end_of_chunk(prev_tag: &str, tag: &str, prev_type: &str, ty: &str) -> bool {
    let mut end = matches!(
        (prev_tag, tag),
        ("B", "B") | ("B", "O") | ("I", "B") | ("I", "O") | ("E", "E") | ("E", "I") | ("E", "O")
    );
    if prev_tag != "O" && prev_tag != "." && prev_type != ty {
        end = true;
    }
    if prev_tag == "]" || prev_tag == "[" {
        end = true;
    }
    end
}

fn start_of_chunk(prev_tag: &str, tag: &str, prev_type: &str, ty: &str) -> bool {
    let mut start = matches!(
        (prev_tag, tag),
        ("B", "B") | ("I", "B") | ("O", "B") | ("O", "I") | ("E", "E") | ("E", "I") | ("O", "E")
    );
    if tag != "O" && tag != "." && prev_type != ty {
        start = true;
    }
    if tag == "[" || tag == "]" {
        start = true;
    }
    start
}

/// Chunk counts `(correct, found_gold, found_guessed)` computed the way the
/// conlleval script does, token by token with a boundary token between
/// sentences.
pub fn conlleval_counts(gold: &[Vec<String>], pred: &[Vec<String>]) -> (usize, usize, usize) {
    let mut stream: Vec<(&str, &str)> = Vec::new();
    for (g, p) in gold.iter().zip(pred) {
        for (a, b) in g.iter().zip(p) {
            stream.push((a, b));
        }
        stream.push(("O", "O"));
    }
    let (mut correct, mut found_correct, mut found_guessed) = (0, 0, 0);
    let mut in_correct = false;
    let (mut last_c, mut last_ct) = ("O", "");
    let (mut last_g, mut last_gt) = ("O", "");
    for (c_raw, g_raw) in stream {
        let (c, ct) = split_tag(c_raw);
        let (g, gt) = split_tag(g_raw);
        let c_end = end_of_chunk(last_c, c, last_ct, ct);
        let c_start = start_of_chunk(last_c, c, last_ct, ct);
        let g_end = end_of_chunk(last_g, g, last_gt, gt);
        let g_start = start_of_chunk(last_g, g, last_gt, gt);
        if in_correct {
            if c_end && g_end && last_gt == last_ct {
                in_correct = false;
                correct += 1;
            } else if c_end != g_end || gt != ct {
                in_correct = false;
            }
        }
        if c_start && g_start && gt == ct {
            in_correct = true;
        }
        if c_start {
            found_correct += 1;
        }
        if g_start {
            found_guessed += 1;
        }
        (last_c, last_ct, last_g, last_gt) = (c, ct, g, gt);
    }
    if in_correct {
        correct += 1;
    }
    (correct, found_correct, found_guessed)
}

/// Precision, recall and F1 as fractions, from conlleval counts.
pub fn conlleval_prf(gold: &[Vec<String>], pred: &[Vec<String>]) -> (f64, f64, f64) {
    let (correct, found_gold, found_pred) = conlleval_counts(gold, pred);
    let p = if found_pred > 0 { correct as f64 / found_pred as f64 } else { 0.0 };
    let r = if found_gold > 0 { correct as f64 / found_gold as f64 } else { 0.0 };
    let f = if p + r > 0.0 { 2.0 * p * r / (p + r) } else { 0.0 };
    (p, r, f)
}

/// Random tag sequences, including ill-formed ones such as `I-X` after `O`
/// or after another type.
pub fn random_iob(rng: &mut ChaCha8Rng, sentences: usize) -> Vec<Vec<String>> {
    const TYPES: [&str; 3] = ["PER", "LOC", "ORG"];
    (0..sentences)
        .map(|_| {
            let len = rng.gen_range(1..=15);
            (0..len)
                .map(|_| {
                    let ty = TYPES[rng.gen_range(0..TYPES.len())];
                    match rng.gen_range(0..10) {
                        0..=4 => "O".to_string(),
                        5..=7 => format!("B-{ty}"),
                        _ => format!("I-{ty}"),
                    }
                })
                .collect()
        })
        .collect()
}

/// A prediction derived from `gold` by random edits, so that the two agree
/// often enough to produce correct chunks.
pub fn perturb_iob(rng: &mut ChaCha8Rng, gold: &[Vec<String>]) -> Vec<Vec<String>> {
    const TAGS: [&str; 7] = ["O", "B-PER", "I-PER", "B-LOC", "I-LOC", "B-ORG", "I-ORG"];
    gold.iter()
        .map(|s| {
            s.iter()
                .map(|t| {
                    if rng.gen_bool(0.2) {
                        TAGS[rng.gen_range(0..TAGS.len())].to_string()
                    } else {
                        t.clone()
                    }
                })
                .collect()
        })
        .collect()
}

// ---------------------------------------------------------------- shingles

/// Duplication ratio of every document by explicit shingle counting over
/// whitespace tokens. Only valid for lowercase texts without punctuation.
pub fn brute_force_ratios(texts: &[String], n: usize) -> Vec<f64> {
    let shingles: Vec<Vec<Vec<&str>>> = texts
        .iter()
        .map(|t| {
            let toks: Vec<&str> = t.split_whitespace().collect();
            if toks.is_empty() {
                Vec::new()
            } else if toks.len() < n {
                vec![toks]
            } else {
                toks.windows(n).map(|w| w.to_vec()).collect()
            }
        })
        .collect();
    let mut counts: HashMap<&[&str], usize> = HashMap::new();
    for doc in &shingles {
        for s in doc {
            *counts.entry(s.as_slice()).or_default() += 1;
        }
    }
    shingles
        .iter()
        .map(|doc| {
            if doc.is_empty() {
                0.0
            } else {
                doc.iter().filter(|s| counts[s.as_slice()] >= 2).count() as f64 / doc.len() as f64
            }
        })
        .collect()
}

pub fn random_word(rng: &mut ChaCha8Rng) -> String {
    (0..8).map(|_| rng.gen_range(b'a'..=b'z') as char).collect()
}

pub fn random_words(rng: &mut ChaCha8Rng, n: usize) -> Vec<String> {
    (0..n).map(|_| random_word(rng)).collect()
}

/// A corpus with planted duplication and the ids that a 0.25 threshold
/// must remove. Shingle length is 10.
pub struct DedupCorpus {
    pub docs: Vec<Document>,
    pub planted: HashSet<String>,
}

pub fn planted_dedup_corpus(seed: u64, total: usize) -> DedupCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut docs = Vec::new();
    let mut planted = HashSet::new();
    let mut push = |docs: &mut Vec<Document>, words: &[String], removed: bool| {
        let id = format!("d{:04}", docs.len());
        if removed {
            planted.insert(id.clone());
        }
        docs.push(Document::new(id, Source::Crawl, words.join(" ")));
    };
    while docs.len() + 8 <= total {
        match docs.len() % 40 {
            // exact copies: both copies have ratio 1
            0 => {
                let len = rng.gen_range(20..80);
                let w = random_words(&mut rng, len);
                push(&mut docs, &w, true);
                push(&mut docs, &w, true);
            }
            // 49 tokens (40 shingles) sharing 19 tokens (10 shingles) with a
            // long document: exactly 0.25 for the short one, ~0.11 for the other
            2 => {
                let shared = random_words(&mut rng, 19);
                let short = [random_words(&mut rng, 15), shared.clone(), random_words(&mut rng, 15)].concat();
                let long = [random_words(&mut rng, 40), shared, random_words(&mut rng, 41)].concat();
                push(&mut docs, &short, true);
                push(&mut docs, &long, false);
            }
            // one shingle short of the boundary: 9 / 40
            4 => {
                let shared = random_words(&mut rng, 18);
                let short = [random_words(&mut rng, 16), shared.clone(), random_words(&mut rng, 15)].concat();
                let long = [random_words(&mut rng, 40), shared, random_words(&mut rng, 41)].concat();
                push(&mut docs, &short, false);
                push(&mut docs, &long, false);
            }
            // near copy: a document repeated with a few words replaced
            6 => {
                let w = random_words(&mut rng, 60);
                let mut v = w.clone();
                v[30] = random_word(&mut rng);
                push(&mut docs, &w, true);
                push(&mut docs, &v, true);
            }
            // short documents below the shingle length
            8 => {
                let w = random_words(&mut rng, 6);
                push(&mut docs, &w, true);
                push(&mut docs, &w, true);
                let u = random_words(&mut rng, 6);
                push(&mut docs, &u, false);
            }
            _ => {
                let len = rng.gen_range(1..120);
                let w = random_words(&mut rng, len);
                push(&mut docs, &w, false);
            }
        }
    }
    while docs.len() < total {
        let w = random_words(&mut rng, 30);
        push(&mut docs, &w, false);
    }
    DedupCorpus { docs, planted }
}

// ---------------------------------------------------------------- pieces

pub const INITIAL_PIECES: u32 = 300;
pub const CONTINUATION_PIECES: u32 = 100;

/// Word-initial pieces `w0..`, then continuation pieces `##x0..`.
pub fn synthetic_vocab() -> Vocab {
    let pieces: Vec<String> = (0..INITIAL_PIECES)
        .map(|i| format!("w{i}"))
        .chain((0..CONTINUATION_PIECES).map(|i| format!("##x{i}")))
        .collect();
    Vocab::with_specials(pieces, CasingMode::Cased).unwrap()
}

/// Documents of sentences with 6 to 20 words of one to three pieces.
pub fn synthetic_piece_docs(seed: u64, count: usize) -> Vec<PieceDocument> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let first_cont = 5 + INITIAL_PIECES;
    (0..count)
        .map(|d| PieceDocument {
            source: Source::ALL[d % 3],
            sentences: (0..rng.gen_range(10..40))
                .map(|_| {
                    let mut s = Vec::new();
                    for _ in 0..rng.gen_range(6..=20) {
                        s.push(rng.gen_range(5..first_cont));
                        let extra = match rng.gen_range(0..10) {
                            0..=5 => 0,
                            6..=8 => 1,
                            _ => 2,
                        };
                        for _ in 0..extra {
                            s.push(rng.gen_range(first_cont..first_cont + CONTINUATION_PIECES));
                        }
                    }
                    s
                })
                .collect(),
        })
        .collect()
}

/// Word spans of a piece sequence recomputed from piece strings: specials
/// end words, `##` pieces extend the open word.
pub fn words_of(pieces: &[u32], vocab: &Vocab) -> Vec<std::ops::Range<usize>> {
    let mut out: Vec<std::ops::Range<usize>> = Vec::new();
    let mut open = false;
    for (i, &id) in pieces.iter().enumerate() {
        let piece = vocab.piece(id).unwrap();
        if piece.starts_with('[') && piece.ends_with(']') && piece != "[UNK]" {
            open = false;
        } else if open && piece.starts_with("##") {
            out.last_mut().unwrap().end = i + 1;
        } else {
            out.push(i..i + 1);
            open = true;
        }
    }
    out
}
