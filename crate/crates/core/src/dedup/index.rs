use std::collections::HashMap;
use std::io::{Read, Write};

use rayon::prelude::*;

use super::DedupError;
use crate::hash::{fnv1a64, mix64};
use crate::vocab::{basic_tokenize, CasingMode};

pub const DEFAULT_SHINGLE_LEN: usize = 10;

/// First eight bytes of an index file.
pub const INDEX_MAGIC: [u8; 8] = *b"SHINGLE1";

const ROLL_BASE: u64 = 0x9e37_79b9_7f4a_7c15;

fn token_hashes(text: &str) -> Vec<u64> {
    basic_tokenize(text, CasingMode::Cased)
        .iter()
        .map(|t| fnv1a64(t.to_lowercase().as_bytes()))
        .collect()
}

fn finalize(h: u64, len: usize) -> u64 {
    mix64(h ^ mix64(len as u64))
}

/// Shingle hashes of `text` in document order, duplicates included.
///
/// Tokens are the lowercased basic tokens. With `m` tokens this returns
/// `m - n + 1` hashes when `m >= n`, a single hash over the whole text when
/// `0 < m < n`, and nothing for a text without tokens.
pub fn shingle_hashes(text: &str, n: usize) -> Vec<u64> {
    let toks = token_hashes(text);
    if toks.is_empty() || n == 0 {
        return Vec::new();
    }
    let window = n.min(toks.len());
    // polynomial hash sum(t_k * B^(window-1-k)), rolled one token at a time
    let top = (1..window).fold(1u64, |p, _| p.wrapping_mul(ROLL_BASE));
    let mut h = toks[..window]
        .iter()
        .fold(0u64, |h, &t| h.wrapping_mul(ROLL_BASE).wrapping_add(t));
    let mut out = Vec::with_capacity(toks.len() - window + 1);
    out.push(finalize(h, window));
    for i in window..toks.len() {
        h = h
            .wrapping_sub(toks[i - window].wrapping_mul(top))
            .wrapping_mul(ROLL_BASE)
            .wrapping_add(toks[i]);
        out.push(finalize(h, window));
    }
    out
}

/// Occurrence counts of shingle hashes over a corpus.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShingleIndex {
    n: usize,
    counts: HashMap<u64, u64>,
}

impl ShingleIndex {
    pub fn new(n: usize) -> Result<Self, DedupError> {
        if n == 0 {
            return Err(DedupError::InvalidShingleLen);
        }
        Ok(ShingleIndex {
            n,
            counts: HashMap::new(),
        })
    }

    /// Counts shingles of all texts in parallel. The result does not depend
    /// on the order of the texts.
    pub fn build<'a, I>(texts: I, n: usize) -> Result<Self, DedupError>
    where
        I: IntoIterator<Item = &'a str>,
    {
        let mut index = ShingleIndex::new(n)?;
        let texts: Vec<&str> = texts.into_iter().collect();
        index.counts = texts
            .par_iter()
            .fold(HashMap::new, |mut acc: HashMap<u64, u64>, text| {
                for h in shingle_hashes(text, n) {
                    *acc.entry(h).or_insert(0) += 1;
                }
                acc
            })
            .reduce(HashMap::new, |mut a, b| {
                let (mut big, small) = if a.len() >= b.len() { (a, b) } else { (b, std::mem::take(&mut a)) };
                for (h, c) in small {
                    *big.entry(h).or_insert(0) += c;
                }
                big
            });
        Ok(index)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn count(&self, hash: u64) -> u64 {
        self.counts.get(&hash).copied().unwrap_or(0)
    }

    /// Number of distinct shingles.
    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// Sum of all counts.
    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }

    pub fn add_text(&mut self, text: &str) {
        let hashes = shingle_hashes(text, self.n);
        self.insert_all(&hashes);
    }

    pub(crate) fn insert_all(&mut self, hashes: &[u64]) {
        for &h in hashes {
            *self.counts.entry(h).or_insert(0) += 1;
        }
    }

    /// Entries sorted by hash.
    pub fn entries(&self) -> Vec<(u64, u64)> {
        let mut v: Vec<(u64, u64)> = self.counts.iter().map(|(&h, &c)| (h, c)).collect();
        v.sort_unstable();
        v
    }

    /// Binary layout, little-endian: magic, `n` as u32, entry count as u64,
    /// then `(hash u64, count u64)` pairs sorted by hash.
    pub fn write<W: Write>(&self, mut w: W) -> Result<(), DedupError> {
        let entries = self.entries();
        w.write_all(&INDEX_MAGIC)?;
        let n = u32::try_from(self.n)
            .map_err(|_| DedupError::BadIndexFile("shingle length exceeds u32".into()))?;
        w.write_all(&n.to_le_bytes())?;
        w.write_all(&(entries.len() as u64).to_le_bytes())?;
        let mut buf = Vec::with_capacity(entries.len() * 16);
        for (h, c) in entries {
            buf.extend_from_slice(&h.to_le_bytes());
            buf.extend_from_slice(&c.to_le_bytes());
        }
        w.write_all(&buf)?;
        w.flush()?;
        Ok(())
    }

    pub fn read<R: Read>(mut r: R) -> Result<Self, DedupError> {
        let mut magic = [0u8; 8];
        read_exact(&mut r, &mut magic)?;
        if magic != INDEX_MAGIC {
            return Err(DedupError::BadIndexFile("wrong magic bytes".into()));
        }
        let mut b4 = [0u8; 4];
        read_exact(&mut r, &mut b4)?;
        let n = u32::from_le_bytes(b4) as usize;
        let mut index = ShingleIndex::new(n)?;
        let mut b8 = [0u8; 8];
        read_exact(&mut r, &mut b8)?;
        let len = u64::from_le_bytes(b8);
        let mut prev: Option<u64> = None;
        for _ in 0..len {
            read_exact(&mut r, &mut b8)?;
            let h = u64::from_le_bytes(b8);
            read_exact(&mut r, &mut b8)?;
            let c = u64::from_le_bytes(b8);
            if prev.is_some_and(|p| p >= h) {
                return Err(DedupError::BadIndexFile("entries not strictly sorted".into()));
            }
            if c == 0 {
                return Err(DedupError::BadIndexFile("zero count".into()));
            }
            prev = Some(h);
            index.counts.insert(h, c);
        }
        let mut extra = [0u8; 1];
        if r.read(&mut extra)? != 0 {
            return Err(DedupError::BadIndexFile("trailing bytes".into()));
        }
        Ok(index)
    }
}

fn read_exact<R: Read>(r: &mut R, buf: &mut [u8]) -> Result<(), DedupError> {
    r.read_exact(buf).map_err(|e| {
        if e.kind() == std::io::ErrorKind::UnexpectedEof {
            DedupError::BadIndexFile("truncated".into())
        } else {
            DedupError::Io(e)
        }
    })
}
