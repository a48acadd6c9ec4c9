//! Character trigram language identification by cosine similarity.

use std::collections::{BTreeMap, HashMap};
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::FilterError;

/// Minimum sample size, in code points, for training a profile.
pub const MIN_SAMPLE_CHARS: usize = 100;

/// Normalized trigram frequencies for one language.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LanguageProfile {
    pub lang: String,
    pub ngram_freqs: BTreeMap<String, f64>,
}

fn normalize(text: &str) -> Vec<char> {
    let lower = text.to_lowercase();
    let mut out = Vec::with_capacity(lower.len());
    for (i, word) in lower.split_whitespace().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        out.extend(word.chars());
    }
    out
}

/// Trigram counts over the lowercased text with whitespace runs collapsed
/// to a single space.
pub fn trigram_counts(text: &str) -> HashMap<String, u64> {
    let chars = normalize(text);
    let mut counts = HashMap::new();
    for w in chars.windows(3) {
        *counts.entry(w.iter().collect::<String>()).or_insert(0) += 1;
    }
    counts
}

/// Builds one profile per language. Languages are returned in name order.
pub fn train_language_profiles<S: AsRef<str>>(
    samples: &BTreeMap<String, S>,
) -> Result<Vec<LanguageProfile>, FilterError> {
    samples
        .iter()
        .map(|(lang, sample)| {
            let sample = sample.as_ref();
            let chars = sample.chars().count();
            if chars < MIN_SAMPLE_CHARS {
                return Err(FilterError::SampleTooSmall {
                    lang: lang.clone(),
                    chars,
                    min: MIN_SAMPLE_CHARS,
                });
            }
            let counts = trigram_counts(sample);
            let total: u64 = counts.values().sum();
            let ngram_freqs = counts
                .into_iter()
                .map(|(k, c)| (k, c as f64 / total as f64))
                .collect();
            Ok(LanguageProfile {
                lang: lang.clone(),
                ngram_freqs,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub lang: String,
    /// Cosine similarity of the winning profile, in [0, 1].
    pub score: f64,
}

/// Profiles with precomputed norms.
#[derive(Debug, Clone)]
pub struct LanguageDetector {
    profiles: Vec<(LanguageProfile, f64)>,
}

impl LanguageDetector {
    pub fn new(mut profiles: Vec<LanguageProfile>) -> Result<Self, FilterError> {
        if profiles.is_empty() {
            return Err(FilterError::NoProfiles);
        }
        profiles.sort_by(|a, b| a.lang.cmp(&b.lang));
        let profiles = profiles
            .into_iter()
            .map(|p| {
                let norm = p.ngram_freqs.values().map(|f| f * f).sum::<f64>().sqrt();
                (p, norm)
            })
            .collect();
        Ok(LanguageDetector { profiles })
    }

    /// Highest-cosine language; ties go to the smaller language name.
    pub fn detect(&self, text: &str) -> Result<Detection, FilterError> {
        let len = normalize(text).len();
        if len < 3 {
            return Err(FilterError::TextTooShort(len));
        }
        let counts = trigram_counts(text);
        let text_norm = counts.values().map(|&c| (c * c) as f64).sum::<f64>().sqrt();

        let mut best: Option<Detection> = None;
        for (profile, norm) in &self.profiles {
            let dot: f64 = counts
                .iter()
                .filter_map(|(k, &c)| profile.ngram_freqs.get(k).map(|f| c as f64 * f))
                .sum();
            let score = if *norm == 0.0 || text_norm == 0.0 {
                0.0
            } else {
                (dot / (norm * text_norm)).clamp(0.0, 1.0)
            };
            // profiles are sorted by name, so strict comparison keeps the
            // smaller name on ties
            if best.as_ref().is_none_or(|b| score > b.score) {
                best = Some(Detection {
                    lang: profile.lang.clone(),
                    score,
                });
            }
        }
        Ok(best.expect("at least one profile"))
    }
}

pub fn detect_language(text: &str, profiles: &[LanguageProfile]) -> Result<Detection, FilterError> {
    LanguageDetector::new(profiles.to_vec())?.detect(text)
}

/// Profiles file: a JSON object mapping language to its trigram frequency
/// object.
pub fn write_profiles<W: Write>(writer: W, profiles: &[LanguageProfile]) -> Result<(), FilterError> {
    let map: BTreeMap<&str, &BTreeMap<String, f64>> = profiles
        .iter()
        .map(|p| (p.lang.as_str(), &p.ngram_freqs))
        .collect();
    serde_json::to_writer(writer, &map)?;
    Ok(())
}

pub fn read_profiles<R: Read>(reader: R) -> Result<Vec<LanguageProfile>, FilterError> {
    let map: BTreeMap<String, BTreeMap<String, f64>> = serde_json::from_reader(reader)?;
    let mut out = Vec::with_capacity(map.len());
    for (lang, ngram_freqs) in map {
        if ngram_freqs.values().any(|&f| !(f > 0.0 && f.is_finite())) {
            return Err(FilterError::InvalidProfile {
                lang,
                message: "frequencies must be positive".into(),
            });
        }
        let sum: f64 = ngram_freqs.values().sum();
        if (sum - 1.0).abs() > 1e-6 {
            return Err(FilterError::InvalidProfile {
                lang,
                message: format!("frequencies sum to {sum}"),
            });
        }
        out.push(LanguageProfile { lang, ngram_freqs });
    }
    Ok(out)
}
