//! Quality filtering: character-class heuristics, character trigram language
//! identification and a linear hinge-loss classifier.

mod heuristics;
mod langid;
mod linear;

use std::fmt;
use std::io;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use heuristics::{char_class_ratios, heuristic_filter, sentence_lengths, CharClassRatios};
pub use langid::{
    detect_language, read_profiles, train_language_profiles, trigram_counts, write_profiles,
    Detection, LanguageDetector, LanguageProfile, MIN_SAMPLE_CHARS,
};
pub use linear::{
    lexical_features, score_linear, svm_objective, train_linear_svm, FeatureSpace, LinearModel,
    SparseVector, LEXICAL_BUCKETS,
};

#[derive(Debug, Error)]
pub enum FilterError {
    #[error("text is empty after whitespace removal")]
    EmptyText,
    #[error("sample too small: {lang} has {chars} code points, need at least {min}")]
    SampleTooSmall { lang: String, chars: usize, min: usize },
    #[error("text too short for language detection: {0} code points")]
    TextTooShort(usize),
    #[error("no language profiles")]
    NoProfiles,
    #[error("training data must contain both labels")]
    SingleClass,
    #[error("invalid label {0}; expected +1 or -1")]
    InvalidLabel(i32),
    #[error("lambda must be positive and finite, got {0}")]
    InvalidLambda(f64),
    #[error("invalid threshold {name} = {value}")]
    InvalidThreshold { name: &'static str, value: f64 },
    #[error("non-finite model value")]
    NonFinite,
    #[error("invalid profile for {lang}: {message}")]
    InvalidProfile { lang: String, message: String },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Heuristic rejection thresholds.
///
/// The defaults are placeholders chosen for plausibility; they were not
/// validated against any reference pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub max_digit_ratio: f64,
    pub max_upper_ratio: f64,
    pub max_nontarget_alpha_ratio: f64,
    /// Minimum average sentence length in basic tokens.
    pub min_avg_sentence_len: f64,
    pub min_lang_score: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            max_digit_ratio: 0.2,
            max_upper_ratio: 0.3,
            max_nontarget_alpha_ratio: 0.05,
            min_avg_sentence_len: 5.0,
            min_lang_score: 0.7,
        }
    }
}

impl Thresholds {
    pub fn validate(&self) -> Result<(), FilterError> {
        let fractions = [
            ("max_digit_ratio", self.max_digit_ratio),
            ("max_upper_ratio", self.max_upper_ratio),
            ("max_nontarget_alpha_ratio", self.max_nontarget_alpha_ratio),
            ("min_lang_score", self.min_lang_score),
        ];
        for (name, value) in fractions {
            if !(0.0..=1.0).contains(&value) {
                return Err(FilterError::InvalidThreshold { name, value });
            }
        }
        if !(self.min_avg_sentence_len >= 0.0 && self.min_avg_sentence_len.is_finite()) {
            return Err(FilterError::InvalidThreshold {
                name: "min_avg_sentence_len",
                value: self.min_avg_sentence_len,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reason {
    Ok,
    DigitRatio,
    UpperRatio,
    NontargetAlpha,
    ShortSentences,
    Language,
    Classifier,
}

impl Reason {
    pub fn as_str(&self) -> &'static str {
        match self {
            Reason::Ok => "ok",
            Reason::DigitRatio => "digit_ratio",
            Reason::UpperRatio => "upper_ratio",
            Reason::NontargetAlpha => "nontarget_alpha",
            Reason::ShortSentences => "short_sentences",
            Reason::Language => "language",
            Reason::Classifier => "classifier",
        }
    }
}

impl fmt::Display for Reason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Outcome of one filtering step. `kept` holds exactly when `reason` is
/// [`Reason::Ok`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterVerdict {
    pub kept: bool,
    pub reason: Reason,
    pub score: Option<f64>,
}

impl FilterVerdict {
    pub fn keep(score: Option<f64>) -> Self {
        FilterVerdict {
            kept: true,
            reason: Reason::Ok,
            score,
        }
    }

    pub fn reject(reason: Reason, score: f64) -> Self {
        debug_assert!(reason != Reason::Ok);
        FilterVerdict {
            kept: false,
            reason,
            score: Some(score),
        }
    }
}
