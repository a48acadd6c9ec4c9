use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::corpus::{Source, SplitSpec};
use crate::dedup::{DedupMode, DEFAULT_SHINGLE_LEN};
use crate::filter::{FeatureSpace, Thresholds};
use crate::pregen::GenConfig;
use crate::vocab::CasingMode;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("unknown config key {0:?}")]
    UnknownKey(String),
    #[error("{key}: {message}")]
    Invalid { key: String, message: String },
}

fn invalid(key: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        key: key.to_string(),
        message: message.into(),
    }
}

/// Evaluation file format.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EvalFormat {
    /// `conllu` when the gold file name ends in `.conllu`, else `conll`.
    #[default]
    Auto,
    Conllu,
    Conll,
}

impl EvalFormat {
    pub fn resolve(self, gold: &Path) -> EvalFormat {
        match self {
            EvalFormat::Auto if gold.extension().is_some_and(|e| e == "conllu") => EvalFormat::Conllu,
            EvalFormat::Auto => EvalFormat::Conll,
            other => other,
        }
    }
}

/// Every configuration key with its default value and meaning.
pub const CONFIG_KEYS: &[(&str, &str, &str)] = &[
    ("seed", "1", "seed for every random choice"),
    ("workers", "0", "worker threads; 0 uses all cores"),
    ("filter.max_digit_ratio", "0.2", "reject above this share of digits"),
    ("filter.max_upper_ratio", "0.3", "reject above this share of uppercase letters"),
    ("filter.max_nontarget_alpha_ratio", "0.05", "reject above this share of letters outside a-z, å, ä, ö"),
    ("filter.min_avg_sentence_len", "5", "reject below this mean sentence length in tokens"),
    ("lang.target", "fi", "language a document must be detected as"),
    ("lang.min_score", "0.7", "minimum cosine similarity of the detection"),
    ("lang.samples", "", "training samples for profiles, e.g. fi:fi.txt,sv:sv.txt"),
    ("svm.lambda", "0.0001", "regularization strength"),
    ("svm.epochs", "10", "passes over the training data"),
    ("svm.threshold", "0", "keep documents scoring at least this"),
    ("svm.features", "lexical", "lexical or delexicalized"),
    ("dedup.n", "10", "shingle length in tokens"),
    ("dedup.threshold", "0.25", "remove documents with at least this duplication ratio"),
    ("dedup.sources", "news,discussion,crawl,other", "sources subject to deduplication"),
    ("dedup.mode", "symmetric", "symmetric or keep-first"),
    ("vocab.size", "50000", "vocabulary size including special pieces"),
    ("vocab.casing", "cased", "cased or uncased"),
    ("pregen.max_seq_len", "128", "sequence length in pieces"),
    ("pregen.max_predictions", "auto", "20 for length 128, 77 for 512"),
    ("pregen.mask_prob", "0.15", "share of pieces to mask"),
    ("pregen.random_next_prob", "0.5", "probability of a random second segment"),
    ("pregen.short_seq_prob", "0.1", "probability of a shorter target length"),
    ("pregen.dup_factors", "", "per-source passes, e.g. news:2,crawl:1"),
    ("split.train", "0", "training documents per class"),
    ("split.dev", "0", "development documents per class"),
    ("split.test", "0", "test documents per class"),
    ("split.classes", "", "comma-separated class labels"),
    ("eval.format", "auto", "auto, conllu or conll"),
    ("paths.input", "", "input file"),
    ("paths.output", "", "output file or directory"),
    ("paths.vocab", "", "vocab.txt"),
    ("paths.merges", "", "merges.txt"),
    ("paths.profiles", "", "language profile file"),
    ("paths.model", "", "linear model file"),
    ("paths.dup_report", "", "duplication report"),
    ("paths.index", "", "shingle index file"),
    ("paths.gold", "", "gold annotations"),
    ("paths.pred", "", "predicted annotations"),
];

/// All pipeline parameters.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PipelineConfig {
    pub seed: u64,
    pub workers: usize,
    pub thresholds: Thresholds,
    pub lang_target: String,
    pub lang_samples: BTreeMap<String, PathBuf>,
    pub svm_lambda: f64,
    pub svm_epochs: usize,
    pub svm_threshold: f64,
    pub svm_features: FeatureSpace,
    pub dedup_n: usize,
    pub dedup_threshold: f64,
    pub dedup_sources: Vec<Source>,
    pub dedup_mode: DedupMode,
    pub vocab_size: usize,
    pub casing: CasingMode,
    pub max_seq_len: usize,
    /// `None` derives the value from `max_seq_len`.
    pub max_predictions: Option<usize>,
    pub mask_prob: f64,
    pub random_next_prob: f64,
    pub short_seq_prob: f64,
    pub dup_factors: BTreeMap<Source, usize>,
    pub split_train: usize,
    pub split_dev: usize,
    pub split_test: usize,
    pub split_classes: Vec<String>,
    pub eval_format: EvalFormat,
    pub paths: BTreeMap<String, PathBuf>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            seed: 1,
            workers: 0,
            thresholds: Thresholds::default(),
            lang_target: "fi".into(),
            lang_samples: BTreeMap::new(),
            svm_lambda: 1e-4,
            svm_epochs: 10,
            svm_threshold: 0.0,
            svm_features: FeatureSpace::Lexical,
            dedup_n: DEFAULT_SHINGLE_LEN,
            dedup_threshold: 0.25,
            dedup_sources: Source::ALL.to_vec(),
            dedup_mode: DedupMode::Symmetric,
            vocab_size: 50_000,
            casing: CasingMode::Cased,
            max_seq_len: 128,
            max_predictions: None,
            mask_prob: 0.15,
            random_next_prob: 0.5,
            short_seq_prob: 0.1,
            dup_factors: BTreeMap::new(),
            split_train: 0,
            split_dev: 0,
            split_test: 0,
            split_classes: Vec::new(),
            eval_format: EvalFormat::Auto,
            paths: BTreeMap::new(),
        }
    }
}

fn num<T: FromStr>(key: &str, value: &str) -> Result<T, ConfigError>
where
    T::Err: fmt::Display,
{
    value
        .parse()
        .map_err(|e| invalid(key, format!("cannot parse {value:?}: {e}")))
}

fn list(value: &str) -> impl Iterator<Item = &str> {
    value.split(',').map(str::trim).filter(|s| !s.is_empty())
}

fn strict_source(key: &str, name: &str) -> Result<Source, ConfigError> {
    let s = Source::from_name(name);
    if s.as_str() != name {
        return Err(invalid(key, format!("unknown source {name:?}")));
    }
    Ok(s)
}

impl PipelineConfig {
    /// Parses `key = value` lines; `#` starts a comment. Keys not present
    /// keep their defaults.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = PipelineConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or(ConfigError::Syntax { line: i + 1 })?;
            cfg.set(key.trim(), value.trim())?;
        }
        Ok(cfg)
    }

    /// Sets one key.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        match key {
            "seed" => self.seed = num(key, value)?,
            "workers" => self.workers = num(key, value)?,
            "filter.max_digit_ratio" => self.thresholds.max_digit_ratio = num(key, value)?,
            "filter.max_upper_ratio" => self.thresholds.max_upper_ratio = num(key, value)?,
            "filter.max_nontarget_alpha_ratio" => {
                self.thresholds.max_nontarget_alpha_ratio = num(key, value)?
            }
            "filter.min_avg_sentence_len" => self.thresholds.min_avg_sentence_len = num(key, value)?,
            "lang.target" => self.lang_target = value.to_string(),
            "lang.samples" => {
                let mut samples = BTreeMap::new();
                for item in list(value) {
                    let (lang, path) = item
                        .split_once(':')
                        .ok_or_else(|| invalid(key, format!("expected lang:path, got {item:?}")))?;
                    samples.insert(lang.trim().to_string(), PathBuf::from(path.trim()));
                }
                self.lang_samples = samples;
            }
            "lang.min_score" => self.thresholds.min_lang_score = num(key, value)?,
            "svm.lambda" => self.svm_lambda = num(key, value)?,
            "svm.epochs" => self.svm_epochs = num(key, value)?,
            "svm.threshold" => self.svm_threshold = num(key, value)?,
            "svm.features" => {
                self.svm_features = match value {
                    "lexical" => FeatureSpace::Lexical,
                    "delexicalized" => FeatureSpace::Delexicalized,
                    _ => return Err(invalid(key, "expected lexical or delexicalized")),
                }
            }
            "dedup.n" => self.dedup_n = num(key, value)?,
            "dedup.threshold" => self.dedup_threshold = num(key, value)?,
            "dedup.sources" => {
                self.dedup_sources = list(value)
                    .map(|s| strict_source(key, s))
                    .collect::<Result<_, _>>()?
            }
            "dedup.mode" => {
                self.dedup_mode = match value {
                    "symmetric" => DedupMode::Symmetric,
                    "keep-first" => DedupMode::KeepFirst,
                    _ => return Err(invalid(key, "expected symmetric or keep-first")),
                }
            }
            "vocab.size" => self.vocab_size = num(key, value)?,
            "vocab.casing" => self.casing = value.parse().map_err(|_| invalid(key, "expected cased or uncased"))?,
            "pregen.max_seq_len" => self.max_seq_len = num(key, value)?,
            "pregen.max_predictions" => {
                self.max_predictions = if value == "auto" { None } else { Some(num(key, value)?) }
            }
            "pregen.mask_prob" => self.mask_prob = num(key, value)?,
            "pregen.random_next_prob" => self.random_next_prob = num(key, value)?,
            "pregen.short_seq_prob" => self.short_seq_prob = num(key, value)?,
            "pregen.dup_factors" => {
                let mut factors = BTreeMap::new();
                for item in list(value) {
                    let (s, f) = item
                        .split_once(':')
                        .ok_or_else(|| invalid(key, format!("expected source:count, got {item:?}")))?;
                    factors.insert(strict_source(key, s.trim())?, num(key, f.trim())?);
                }
                self.dup_factors = factors;
            }
            "split.train" => self.split_train = num(key, value)?,
            "split.dev" => self.split_dev = num(key, value)?,
            "split.test" => self.split_test = num(key, value)?,
            "split.classes" => self.split_classes = list(value).map(str::to_string).collect(),
            "eval.format" => {
                self.eval_format = match value {
                    "auto" => EvalFormat::Auto,
                    "conllu" => EvalFormat::Conllu,
                    "conll" => EvalFormat::Conll,
                    _ => return Err(invalid(key, "expected auto, conllu or conll")),
                }
            }
            _ => match key.strip_prefix("paths.") {
                Some(name) if CONFIG_KEYS.iter().any(|(k, _, _)| *k == key) => {
                    if value.is_empty() {
                        self.paths.remove(name);
                    } else {
                        self.paths.insert(name.to_string(), PathBuf::from(value));
                    }
                }
                _ => return Err(ConfigError::UnknownKey(key.to_string())),
            },
        }
        Ok(())
    }

    pub fn path(&self, name: &str) -> Option<&Path> {
        self.paths.get(name).map(PathBuf::as_path)
    }

    pub fn gen_config(&self) -> GenConfig {
        let mut g = GenConfig::for_seq_len(self.max_seq_len);
        if let Some(m) = self.max_predictions {
            g.max_predictions = m;
        }
        g.mask_prob = self.mask_prob;
        g.random_next_prob = self.random_next_prob;
        g.short_seq_prob = self.short_seq_prob;
        g.dup_factors = self.dup_factors.clone();
        g.seed = self.seed;
        g
    }

    pub fn split_spec(&self) -> SplitSpec {
        SplitSpec {
            train_per_class: self.split_train,
            dev_per_class: self.split_dev,
            test_per_class: self.split_test,
            classes: self.split_classes.clone(),
        }
    }

    /// Checks every module-level invariant that does not depend on the
    /// stage being run.
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.thresholds.validate().map_err(|e| invalid("filter", e.to_string()))?;
        if !(self.svm_lambda > 0.0 && self.svm_lambda.is_finite()) {
            return Err(invalid("svm.lambda", "must be positive"));
        }
        if !self.svm_threshold.is_finite() {
            return Err(invalid("svm.threshold", "must be finite"));
        }
        if self.dedup_n == 0 {
            return Err(invalid("dedup.n", "must be at least 1"));
        }
        if !(self.dedup_threshold.is_finite() && self.dedup_threshold >= 0.0) {
            return Err(invalid("dedup.threshold", "must be a non-negative number"));
        }
        let min_vocab = crate::vocab::SPECIAL_TOKENS.len() + 1;
        if self.vocab_size < min_vocab {
            return Err(invalid("vocab.size", format!("must be at least {min_vocab}")));
        }
        self.gen_config()
            .validate()
            .map_err(|e| invalid("pregen", e.to_string()))?;
        Ok(())
    }
}
