//! Batch pipeline: every stage reads its inputs from files named in the
//! configuration, writes its outputs atomically and returns a
//! machine-readable report.

mod config;
mod output;
mod stages;

use std::collections::BTreeMap;
use std::fmt;
use std::io;
use std::path::PathBuf;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::corpus::CorpusError;
use crate::dedup::DedupError;
use crate::evalmetrics::EvalError;
use crate::filter::FilterError;
use crate::pregen::PregenError;
use crate::vocab::VocabError;

pub use config::{ConfigError, EvalFormat, PipelineConfig, CONFIG_KEYS};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: {source}")]
    Corpus { path: PathBuf, source: CorpusError },
    #[error(transparent)]
    Filter(#[from] FilterError),
    #[error(transparent)]
    Dedup(#[from] DedupError),
    #[error(transparent)]
    Vocab(#[from] VocabError),
    #[error(transparent)]
    Pregen(#[from] PregenError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Document(#[from] CorpusError),
    #[error("cannot start worker pool: {0}")]
    Pool(String),
}

impl PipelineError {
    /// 2 for configuration and usage problems, 1 for processing failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_) | PipelineError::Usage(_) => 2,
            _ => 1,
        }
    }
}

pub(crate) fn io_err(path: impl Into<PathBuf>) -> impl FnOnce(io::Error) -> PipelineError {
    let path = path.into();
    move |source| PipelineError::Io { path, source }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Stage {
    Stats,
    Clean,
    LangTrain,
    LangFilter,
    SvmTrain,
    SvmFilter,
    Dedup,
    VocabTrain,
    Encode,
    Coverage,
    Pregen,
    Split,
    Eval,
    All,
}

impl Stage {
    pub const ALL: [Stage; 14] = [
        Stage::Stats,
        Stage::Clean,
        Stage::LangTrain,
        Stage::LangFilter,
        Stage::SvmTrain,
        Stage::SvmFilter,
        Stage::Dedup,
        Stage::VocabTrain,
        Stage::Encode,
        Stage::Coverage,
        Stage::Pregen,
        Stage::Split,
        Stage::Eval,
        Stage::All,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Stage::Stats => "stats",
            Stage::Clean => "clean",
            Stage::LangTrain => "lang-train",
            Stage::LangFilter => "langfilter",
            Stage::SvmTrain => "svm-train",
            Stage::SvmFilter => "svmfilter",
            Stage::Dedup => "dedup",
            Stage::VocabTrain => "vocab-train",
            Stage::Encode => "encode",
            Stage::Coverage => "coverage",
            Stage::Pregen => "pregen",
            Stage::Split => "split",
            Stage::Eval => "eval",
            Stage::All => "all",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Stage {
    type Err = PipelineError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Stage::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| PipelineError::Usage(format!("unknown stage {s:?}")))
    }
}

/// What a stage did.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StageReport {
    pub stage: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input_docs: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_docs: Option<usize>,
    /// Rejected documents per reason.
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub rejected: BTreeMap<String, usize>,
    pub outputs: Vec<String>,
    #[serde(skip_serializing_if = "serde_json::Value::is_null")]
    pub details: serde_json::Value,
    /// Human-readable summary.
    #[serde(skip)]
    pub text: Option<String>,
}

impl StageReport {
    pub(crate) fn new(stage: Stage) -> Self {
        StageReport {
            stage: stage.name().to_string(),
            input_docs: None,
            output_docs: None,
            rejected: BTreeMap::new(),
            outputs: Vec::new(),
            details: serde_json::Value::Null,
            text: None,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports always serialize")
    }

    pub fn render_text(&self) -> String {
        let mut out = format!("stage: {}\n", self.stage);
        if let Some(n) = self.input_docs {
            out += &format!("input documents: {n}\n");
        }
        if let Some(n) = self.output_docs {
            out += &format!("output documents: {n}\n");
        }
        for (reason, n) in &self.rejected {
            out += &format!("rejected ({reason}): {n}\n");
        }
        for path in &self.outputs {
            out += &format!("wrote {path}\n");
        }
        if let Some(text) = &self.text {
            out += text;
            if !text.ends_with('\n') {
                out.push('\n');
            }
        }
        out
    }
}

/// Validates `cfg` and runs `stage` on a worker pool of `cfg.workers`
/// threads. Output files appear only if the stage succeeds.
pub fn run_stage(stage: Stage, cfg: &PipelineConfig) -> Result<StageReport, PipelineError> {
    cfg.validate()?;
    stages::check_inputs(stage, cfg)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| PipelineError::Pool(e.to_string()))?;
    pool.install(|| stages::run(stage, cfg))
}
