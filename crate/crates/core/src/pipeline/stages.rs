use std::collections::{BTreeMap, HashMap};
use std::fs::{self, File};
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde_json::json;

use super::config::{ConfigError, EvalFormat, PipelineConfig};
use super::output::Outputs;
use super::{io_err, PipelineError, Stage, StageReport};
use crate::corpus::{
    balanced_chronological_split, corpus_stats, read_documents, write_documents, CorpusError, Document,
    SentenceSplitter,
};
use crate::dedup::{build_shingle_index, dedup_filter, dedup_filter_keep_first, DedupMode, DupGroup, DupReport};
use crate::evalmetrics::{
    detect_scheme, las, mention_prf, read_conll_tags, read_conllu, upos_accuracy, uas, DepGraph,
    TaggedSentence,
};
use crate::filter::{
    heuristic_filter, lexical_features, read_profiles, score_linear, sentence_lengths, svm_objective,
    train_language_profiles, train_linear_svm, write_profiles, FeatureSpace, FilterVerdict,
    LanguageDetector, LinearModel, Reason, SparseVector,
};
use crate::pregen::{create_instances, serialize_examples, GenOutput, PieceDocument, PregenError};
use crate::vocab::{
    basic_tokenize, bpe_coverage_stats, coverage_stats, train_bpe, MergeTable, Vocab,
};

fn missing(name: &str, message: impl Into<String>) -> PipelineError {
    PipelineError::Config(ConfigError::Invalid {
        key: format!("paths.{name}"),
        message: message.into(),
    })
}

fn required<'a>(cfg: &'a PipelineConfig, name: &str) -> Result<&'a Path, PipelineError> {
    cfg.path(name)
        .ok_or_else(|| missing(name, "required by this stage"))
}

fn existing<'a>(cfg: &'a PipelineConfig, name: &str) -> Result<&'a Path, PipelineError> {
    let p = required(cfg, name)?;
    if !p.exists() {
        return Err(missing(name, format!("{} does not exist", p.display())));
    }
    Ok(p)
}

fn existing_if_set(cfg: &PipelineConfig, name: &str) -> Result<(), PipelineError> {
    if cfg.path(name).is_some() {
        existing(cfg, name)?;
    }
    Ok(())
}

/// Verifies that every path the stage reads exists and every path it
/// writes is named.
pub(crate) fn check_inputs(stage: Stage, cfg: &PipelineConfig) -> Result<(), PipelineError> {
    match stage {
        Stage::Eval => {
            existing(cfg, "gold")?;
            existing(cfg, "pred")?;
            return Ok(());
        }
        Stage::LangTrain => {
            if cfg.lang_samples.is_empty() {
                return Err(ConfigError::Invalid {
                    key: "lang.samples".into(),
                    message: "at least one sample is required".into(),
                }
                .into());
            }
            for (lang, p) in &cfg.lang_samples {
                if !p.exists() {
                    return Err(ConfigError::Invalid {
                        key: "lang.samples".into(),
                        message: format!("sample for {lang}: {} does not exist", p.display()),
                    }
                    .into());
                }
            }
        }
        _ => {
            existing(cfg, "input")?;
        }
    }
    match stage {
        Stage::LangFilter => {
            existing(cfg, "profiles")?;
        }
        Stage::SvmFilter => {
            existing(cfg, "model")?;
        }
        Stage::Encode | Stage::Pregen => {
            existing(cfg, "vocab")?;
        }
        Stage::Coverage => {
            existing(cfg, "vocab")?;
            existing_if_set(cfg, "merges")?;
        }
        Stage::Split => {
            cfg.split_spec().validate().map_err(|e| ConfigError::Invalid {
                key: "split".into(),
                message: e.to_string(),
            })?;
        }
        Stage::All => {
            existing_if_set(cfg, "profiles")?;
            existing_if_set(cfg, "model")?;
        }
        _ => {}
    }
    if !matches!(stage, Stage::Stats | Stage::Coverage) {
        required(cfg, "output")?;
    }
    Ok(())
}

fn load_docs(path: &Path) -> Result<Vec<Document>, PipelineError> {
    let file = File::open(path).map_err(io_err(path))?;
    read_documents(BufReader::new(file))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|source| PipelineError::Corpus {
            path: path.to_path_buf(),
            source,
        })
}

fn write_docs(outs: &mut Outputs, path: &Path, docs: &[Document]) -> Result<(), PipelineError> {
    outs.write(path, |w| {
        write_documents(w, docs).map_err(io_err(path))?;
        Ok(())
    })
}

fn load_vocab(path: &Path, cfg: &PipelineConfig) -> Result<Vocab, PipelineError> {
    let file = File::open(path).map_err(io_err(path))?;
    Ok(Vocab::read(BufReader::new(file), cfg.casing)?)
}

fn load_merges(path: &Path) -> Result<MergeTable, PipelineError> {
    let file = File::open(path).map_err(io_err(path))?;
    Ok(MergeTable::read(BufReader::new(file))?)
}

fn names(paths: Vec<PathBuf>) -> Vec<String> {
    paths.into_iter().map(|p| p.display().to_string()).collect()
}

fn histogram(verdicts: &[FilterVerdict]) -> BTreeMap<String, usize> {
    let mut h = BTreeMap::new();
    for v in verdicts.iter().filter(|v| !v.kept) {
        *h.entry(v.reason.as_str().to_string()).or_insert(0) += 1;
    }
    h
}

fn keep_by(docs: &[Document], verdicts: &[FilterVerdict]) -> Vec<Document> {
    docs.iter()
        .zip(verdicts)
        .filter(|(_, v)| v.kept)
        .map(|(d, _)| d.clone())
        .collect()
}

fn filter_report(stage: Stage, docs: &[Document], verdicts: &[FilterVerdict], kept: usize) -> StageReport {
    let mut r = StageReport::new(stage);
    r.input_docs = Some(docs.len());
    r.output_docs = Some(kept);
    r.rejected = histogram(verdicts);
    r
}

fn stats(docs: &[Document]) -> StageReport {
    let report = corpus_stats(docs);
    let mut r = StageReport::new(Stage::Stats);
    r.input_docs = Some(docs.len());
    r.text = Some(report.render_table(true));
    r.details = serde_json::to_value(&report).expect("stats serialize");
    r
}

fn clean(docs: &[Document], cfg: &PipelineConfig) -> (Vec<Document>, StageReport) {
    let splitter = SentenceSplitter::default();
    let verdicts: Vec<FilterVerdict> = docs
        .par_iter()
        .map(|d| heuristic_filter(d, &cfg.thresholds, &sentence_lengths(&d.text, &splitter)))
        .collect();
    let kept = keep_by(docs, &verdicts);
    let r = filter_report(Stage::Clean, docs, &verdicts, kept.len());
    (kept, r)
}

fn lang_filter(
    docs: &[Document],
    detector: &LanguageDetector,
    cfg: &PipelineConfig,
) -> (Vec<Document>, StageReport) {
    let results: Vec<(FilterVerdict, String)> = docs
        .par_iter()
        .map(|d| match detector.detect(&d.text) {
            Ok(det) if det.lang == cfg.lang_target && det.score >= cfg.thresholds.min_lang_score => {
                (FilterVerdict::keep(Some(det.score)), det.lang)
            }
            Ok(det) => (FilterVerdict::reject(Reason::Language, det.score), det.lang),
            Err(_) => (FilterVerdict::reject(Reason::Language, 0.0), "unknown".to_string()),
        })
        .collect();
    let mut detected: BTreeMap<&str, usize> = BTreeMap::new();
    for (_, lang) in &results {
        *detected.entry(lang).or_insert(0) += 1;
    }
    let verdicts: Vec<FilterVerdict> = results.iter().map(|(v, _)| *v).collect();
    let kept = keep_by(docs, &verdicts);
    let mut r = filter_report(Stage::LangFilter, docs, &verdicts, kept.len());
    r.details = json!({ "detected": detected });
    (kept, r)
}

fn doc_features(doc: &Document, space: FeatureSpace) -> Result<SparseVector, PipelineError> {
    match space {
        FeatureSpace::Lexical => Ok(lexical_features(&doc.text)),
        FeatureSpace::Delexicalized => {
            let bad = |message: String| {
                PipelineError::Document(CorpusError::InvalidDocument {
                    id: doc.id.clone(),
                    message,
                })
            };
            let raw = doc
                .meta
                .get("features")
                .ok_or_else(|| bad("missing meta.features".into()))?;
            let pairs = raw
                .split_whitespace()
                .map(|item| {
                    let (k, v) = item.split_once(':')?;
                    Some((k.parse::<u32>().ok()?, v.parse::<f64>().ok().filter(|v| v.is_finite())?))
                })
                .collect::<Option<Vec<_>>>()
                .ok_or_else(|| bad(format!("malformed features {raw:?}")))?;
            Ok(SparseVector::from_pairs(pairs))
        }
    }
}

fn svm_filter(
    docs: &[Document],
    model: &LinearModel,
    cfg: &PipelineConfig,
) -> Result<(Vec<Document>, StageReport), PipelineError> {
    let verdicts = docs
        .par_iter()
        .map(|d| {
            let score = score_linear(model, &doc_features(d, model.feature_space)?);
            Ok(if score >= cfg.svm_threshold {
                FilterVerdict::keep(Some(score))
            } else {
                FilterVerdict::reject(Reason::Classifier, score)
            })
        })
        .collect::<Result<Vec<_>, PipelineError>>()?;
    let kept = keep_by(docs, &verdicts);
    let r = filter_report(Stage::SvmFilter, docs, &verdicts, kept.len());
    Ok((kept, r))
}

/// `+1`, `1`, `pos`, `good` are positive; `-1`, `neg`, `bad` negative.
fn parse_label(doc: &Document) -> Result<i8, PipelineError> {
    let label = doc.label.as_deref().unwrap_or("");
    match label {
        "+1" | "1" | "pos" | "good" => Ok(1),
        "-1" | "neg" | "bad" => Ok(-1),
        _ => Err(PipelineError::Document(CorpusError::InvalidDocument {
            id: doc.id.clone(),
            message: format!("label {label:?} is not a binary class"),
        })),
    }
}

fn svm_train(docs: &[Document], cfg: &PipelineConfig) -> Result<(LinearModel, StageReport), PipelineError> {
    let examples = docs
        .iter()
        .map(|d| Ok((parse_label(d)?, doc_features(d, cfg.svm_features)?)))
        .collect::<Result<Vec<_>, PipelineError>>()?;
    let mut model = train_linear_svm(&examples, cfg.svm_lambda, cfg.svm_epochs, cfg.seed)?;
    model.feature_space = cfg.svm_features;
    let correct = examples
        .iter()
        .filter(|(y, x)| (score_linear(&model, x) >= 0.0) == (*y > 0))
        .count();
    let mut r = StageReport::new(Stage::SvmTrain);
    r.input_docs = Some(docs.len());
    r.details = json!({
        "objective": svm_objective(&model, &examples, cfg.svm_lambda),
        "training_accuracy": correct as f64 / examples.len() as f64,
    });
    Ok((model, r))
}

struct DedupResult {
    kept: Vec<Document>,
    reports: Vec<DupReport>,
    index: crate::dedup::ShingleIndex,
    report: StageReport,
}

fn dedup(docs: &[Document], cfg: &PipelineConfig) -> Result<DedupResult, PipelineError> {
    let scored: Vec<usize> = (0..docs.len())
        .filter(|&i| cfg.dedup_sources.contains(&docs[i].source))
        .collect();
    let subset: Vec<Document> = scored.iter().map(|&i| docs[i].clone()).collect();
    let index = build_shingle_index(&subset, cfg.dedup_n)?;
    let reports = match cfg.dedup_mode {
        DedupMode::Symmetric => dedup_filter(&subset, &index, cfg.dedup_threshold)?.1,
        DedupMode::KeepFirst => dedup_filter_keep_first(&subset, cfg.dedup_n, cfg.dedup_threshold)?.1,
    };
    let mut removed = vec![false; docs.len()];
    for (&i, rep) in scored.iter().zip(&reports) {
        removed[i] = rep.ratio >= cfg.dedup_threshold;
    }
    let kept: Vec<Document> = docs
        .iter()
        .zip(&removed)
        .filter(|(_, &r)| !r)
        .map(|(d, _)| d.clone())
        .collect();
    let mut groups: BTreeMap<&str, usize> = [DupGroup::None, DupGroup::Low, DupGroup::Medium, DupGroup::High]
        .iter()
        .map(|g| (g.label(), 0))
        .collect();
    for rep in &reports {
        *groups.entry(rep.group.label()).or_insert(0) += 1;
    }
    let mut report = StageReport::new(Stage::Dedup);
    report.input_docs = Some(docs.len());
    report.output_docs = Some(kept.len());
    let n_removed = docs.len() - kept.len();
    if n_removed > 0 {
        report.rejected.insert("duplicate".into(), n_removed);
    }
    report.details = json!({
        "scored_docs": subset.len(),
        "distinct_shingles": index.len(),
        "groups": groups,
    });
    Ok(DedupResult {
        kept,
        reports,
        index,
        report,
    })
}

fn write_dup_reports(outs: &mut Outputs, path: &Path, reports: &[DupReport]) -> Result<(), PipelineError> {
    outs.write(path, |w| {
        for rep in reports {
            let line = serde_json::to_string(rep).expect("reports serialize");
            writeln!(w, "{line}").map_err(io_err(path))?;
        }
        Ok(())
    })
}

fn vocab_train(docs: &[Document], cfg: &PipelineConfig) -> Result<(Vocab, MergeTable, StageReport), PipelineError> {
    let counts: HashMap<String, u64> = docs
        .par_iter()
        .fold(HashMap::new, |mut acc: HashMap<String, u64>, d| {
            for t in basic_tokenize(&d.text, cfg.casing) {
                *acc.entry(t).or_insert(0) += 1;
            }
            acc
        })
        .reduce(HashMap::new, |mut a, b| {
            for (t, c) in b {
                *a.entry(t).or_insert(0) += c;
            }
            a
        });
    let (vocab, merges) = train_bpe(&counts, cfg.vocab_size, cfg.casing)?;
    let mut r = StageReport::new(Stage::VocabTrain);
    r.input_docs = Some(docs.len());
    r.details = json!({
        "distinct_tokens": counts.len(),
        "vocab_size": vocab.len(),
        "merges": merges.len(),
        "casing": cfg.casing.to_string(),
    });
    Ok((vocab, merges, r))
}

fn write_vocab(outs: &mut Outputs, dir: &Path, vocab: &Vocab, merges: &MergeTable) -> Result<(), PipelineError> {
    let vp = dir.join("vocab.txt");
    outs.write(&vp, |w| vocab.write(w).map_err(io_err(&vp)))?;
    let mp = dir.join("merges.txt");
    outs.write(&mp, |w| merges.write(w).map_err(io_err(&mp)))
}

fn encode(docs: &[Document], vocab: &Vocab) -> (Vec<PieceDocument>, StageReport) {
    let splitter = SentenceSplitter::default();
    let encoded: Vec<PieceDocument> = docs
        .par_iter()
        .map(|d| PieceDocument::encode(d, vocab, &splitter))
        .collect();
    let mut r = StageReport::new(Stage::Encode);
    r.input_docs = Some(docs.len());
    r.output_docs = Some(encoded.len());
    r.details = json!({
        "sentences": encoded.iter().map(|d| d.sentences.len()).sum::<usize>(),
        "pieces": encoded.iter().map(PieceDocument::num_pieces).sum::<usize>(),
    });
    (encoded, r)
}

fn write_encoded(outs: &mut Outputs, path: &Path, docs: &[PieceDocument]) -> Result<(), PipelineError> {
    outs.write(path, |w| {
        for d in docs {
            let line = serde_json::to_string(d).expect("piece documents serialize");
            writeln!(w, "{line}").map_err(io_err(path))?;
        }
        Ok(())
    })
}

fn load_encoded(path: &Path) -> Result<Vec<PieceDocument>, PipelineError> {
    let file = File::open(path).map_err(io_err(path))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| PregenError::Parse {
            line: i + 1,
            message: e.to_string(),
        })?);
    }
    Ok(out)
}

fn coverage(docs: &[Document], vocab: &Vocab, merges: Option<&MergeTable>) -> Result<StageReport, PipelineError> {
    let texts = || docs.iter().map(|d| d.text.as_str());
    let wp = coverage_stats(texts(), vocab)?;
    let mut text = format!(
        "wordpiece: {:.4} pieces/token, {:.4} unk/token over {} tokens\n",
        wp.pieces_per_token, wp.unk_per_token, wp.tokens
    );
    let mut details = json!({ "wordpiece": wp });
    if let Some(m) = merges {
        let bpe = bpe_coverage_stats(texts(), m, vocab)?;
        text += &format!(
            "bpe: {:.4} pieces/token, {:.4} unk/token over {} tokens\n",
            bpe.pieces_per_token, bpe.unk_per_token, bpe.tokens
        );
        details["bpe"] = serde_json::to_value(bpe).expect("coverage serializes");
    }
    let mut r = StageReport::new(Stage::Coverage);
    r.input_docs = Some(docs.len());
    r.details = details;
    r.text = Some(text);
    Ok(r)
}

fn pregen(docs: &[PieceDocument], vocab: &Vocab, cfg: &PipelineConfig) -> Result<(GenOutput, StageReport), PipelineError> {
    let out = create_instances(docs, &cfg.gen_config(), vocab)?;
    let mut text = format!("{:<12}{:>8}{:>8}{:>10}{:>12}\n", "source", "docs", "passes", "examples", "suggested");
    for (source, s) in &out.stats.sources {
        let suggested = out.stats.suggested_dup_factors.get(source).copied().unwrap_or(0);
        text += &format!(
            "{:<12}{:>8}{:>8}{:>10}{:>12}\n",
            source.as_str(),
            s.docs,
            s.passes,
            s.examples,
            suggested
        );
    }
    let mut r = StageReport::new(Stage::Pregen);
    r.input_docs = Some(docs.len());
    r.details = serde_json::to_value(&out.stats).expect("stats serialize");
    r.text = Some(text);
    Ok((out, r))
}

fn eval(cfg: &PipelineConfig) -> Result<StageReport, PipelineError> {
    let gold_path = existing(cfg, "gold")?;
    let pred_path = existing(cfg, "pred")?;
    let mut r = StageReport::new(Stage::Eval);
    match cfg.eval_format.resolve(gold_path) {
        EvalFormat::Conllu => {
            let (gs, gg): (Vec<TaggedSentence>, Vec<DepGraph>) = read_conllu(gold_path)?.into_iter().unzip();
            let (ps, pg): (Vec<TaggedSentence>, Vec<DepGraph>) = read_conllu(pred_path)?.into_iter().unzip();
            let upos = upos_accuracy(&gs, &ps)?;
            let las_v = las(&gg, &pg)?;
            let uas_v = uas(&gg, &pg)?;
            r.details = json!({
                "format": "conllu",
                "sentences": gs.len(),
                "tokens": gs.iter().map(TaggedSentence::len).sum::<usize>(),
                "upos": upos,
                "las": las_v,
                "uas": uas_v,
            });
            r.text = Some(format!(
                "UPOS {:.2}  UAS {:.2}  LAS {:.2}\n",
                upos * 100.0,
                uas_v * 100.0,
                las_v * 100.0
            ));
        }
        _ => {
            let gold = read_conll_tags(gold_path)?;
            let pred = read_conll_tags(pred_path)?;
            let prf = mention_prf(&gold, &pred)?;
            let gold_scheme = detect_scheme(gold.iter().map(|s| s.tags.as_slice()));
            let pred_scheme = detect_scheme(pred.iter().map(|s| s.tags.as_slice()));
            r.details = json!({
                "format": "conll",
                "sentences": gold.len(),
                "gold_scheme": gold_scheme,
                "pred_scheme": pred_scheme,
                "precision": prf.precision,
                "recall": prf.recall,
                "f1": prf.f1,
                "gold_mentions": prf.gold_mentions,
                "pred_mentions": prf.pred_mentions,
                "correct": prf.correct,
            });
            r.text = Some(format!(
                "precision {:.2}  recall {:.2}  F1 {:.2}  (gold {gold_scheme}, predicted {pred_scheme})\n",
                prf.precision * 100.0,
                prf.recall * 100.0,
                prf.f1 * 100.0
            ));
        }
    }
    Ok(r)
}

/// Fixed file names used by `all`.
pub(crate) mod files {
    pub const CLEANED: &str = "cleaned.jsonl";
    pub const LANGFILTERED: &str = "langfiltered.jsonl";
    pub const SVMFILTERED: &str = "svmfiltered.jsonl";
    pub const DEDUPED: &str = "deduped.jsonl";
    pub const DUP_REPORT: &str = "dup_report.jsonl";
    pub const INDEX: &str = "shingles.idx";
    pub const ENCODED: &str = "encoded.jsonl";
    pub const EXAMPLES: &str = "examples.jsonl";
    pub const REPORT: &str = "report.json";
}

fn run_all(cfg: &PipelineConfig) -> Result<StageReport, PipelineError> {
    let input = existing(cfg, "input")?;
    let dir = required(cfg, "output")?;
    let docs = load_docs(input)?;
    let mut outs = Outputs::default();
    let mut reports = vec![stats(&docs)];

    let (mut current, mut r) = clean(&docs, cfg);
    write_docs(&mut outs, &dir.join(files::CLEANED), &current)?;
    r.outputs = vec![files::CLEANED.into()];
    reports.push(r);

    if let Some(p) = cfg.path("profiles") {
        let profiles = read_profiles(File::open(p).map_err(io_err(p))?)?;
        let (kept, mut r) = lang_filter(&current, &LanguageDetector::new(profiles)?, cfg);
        write_docs(&mut outs, &dir.join(files::LANGFILTERED), &kept)?;
        r.outputs = vec![files::LANGFILTERED.into()];
        reports.push(r);
        current = kept;
    }
    if let Some(p) = cfg.path("model") {
        let model = LinearModel::read_json(File::open(p).map_err(io_err(p))?)?;
        let (kept, mut r) = svm_filter(&current, &model, cfg)?;
        write_docs(&mut outs, &dir.join(files::SVMFILTERED), &kept)?;
        r.outputs = vec![files::SVMFILTERED.into()];
        reports.push(r);
        current = kept;
    }

    let mut d = dedup(&current, cfg)?;
    write_docs(&mut outs, &dir.join(files::DEDUPED), &d.kept)?;
    write_dup_reports(&mut outs, &dir.join(files::DUP_REPORT), &d.reports)?;
    let ip = dir.join(files::INDEX);
    outs.write(&ip, |w| Ok(d.index.write(w)?))?;
    d.report.outputs = vec![files::DEDUPED.into(), files::DUP_REPORT.into(), files::INDEX.into()];
    reports.push(d.report);
    let current = d.kept;

    let (vocab, merges, mut r) = vocab_train(&current, cfg)?;
    write_vocab(&mut outs, dir, &vocab, &merges)?;
    r.outputs = vec!["vocab.txt".into(), "merges.txt".into()];
    reports.push(r);

    let (encoded, mut r) = encode(&current, &vocab);
    write_encoded(&mut outs, &dir.join(files::ENCODED), &encoded)?;
    r.outputs = vec![files::ENCODED.into()];
    reports.push(r);

    reports.push(coverage(&current, &vocab, Some(&merges))?);

    let (gen, mut r) = pregen(&encoded, &vocab, cfg)?;
    let ep = dir.join(files::EXAMPLES);
    outs.write(&ep, |w| serialize_examples(w, &gen.examples).map(|_| ()).map_err(Into::into))?;
    r.outputs = vec![files::EXAMPLES.into()];
    reports.push(r);

    let mut all = StageReport::new(Stage::All);
    all.input_docs = Some(docs.len());
    all.output_docs = Some(current.len());
    let mut text = String::new();
    for sub in &reports {
        text += &sub.render_text();
    }
    all.text = Some(text);
    all.details = json!({ "stages": reports });
    let rp = dir.join(files::REPORT);
    let body = serde_json::to_string_pretty(&all.details).expect("reports serialize");
    outs.write(&rp, |w| writeln!(w, "{body}").map_err(io_err(&rp)))?;
    all.outputs = names(outs.commit()?);
    Ok(all)
}

pub(crate) fn run(stage: Stage, cfg: &PipelineConfig) -> Result<StageReport, PipelineError> {
    if stage == Stage::All {
        return run_all(cfg);
    }
    if stage == Stage::Eval {
        return eval(cfg);
    }
    let mut outs = Outputs::default();
    let mut report = match stage {
        Stage::Stats => stats(&load_docs(existing(cfg, "input")?)?),
        Stage::Clean => {
            let docs = load_docs(existing(cfg, "input")?)?;
            let (kept, r) = clean(&docs, cfg);
            write_docs(&mut outs, required(cfg, "output")?, &kept)?;
            r
        }
        Stage::LangTrain => {
            let samples = cfg
                .lang_samples
                .iter()
                .map(|(lang, p)| Ok((lang.clone(), fs::read_to_string(p).map_err(io_err(p))?)))
                .collect::<Result<BTreeMap<String, String>, PipelineError>>()?;
            let profiles = train_language_profiles(&samples)?;
            let out = required(cfg, "output")?;
            outs.write(out, |w| Ok(write_profiles(w, &profiles)?))?;
            let mut r = StageReport::new(Stage::LangTrain);
            r.details = json!({ "languages": samples.keys().collect::<Vec<_>>() });
            r
        }
        Stage::LangFilter => {
            let docs = load_docs(existing(cfg, "input")?)?;
            let p = existing(cfg, "profiles")?;
            let profiles = read_profiles(File::open(p).map_err(io_err(p))?)?;
            let (kept, r) = lang_filter(&docs, &LanguageDetector::new(profiles)?, cfg);
            write_docs(&mut outs, required(cfg, "output")?, &kept)?;
            r
        }
        Stage::SvmTrain => {
            let docs = load_docs(existing(cfg, "input")?)?;
            let (model, r) = svm_train(&docs, cfg)?;
            outs.write(required(cfg, "output")?, |w| Ok(model.write_json(w)?))?;
            r
        }
        Stage::SvmFilter => {
            let docs = load_docs(existing(cfg, "input")?)?;
            let p = existing(cfg, "model")?;
            let model = LinearModel::read_json(File::open(p).map_err(io_err(p))?)?;
            let (kept, r) = svm_filter(&docs, &model, cfg)?;
            write_docs(&mut outs, required(cfg, "output")?, &kept)?;
            r
        }
        Stage::Dedup => {
            let docs = load_docs(existing(cfg, "input")?)?;
            let d = dedup(&docs, cfg)?;
            write_docs(&mut outs, required(cfg, "output")?, &d.kept)?;
            if let Some(p) = cfg.path("dup_report") {
                write_dup_reports(&mut outs, p, &d.reports)?;
            }
            if let Some(p) = cfg.path("index") {
                outs.write(p, |w| Ok(d.index.write(w)?))?;
            }
            d.report
        }
        Stage::VocabTrain => {
            let docs = load_docs(existing(cfg, "input")?)?;
            let (vocab, merges, r) = vocab_train(&docs, cfg)?;
            write_vocab(&mut outs, required(cfg, "output")?, &vocab, &merges)?;
            r
        }
        Stage::Encode => {
            let docs = load_docs(existing(cfg, "input")?)?;
            let vocab = load_vocab(existing(cfg, "vocab")?, cfg)?;
            let (encoded, r) = encode(&docs, &vocab);
            write_encoded(&mut outs, required(cfg, "output")?, &encoded)?;
            r
        }
        Stage::Coverage => {
            let docs = load_docs(existing(cfg, "input")?)?;
            let vocab = load_vocab(existing(cfg, "vocab")?, cfg)?;
            let merges = cfg.path("merges").map(load_merges).transpose()?;
            coverage(&docs, &vocab, merges.as_ref())?
        }
        Stage::Pregen => {
            let docs = load_encoded(existing(cfg, "input")?)?;
            let vocab = load_vocab(existing(cfg, "vocab")?, cfg)?;
            let (gen, r) = pregen(&docs, &vocab, cfg)?;
            outs.write(required(cfg, "output")?, |w| {
                serialize_examples(w, &gen.examples).map(|_| ()).map_err(Into::into)
            })?;
            r
        }
        Stage::Split => {
            let docs = load_docs(existing(cfg, "input")?)?;
            let split = balanced_chronological_split(&docs, &cfg.split_spec(), cfg.seed)?;
            let dir = required(cfg, "output")?;
            for (name, part) in [("train", &split.train), ("dev", &split.dev), ("test", &split.test)] {
                write_docs(&mut outs, &dir.join(format!("{name}.jsonl")), part)?;
            }
            let mut r = StageReport::new(Stage::Split);
            r.input_docs = Some(docs.len());
            r.output_docs = Some(split.train.len() + split.dev.len() + split.test.len());
            r.details = json!({
                "train": split.train.len(),
                "dev": split.dev.len(),
                "test": split.test.len(),
            });
            r
        }
        Stage::Eval | Stage::All => unreachable!("handled above"),
    };
    report.outputs = names(outs.commit()?);
    Ok(report)
}
