use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use corpusprep::pipeline::{run_stage, PipelineConfig, Stage, StageReport};

/// Corpus preparation pipeline: filtering, deduplication, vocabulary
/// training and pretraining example generation.
#[derive(Parser, Debug)]
#[command(name = "corpusprep", version)]
struct Cli {
    /// Configuration file of `key = value` lines.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the `seed` key.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides the `workers` key; 0 uses every core.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Print the report as JSON.
    #[arg(long, global = true)]
    json: bool,
    /// Overrides any config key, e.g. `--set dedup.threshold=0.3`.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Default)]
struct InOut {
    /// Input file.
    #[arg(short, long)]
    input: Option<PathBuf>,
    /// Output file or directory.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Per-source document, sentence, token and character counts.
    Stats {
        #[arg(short, long)]
        input: Option<PathBuf>,
    },
    /// Character-class and sentence-length heuristics.
    Clean(InOut),
    /// Train trigram language profiles from `lang.samples`.
    LangTrain {
        /// Sample as LANG=PATH; repeatable.
        #[arg(long = "sample", value_name = "LANG=PATH")]
        samples: Vec<String>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Keep documents detected as the target language.
    Langfilter {
        #[command(flatten)]
        io: InOut,
        #[arg(long)]
        profiles: Option<PathBuf>,
    },
    /// Train the linear quality classifier on labeled documents.
    SvmTrain(InOut),
    /// Keep documents the linear classifier scores above the threshold.
    Svmfilter {
        #[command(flatten)]
        io: InOut,
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Remove documents with a high share of repeated shingles.
    Dedup {
        #[command(flatten)]
        io: InOut,
        /// Per-document duplication report (JSON lines).
        #[arg(long)]
        dup_report: Option<PathBuf>,
        /// Binary shingle index.
        #[arg(long)]
        index: Option<PathBuf>,
    },
    /// Train vocab.txt and merges.txt into the output directory.
    VocabTrain(InOut),
    /// Split documents into sentences of piece ids.
    Encode {
        #[command(flatten)]
        io: InOut,
        #[arg(long)]
        vocab: Option<PathBuf>,
    },
    /// Pieces and unknown pieces per token.
    Coverage {
        #[arg(short, long)]
        input: Option<PathBuf>,
        #[arg(long)]
        vocab: Option<PathBuf>,
        /// Also report BPE segmentation with this merge table.
        #[arg(long)]
        merges: Option<PathBuf>,
    },
    /// Masked LM and next sentence examples from encoded documents.
    Pregen {
        #[command(flatten)]
        io: InOut,
        #[arg(long)]
        vocab: Option<PathBuf>,
        /// Print per-source example counts.
        #[arg(long)]
        stats: bool,
    },
    /// Balanced chronological train/dev/test split.
    Split(InOut),
    /// UPOS/LAS on CoNLL-U or mention F1 on CoNLL files.
    Eval {
        #[arg(long)]
        gold: Option<PathBuf>,
        #[arg(long)]
        pred: Option<PathBuf>,
        /// auto, conllu or conll.
        #[arg(long)]
        format: Option<String>,
    },
    /// clean, langfilter, svmfilter, dedup, vocab-train, encode, coverage
    /// and pregen in one run, writing into the output directory.
    All {
        #[command(flatten)]
        io: InOut,
        #[arg(long)]
        profiles: Option<PathBuf>,
        #[arg(long)]
        model: Option<PathBuf>,
    },
}

fn set_path(cfg: &mut PipelineConfig, name: &str, value: Option<PathBuf>) {
    if let Some(p) = value {
        cfg.paths.insert(name.to_string(), p);
    }
}

fn set_io(cfg: &mut PipelineConfig, io: InOut) {
    set_path(cfg, "input", io.input);
    set_path(cfg, "output", io.output);
}

/// Applies the subcommand's flags and returns the stage to run.
fn apply_command(cfg: &mut PipelineConfig, command: Command) -> anyhow::Result<(Stage, bool)> {
    let stage = match command {
        Command::Stats { input } => {
            set_path(cfg, "input", input);
            Stage::Stats
        }
        Command::Clean(io) => {
            set_io(cfg, io);
            Stage::Clean
        }
        Command::LangTrain { samples, output } => {
            for s in samples {
                let (lang, path) = s
                    .split_once('=')
                    .ok_or_else(|| anyhow!("--sample expects LANG=PATH, got {s:?}"))?;
                cfg.lang_samples.insert(lang.to_string(), PathBuf::from(path));
            }
            set_path(cfg, "output", output);
            Stage::LangTrain
        }
        Command::Langfilter { io, profiles } => {
            set_io(cfg, io);
            set_path(cfg, "profiles", profiles);
            Stage::LangFilter
        }
        Command::SvmTrain(io) => {
            set_io(cfg, io);
            Stage::SvmTrain
        }
        Command::Svmfilter { io, model } => {
            set_io(cfg, io);
            set_path(cfg, "model", model);
            Stage::SvmFilter
        }
        Command::Dedup { io, dup_report, index } => {
            set_io(cfg, io);
            set_path(cfg, "dup_report", dup_report);
            set_path(cfg, "index", index);
            Stage::Dedup
        }
        Command::VocabTrain(io) => {
            set_io(cfg, io);
            Stage::VocabTrain
        }
        Command::Encode { io, vocab } => {
            set_io(cfg, io);
            set_path(cfg, "vocab", vocab);
            Stage::Encode
        }
        Command::Coverage { input, vocab, merges } => {
            set_path(cfg, "input", input);
            set_path(cfg, "vocab", vocab);
            set_path(cfg, "merges", merges);
            Stage::Coverage
        }
        Command::Pregen { io, vocab, stats } => {
            set_io(cfg, io);
            set_path(cfg, "vocab", vocab);
            return Ok((Stage::Pregen, stats));
        }
        Command::Split(io) => {
            set_io(cfg, io);
            Stage::Split
        }
        Command::Eval { gold, pred, format } => {
            set_path(cfg, "gold", gold);
            set_path(cfg, "pred", pred);
            if let Some(f) = format {
                cfg.set("eval.format", &f)?;
            }
            Stage::Eval
        }
        Command::All { io, profiles, model } => {
            set_io(cfg, io);
            set_path(cfg, "profiles", profiles);
            set_path(cfg, "model", model);
            Stage::All
        }
    };
    Ok((stage, true))
}

fn build_config(cli: Cli) -> anyhow::Result<(PipelineConfig, Stage, bool, bool)> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("cannot read config {}", path.display()))?;
            PipelineConfig::parse(&text).with_context(|| format!("in {}", path.display()))?
        }
        None => PipelineConfig::default(),
    };
    for kv in &cli.overrides {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| anyhow!("--set expects KEY=VALUE, got {kv:?}"))?;
        cfg.set(k.trim(), v.trim())?;
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(workers) = cli.workers {
        cfg.workers = workers;
    }
    let (stage, show_text) = apply_command(&mut cfg, cli.command)?;
    Ok((cfg, stage, cli.json, show_text))
}

fn print_report(report: &StageReport, json: bool, show_text: bool) {
    if json {
        println!("{}", report.to_json());
    } else if show_text {
        print!("{}", report.render_text());
    } else {
        let mut r = report.clone();
        r.text = None;
        print!("{}", r.render_text());
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => e.exit(),
    };
    let (cfg, stage, json, show_text) = match build_config(cli) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    match run_stage(stage, &cfg) {
        Ok(report) => {
            print_report(&report, json, show_text);
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
