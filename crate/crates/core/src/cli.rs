//! Command-line front end: `train`, `predict`, `evaluate`, `analyze` and
//! `gradcheck`.
//!
//! Exit codes: 0 on success, 1 for invalid input or a failed check, 2 for
//! runtime failures such as unreadable files.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use log::{info, warn};

use crate::config::{EncoderMode, TrainConfig};
use crate::conll::{parse_conll_with, write_conll, ParseOptions, Sentence, SyntaxSource};
use crate::embedder::load_pretrained;
use crate::error::{Error, Result};
use crate::evaluator::{self, Report};
use crate::fixtures;
use crate::lexicon::Lexicon;
use crate::model::SrlModel;
use crate::predictions::PredictionSet;
use crate::trainer::{self, TrainOptions};

pub const LOG_ENV: &str = "SYNGCN_LOG";
const GRADCHECK_TOLERANCE: f64 = 1e-4;

#[derive(Debug, Parser)]
#[command(name = "syngcn", version, about = "Semantic role labeling with syntactic graph convolutions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train a model and write checkpoints and a metrics log.
    Train(TrainArgs),
    /// Label a CoNLL-2009 file with a trained model (or an ensemble).
    Predict(PredictArgs),
    /// Score predictions against gold roles.
    Evaluate(EvaluateArgs),
    /// Teleport statistics, distance buckets and relation ablation.
    Analyze(AnalyzeArgs),
    /// Compare analytic and finite-difference gradients of the full model.
    Gradcheck(GradcheckArgs),
}

#[derive(Debug, Args)]
struct ConfigArgs {
    /// Configuration file of `key = value` lines.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    threads: Option<usize>,
    /// Encoder: lstm, lstm+gcn or gcn.
    #[arg(long)]
    mode: Option<EncoderMode>,
    #[arg(long = "gcn-layers")]
    gcn_layers: Option<usize>,
    /// Replace every edge gate by the constant 1.
    #[arg(long = "no-gates")]
    no_gates: bool,
    #[arg(long = "edge-dropout")]
    edge_dropout: Option<f64>,
    /// Read HEAD/DEPREL instead of the predicted PHEAD/PDEPREL columns.
    #[arg(long = "use-gold-syntax")]
    use_gold_syntax: bool,
    /// Further `key=value` configuration overrides.
    #[arg(value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl ConfigArgs {
    fn resolve(&self, base: TrainConfig) -> Result<TrainConfig> {
        let mut cfg = match &self.config {
            Some(path) => TrainConfig::load(path)?,
            None => base,
        };
        for kv in &self.overrides {
            cfg.apply_override(kv)?;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.threads {
            cfg.threads = v;
        }
        if let Some(v) = self.mode {
            cfg.mode = v;
        }
        if let Some(v) = self.gcn_layers {
            cfg.gcn_layers = v;
        }
        if self.no_gates {
            cfg.gates = false;
        }
        if let Some(v) = self.edge_dropout {
            cfg.edge_dropout = v;
        }
        if self.use_gold_syntax {
            cfg.use_gold_syntax = true;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[command(flatten)]
    config: ConfigArgs,
    #[arg(long)]
    train: Option<PathBuf>,
    #[arg(long)]
    dev: Option<PathBuf>,
    /// Pretrained word vectors, one `word v1 … v_d` per line.
    #[arg(long)]
    embeddings: Option<PathBuf>,
    /// Output directory for checkpoints and logs.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print the resolved configuration and stop.
    #[arg(long = "dry-run")]
    dry_run: bool,
}

#[derive(Debug, Args)]
struct PredictArgs {
    /// Checkpoint file; repeat for a product-of-experts ensemble.
    #[arg(long, required = true)]
    checkpoint: Vec<PathBuf>,
    #[arg(long)]
    test: PathBuf,
    /// Output CoNLL file (standard output when absent).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long = "use-gold-syntax")]
    use_gold_syntax: bool,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    /// Gold CoNLL file.
    #[arg(long)]
    test: PathBuf,
    /// System output in CoNLL format.
    #[arg(long, conflicts_with = "checkpoint")]
    pred: Option<PathBuf>,
    /// Score a model (or an ensemble) directly.
    #[arg(long)]
    checkpoint: Vec<PathBuf>,
    /// Also count predicate senses read from the system file.
    #[arg(long = "with-senses", requires = "pred")]
    with_senses: bool,
    /// Directory for `report.tsv` and `report.txt`.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long = "use-gold-syntax")]
    use_gold_syntax: bool,
}

#[derive(Debug, Args)]
struct AnalyzeArgs {
    #[arg(long)]
    test: PathBuf,
    #[arg(long, conflicts_with = "checkpoint")]
    pred: Option<PathBuf>,
    #[arg(long)]
    checkpoint: Vec<PathBuf>,
    #[arg(long)]
    teleport: bool,
    #[arg(long)]
    buckets: bool,
    #[arg(long)]
    ablation: bool,
    /// Minimum arc count for a relation to be ablated.
    #[arg(long = "min-count", default_value_t = 300)]
    min_count: usize,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long = "use-gold-syntax")]
    use_gold_syntax: bool,
}

#[derive(Debug, Args)]
struct GradcheckArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// CoNLL file whose predicates form the objective; a built-in
    /// three-token sentence when absent.
    #[arg(long)]
    train: Option<PathBuf>,
}

/// Run with `argv` (including the program name) and return the exit code.
pub fn run<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let stdout = io::stdout();
    let mut out = stdout.lock();
    run_with(argv, &mut out)
}

/// Like [`run`] but writes regular output to `out`.
pub fn run_with<I, S>(argv: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::new().filter_or(LOG_ENV, "warn"))
        .format_target(false)
        .try_init();
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
        }
    };
    let result = dispatch(cli.command, out);
    let _ = out.flush();
    match result {
        Ok(code) => code,
        Err(Error::Io(e)) if e.kind() == io::ErrorKind::BrokenPipe => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_validation() {
                1
            } else {
                2
            }
        }
    }
}

fn dispatch(command: Command, out: &mut dyn Write) -> Result<i32> {
    match command {
        Command::Train(a) => cmd_train(a, out),
        Command::Predict(a) => cmd_predict(a, out),
        Command::Evaluate(a) => cmd_evaluate(a, out),
        Command::Analyze(a) => cmd_analyze(a, out),
        Command::Gradcheck(a) => cmd_gradcheck(a, out),
    }
}

/// Open a file, mapping a missing path to a validation error.
fn open(path: &Path) -> Result<BufReader<File>> {
    match File::open(path) {
        Ok(f) => Ok(BufReader::new(f)),
        Err(e) if e.kind() == io::ErrorKind::NotFound => {
            Err(Error::config(format!("no such file: {}", path.display())))
        }
        Err(e) => Err(e.into()),
    }
}

fn read_corpus(path: &Path, gold_syntax: bool) -> Result<Vec<Sentence>> {
    let syntax = if gold_syntax {
        SyntaxSource::Gold
    } else {
        SyntaxSource::Predicted
    };
    parse_conll_with(open(path)?, ParseOptions { syntax })
}

fn print_config(out: &mut dyn Write, cfg: &TrainConfig) -> Result<()> {
    writeln!(out, "# resolved configuration")?;
    for (k, v) in cfg.entries() {
        writeln!(out, "{k} = {v}")?;
    }
    info!("configuration resolved");
    Ok(())
}

fn cmd_train(a: TrainArgs, out: &mut dyn Write) -> Result<i32> {
    let cfg = a.config.resolve(TrainConfig::default())?;
    print_config(out, &cfg)?;
    if a.dry_run {
        return Ok(0);
    }
    let train_path = a.train.ok_or_else(|| Error::config("--train is required"))?;
    let out_dir = a.out.ok_or_else(|| Error::config("--out is required"))?;
    let sentences = read_corpus(&train_path, cfg.use_gold_syntax)?;
    let dev = match &a.dev {
        Some(p) if p.exists() => Some(read_corpus(p, cfg.use_gold_syntax)?),
        Some(p) => {
            warn!("development file {} not found; training without model selection", p.display());
            None
        }
        None => None,
    };
    let pretrained = match &a.embeddings {
        Some(p) => {
            let lexicon = Lexicon::build(&sentences, cfg.min_freq);
            let (table, report) = load_pretrained(open(p)?, &lexicon, cfg.d_w)?;
            writeln!(
                out,
                "pretrained vectors: {} of {} vocabulary words found ({:.1}%)",
                report.hits,
                report.hits + report.misses,
                100.0 * report.hit_rate()
            )?;
            Some(table)
        }
        None => None,
    };
    let outcome = trainer::train(
        &sentences,
        dev.as_deref(),
        &cfg,
        TrainOptions {
            out_dir: Some(out_dir.clone()),
            stop_at_f1: None,
            pretrained,
        },
    )?;
    for r in &outcome.history {
        match r.dev {
            Some(s) => writeln!(out, "epoch {:>3}  loss {:.6}  dev F1 {:.4}", r.epoch, r.train_loss, s.f1)?,
            None => writeln!(out, "epoch {:>3}  loss {:.6}", r.epoch, r.train_loss)?,
        }
    }
    writeln!(
        out,
        "best epoch {} written to {}",
        outcome.best_epoch,
        out_dir.join(trainer::BEST_CHECKPOINT).display()
    )?;
    Ok(0)
}

fn load_models(paths: &[PathBuf]) -> Result<Vec<SrlModel>> {
    paths
        .iter()
        .map(|p| {
            if !p.exists() {
                return Err(Error::config(format!("no such checkpoint: {}", p.display())));
            }
            SrlModel::load(p)
        })
        .collect()
}

fn model_predictions(models: &[SrlModel], sentences: &[Sentence], threads: usize) -> Result<PredictionSet> {
    match models {
        [] => Err(Error::config("at least one --checkpoint is required")),
        [m] => m.predict(sentences, threads),
        many => evaluator::ensemble(many, sentences, threads),
    }
}

fn cmd_predict(a: PredictArgs, out: &mut dyn Write) -> Result<i32> {
    let models = load_models(&a.checkpoint)?;
    let cfg = models[0].config();
    match &a.out {
        Some(_) => print_config(out, cfg)?,
        None => print_config(&mut io::stderr(), cfg)?,
    }
    let gold_syntax = a.use_gold_syntax || cfg.use_gold_syntax;
    let sentences = read_corpus(&a.test, gold_syntax)?;
    let threads = a.threads.unwrap_or(cfg.threads);
    let pred = model_predictions(&models, &sentences, threads)?;
    match &a.out {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path)?);
            write_conll(&mut w, &sentences, &pred)?;
            w.flush()?;
            writeln!(out, "wrote {} predicates to {}", pred.len(), path.display())?;
        }
        None => write_conll(&mut &mut *out, &sentences, &pred)?,
    }
    Ok(0)
}

/// Predictions from `--pred` or `--checkpoint`, whichever was given.
fn system_predictions(
    gold: &[Sentence],
    pred: &Option<PathBuf>,
    checkpoints: &[PathBuf],
    threads: Option<usize>,
    gold_syntax: bool,
) -> Result<Option<(PredictionSet, Option<Vec<Sentence>>)>> {
    if let Some(p) = pred {
        let system = read_corpus(p, gold_syntax)?;
        return Ok(Some((PredictionSet::from_sentences(&system), Some(system))));
    }
    if checkpoints.is_empty() {
        return Ok(None);
    }
    let models = load_models(checkpoints)?;
    print_config(&mut io::stderr(), models[0].config())?;
    let threads = threads.unwrap_or(models[0].config().threads);
    Ok(Some((model_predictions(&models, gold, threads)?, None)))
}

fn emit_report(report: &Report, dir: &Option<PathBuf>, out: &mut dyn Write) -> Result<()> {
    out.write_all(report.to_table().as_bytes())?;
    if let Some(dir) = dir {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("report.tsv"), report.to_tsv())?;
        fs::write(dir.join("report.txt"), report.to_table())?;
    }
    Ok(())
}

fn cmd_evaluate(a: EvaluateArgs, out: &mut dyn Write) -> Result<i32> {
    let gold = read_corpus(&a.test, a.use_gold_syntax)?;
    let (pred, system) = system_predictions(&gold, &a.pred, &a.checkpoint, a.threads, a.use_gold_syntax)?
        .ok_or_else(|| Error::config("evaluate needs --pred or --checkpoint"))?;
    let mut report = Report::default();
    report.add_score("score", &evaluator::score(&gold, &pred)?);
    if a.with_senses {
        let system = system.expect("--with-senses requires --pred");
        let senses: BTreeMap<(usize, usize), String> = system
            .iter()
            .enumerate()
            .flat_map(|(si, s)| s.predicates.iter().map(move |&p| ((si, p), s.tokens[p].sense.clone())))
            .collect();
        report.add_score("combined_with_supplied_senses", &evaluator::score_with_senses(&gold, &pred, &senses)?);
    }
    emit_report(&report, &a.out, out)?;
    Ok(0)
}

fn cmd_analyze(a: AnalyzeArgs, out: &mut dyn Write) -> Result<i32> {
    let gold = read_corpus(&a.test, a.use_gold_syntax)?;
    let all = !(a.teleport || a.buckets || a.ablation);
    let mut report = Report::default();
    if a.teleport || all {
        report.add_teleport(&evaluator::teleport_stats(&gold));
    }
    if a.buckets || all {
        match system_predictions(&gold, &a.pred, &a.checkpoint, a.threads, a.use_gold_syntax)? {
            Some((pred, _)) => report.add_buckets(&evaluator::distance_buckets(&gold, &pred)?),
            None if a.buckets => return Err(Error::config("--buckets needs --pred or --checkpoint")),
            None => {}
        }
    }
    if a.ablation || (all && a.checkpoint.len() == 1) {
        let [path] = a.checkpoint.as_slice() else {
            return Err(Error::config("--ablation needs exactly one --checkpoint"));
        };
        let model = SrlModel::load(path)?;
        print_config(&mut io::stderr(), model.config())?;
        let threads = a.threads.unwrap_or(model.config().threads);
        report.add_ablation(&evaluator::relation_ablation(&model, &gold, a.min_count, threads)?);
    }
    emit_report(&report, &a.out, out)?;
    Ok(0)
}

fn cmd_gradcheck(a: GradcheckArgs, out: &mut dyn Write) -> Result<i32> {
    let cfg = a.config.resolve(TrainConfig::gradcheck())?;
    print_config(out, &cfg)?;
    let sentences = match &a.train {
        Some(p) => read_corpus(p, cfg.use_gold_syntax)?,
        None => vec![fixtures::gradcheck_sentence()],
    };
    let report = trainer::full_model_grad_check(&sentences, &cfg)?;
    let worst = report.worst.as_ref().map_or("-".to_string(), |(n, i)| format!("{n}[{i}]"));
    writeln!(
        out,
        "checked {} entries, skipped {} near ReLU kinks; worst at {worst}",
        report.checked, report.skipped
    )?;
    if report.passes(GRADCHECK_TOLERANCE) {
        writeln!(out, "PASS max rel err {:.3e} < {GRADCHECK_TOLERANCE:e}", report.max_rel_error)?;
        Ok(0)
    } else {
        writeln!(out, "FAIL max rel err {:.3e} >= {GRADCHECK_TOLERANCE:e}", report.max_rel_error)?;
        Ok(1)
    }
}
