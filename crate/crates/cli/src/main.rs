//! `threadscope` command line.

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use threadscope::analytics::{analyze, write_bundle, Bucket};
use threadscope::corpus::{
    diff_snapshots, discrepancy_report, fetch_remote, load_corpus_with, merge, write_corpus, Category, Corpus,
    FetchOptions, FixtureClient, LoadOptions, SleepPause,
};
use threadscope::embed::{EmbeddingBackend, PrecomputedIndex, DEFAULT_DIM, DEFAULT_SEED};
use threadscope::signals::score_corpus;
use threadscope::stance::{evaluate_stance, stance_summary, StanceLabel};
use threadscope::synth::{stance_gold_set, synthetic_corpus, SynthConfig};
use threadscope::topics::TopicModelReport;
use threadscope_service::{
    filter_stage, run_pipeline, signal_backend, stance_stage, topics_stage, PipelineConfig, RunOptions, RunStatus,
    RunStore,
};

#[derive(Debug, Parser)]
#[command(name = "threadscope", version, about = "Comment-corpus analytics pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build a corpus from JSONL files or a remote client.
    Ingest(IngestArgs),
    /// Compare two snapshots of the same corpus.
    Diff {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
    },
    /// Reported versus retrievable comment counts per video.
    Audit {
        #[arg(long)]
        corpus: PathBuf,
        /// Directory for discrepancies.csv and histogram.csv; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Remove irrelevant comments.
    Filter(FilterArgs),
    /// Cluster video transcripts into topics.
    Topics(TopicsArgs),
    /// Sentiment and emotion per comment.
    Signals(SignalsArgs),
    /// Topic-anchored stance per comment.
    Stance(StanceArgs),
    /// Score stance predictions against gold labels.
    StanceEval {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        gold: PathBuf,
    },
    /// Engagement statistics report bundle.
    Analyze(AnalyzeArgs),
    /// Full pipeline runs.
    Pipeline {
        #[command(subcommand)]
        command: PipelineCommand,
    },
    /// Serve run results over HTTP.
    Serve {
        #[arg(long, default_value = "runs")]
        runs: PathBuf,
        #[arg(long, default_value = "127.0.0.1:8080")]
        bind: SocketAddr,
    },
    /// Generate deterministic synthetic data.
    Synth {
        #[command(subcommand)]
        command: SynthCommand,
    },
}

#[derive(Debug, Args)]
struct IngestArgs {
    /// JSONL corpus file; repeatable.
    #[arg(long, required_unless_present = "client")]
    input: Vec<PathBuf>,
    /// Remote client, e.g. `fixture:<dir>`.
    #[arg(long, conflicts_with = "input")]
    client: Option<String>,
    /// Category for video records that carry none.
    #[arg(long, default_value = "other_conspiracies")]
    category: Category,
    #[arg(long, default_value_t = 50)]
    batch_size: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct ConfigArg {
    /// Pipeline TOML; stage settings come from it, flags override.
    #[arg(long)]
    config: Option<PathBuf>,
}

impl ConfigArg {
    fn load(&self) -> Result<PipelineConfig> {
        Ok(match &self.config {
            Some(p) => PipelineConfig::load(p)?,
            None => PipelineConfig::default(),
        })
    }
}

#[derive(Debug, Args)]
struct FilterArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Per-comment decision trace.
    #[arg(long)]
    dropped: Option<PathBuf>,
    #[arg(long)]
    threshold: Option<f64>,
    #[command(flatten)]
    config: ConfigArg,
}

#[derive(Debug, Args)]
struct TopicsArgs {
    #[arg(long)]
    corpus: PathBuf,
    /// `hashed` or `precomputed:<index>`.
    #[arg(long)]
    backend: Option<String>,
    #[arg(long)]
    min_cluster_size: Option<usize>,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    config: ConfigArg,
}

#[derive(Debug, Args)]
struct SignalsArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    config: ConfigArg,
}

#[derive(Debug, Args)]
struct StanceArgs {
    #[arg(long)]
    corpus: PathBuf,
    /// Topic report written by `topics`.
    #[arg(long)]
    topics: PathBuf,
    #[arg(long)]
    kb_dir: Option<PathBuf>,
    #[arg(long)]
    backend: Option<String>,
    #[arg(long)]
    out: PathBuf,
    /// Per-dataset proportions as JSON.
    #[arg(long)]
    summary: Option<PathBuf>,
    #[command(flatten)]
    config: ConfigArg,
}

#[derive(Debug, Args)]
struct AnalyzeArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    bucket: Option<Bucket>,
    #[arg(long)]
    spike_factor: Option<f64>,
    #[command(flatten)]
    config: ConfigArg,
}

#[derive(Debug, Subcommand)]
enum PipelineCommand {
    /// Ingest the corpus files and run every stage into the run store.
    Run {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, num_args = 1.., required = true)]
        corpus: Vec<PathBuf>,
        #[arg(long, default_value = "runs")]
        out: PathBuf,
        /// Recompute even when a sealed run with the same id exists.
        #[arg(long)]
        force: bool,
    },
}

#[derive(Debug, Subcommand)]
enum SynthCommand {
    /// Synthetic comment corpus.
    Corpus {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// `small` or `standard`.
        #[arg(long, default_value = "small")]
        size: String,
        #[arg(long)]
        comments: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Stance gold set: gold.jsonl plus one KB claim file per topic.
    StanceGold {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 300)]
        n: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    if let Err(e) = run(Cli::parse()) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Ingest(a) => ingest(a),
        Command::Diff { a, b } => {
            let d = diff_snapshots(&read_corpus(&a)?, &read_corpus(&b)?);
            print_json(&d)
        }
        Command::Audit { corpus, out } => audit(&corpus, out.as_deref()),
        Command::Filter(a) => filter(a),
        Command::Topics(a) => topics(a),
        Command::Signals(a) => signals(a),
        Command::Stance(a) => stance(a),
        Command::StanceEval { pred, gold } => stance_eval(&pred, &gold),
        Command::Analyze(a) => analyze_cmd(a),
        Command::Pipeline { command: PipelineCommand::Run { config, corpus, out, force } } => {
            let cfg = ConfigArg { config }.load()?;
            let store = RunStore::open(&out)?;
            let m = run_pipeline(&corpus, &cfg, &store, &RunOptions { force })?;
            println!("{}", m.run_id);
            match (m.status, m.failure()) {
                (RunStatus::Sealed, _) => Ok(()),
                (_, Some(f)) => bail!("run {} is {:?}: stage {} failed ({}): {}", m.run_id, m.status, f.stage, f.kind, f.message),
                _ => bail!("run {} is {:?}", m.run_id, m.status),
            }
        }
        Command::Serve { runs, bind } => {
            let store = RunStore::open(&runs)?;
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(threadscope_service::http::serve(store, bind))?;
            Ok(())
        }
        Command::Synth { command } => synth(command),
    }
}

fn read_corpus(path: &Path) -> Result<Corpus> {
    let (c, stats) = load_corpus_with(path, &LoadOptions::default()).with_context(|| format!("loading {}", path.display()))?;
    if stats.malformed > 0 {
        log::warn!("{}: {} malformed records skipped", path.display(), stats.malformed);
    }
    Ok(c)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<()> {
    let mut w = create(path)?;
    for it in items {
        serde_json::to_writer(&mut w, it)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn save_corpus(corpus: &Corpus, path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    write_corpus(corpus, path).with_context(|| format!("writing {}", path.display()))
}

fn ingest(a: IngestArgs) -> Result<()> {
    let corpus = match &a.client {
        Some(spec) => {
            let Some(dir) = spec.strip_prefix("fixture:") else {
                bail!("unsupported client `{spec}`; expected fixture:<dir>");
            };
            let client = FixtureClient::from_dir(Path::new(dir))?;
            let ids = client.video_ids();
            let opts = FetchOptions { batch_size: a.batch_size, ..FetchOptions::default() };
            let report = fetch_remote(&client, &ids, &opts, &SleepPause)?;
            if !report.unavailable.is_empty() {
                log::warn!("{} videos unavailable: {}", report.unavailable.len(), report.unavailable.join(", "));
            }
            if !report.rate_limit_waits.is_empty() {
                log::info!("waited on {} rate limits", report.rate_limit_waits.len());
            }
            report.corpus
        }
        None => {
            let opts = LoadOptions::category(a.category);
            let mut parts = Vec::new();
            for p in &a.input {
                let (c, stats) = load_corpus_with(p, &opts).with_context(|| format!("loading {}", p.display()))?;
                log::info!("{}: {}", p.display(), serde_json::to_string(&stats)?);
                parts.push(c);
            }
            if parts.len() == 1 {
                parts.pop().expect("one part")
            } else {
                merge("ingest", &parts)
            }
        }
    };
    save_corpus(&corpus, &a.out)?;
    eprintln!(
        "{} videos, {} comments, {} orphans -> {}",
        corpus.videos().len(),
        corpus.comments().len(),
        corpus.orphans().len(),
        a.out.display()
    );
    Ok(())
}

fn audit(corpus: &Path, out: Option<&Path>) -> Result<()> {
    let report = discrepancy_report(&read_corpus(corpus)?);
    match out {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            report.write_csv(create(&dir.join("discrepancies.csv"))?)?;
            report.write_histogram_csv(create(&dir.join("histogram.csv"))?)?;
        }
        None => {
            report.write_csv(io::stdout().lock())?;
            println!();
            report.write_histogram_csv(io::stdout().lock())?;
        }
    }
    Ok(())
}

fn filter(a: FilterArgs) -> Result<()> {
    let mut cfg = a.config.load()?;
    if let Some(t) = a.threshold {
        cfg.filter.threshold = t;
    }
    cfg.validate()?;
    let corpus = read_corpus(&a.corpus)?;
    let (out, training) = filter_stage(&corpus, &cfg.filter)?;
    save_corpus(&out.kept, &a.out)?;
    if let Some(p) = &a.dropped {
        write_jsonl(p, &out.dropped)?;
    }
    eprintln!(
        "kept {} of {} comments (threshold {}, classifier trained: {})",
        out.kept.comments().len(),
        corpus.comments().len(),
        cfg.filter.threshold,
        training.classifier_trained
    );
    Ok(())
}

fn backend(spec: Option<&str>, cfg: &PipelineConfig) -> Result<EmbeddingBackend> {
    match spec {
        None => Ok(cfg.embedding.backend()?),
        Some("hashed") => Ok(EmbeddingBackend::hashed(DEFAULT_DIM, DEFAULT_SEED)),
        Some(s) => match s.strip_prefix("precomputed:") {
            Some(p) => Ok(EmbeddingBackend::Precomputed(Arc::new(PrecomputedIndex::load(Path::new(p))?))),
            None => bail!("unknown backend `{s}`; expected hashed or precomputed:<index>"),
        },
    }
}

fn topics(a: TopicsArgs) -> Result<()> {
    let mut cfg = a.config.load()?;
    if let Some(m) = a.min_cluster_size {
        cfg.topics.model.min_cluster_size = m;
    }
    cfg.validate()?;
    let be = backend(a.backend.as_deref(), &cfg)?;
    let corpus = read_corpus(&a.corpus)?;
    let report = topics_stage(&corpus, &be, &cfg.topics)?;
    write_json(&a.out, &report)?;
    eprintln!(
        "{} topics over {} videos, noise {:.3}",
        report.clusters.len(),
        report.points.len(),
        report.noise_fraction
    );
    Ok(())
}

fn signals(a: SignalsArgs) -> Result<()> {
    let cfg = a.config.load()?;
    let corpus = read_corpus(&a.corpus)?;
    let scored = score_corpus(&corpus, &signal_backend(&cfg.signals)?)?;
    write_jsonl(&a.out, &scored)?;
    eprintln!("scored {} comments", scored.len());
    Ok(())
}

fn stance(a: StanceArgs) -> Result<()> {
    let mut cfg = a.config.load()?;
    if a.kb_dir.is_some() {
        cfg.stance.kb_dir = a.kb_dir.clone();
    }
    let be = backend(a.backend.as_deref(), &cfg)?;
    let corpus = read_corpus(&a.corpus)?;
    let raw = fs::read_to_string(&a.topics).with_context(|| format!("reading {}", a.topics.display()))?;
    let report: TopicModelReport = serde_json::from_str(&raw).with_context(|| format!("parsing {}", a.topics.display()))?;
    let results = stance_stage(&corpus, &report, &be, &cfg.stance)?;
    write_jsonl(&a.out, &results)?;
    let summary = stance_summary(&corpus, &results);
    match &a.summary {
        Some(p) => write_json(p, &summary)?,
        None => {
            for row in &summary {
                eprintln!("{}", serde_json::to_string(row)?);
            }
        }
    }
    Ok(())
}

/// Only the id and label of a stance record are read.
#[derive(Deserialize)]
struct PredLine {
    comment_id: String,
    label: StanceLabel,
}

#[derive(Deserialize)]
struct GoldLine {
    comment_id: String,
    #[serde(alias = "label")]
    gold: StanceLabel,
}

fn read_lines<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(f).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).with_context(|| format!("{}:{}", path.display(), i + 1))?);
    }
    Ok(out)
}

fn stance_eval(pred: &Path, gold: &Path) -> Result<()> {
    let predictions: BTreeMap<String, StanceLabel> =
        read_lines::<PredLine>(pred)?.into_iter().map(|r| (r.comment_id, r.label)).collect();
    let gold: BTreeMap<String, StanceLabel> =
        read_lines::<GoldLine>(gold)?.into_iter().map(|g| (g.comment_id, g.gold)).collect();
    let report = evaluate_stance(&predictions, &gold)?;
    println!("{report}");
    if report.missing_predictions > 0 || report.neutral_predictions > 0 {
        eprintln!(
            "{} gold items without a prediction, {} predicted neutral",
            report.missing_predictions, report.neutral_predictions
        );
    }
    Ok(())
}

fn analyze_cmd(a: AnalyzeArgs) -> Result<()> {
    let mut cfg = a.config.load()?;
    if let Some(b) = a.bucket {
        cfg.analytics.bucket = b;
    }
    if let Some(f) = a.spike_factor {
        cfg.analytics.spikes.factor = f;
    }
    cfg.validate()?;
    let corpus = read_corpus(&a.corpus)?;
    let report = analyze(&corpus, &cfg.analytics);
    write_bundle(&report, &a.out, &corpus.fingerprint())?;
    for d in &report.datasets {
        eprintln!(
            "{}: {} videos, {} comments, {:.1}% within {} days",
            d.dataset,
            d.engagement.len(),
            d.ecdf.ecdf.len(),
            100.0 * d.share_within,
            report.config.share_within_days
        );
    }
    Ok(())
}

fn synth(cmd: SynthCommand) -> Result<()> {
    match cmd {
        SynthCommand::Corpus { seed, size, comments, out } => {
            let mut cfg = match size.as_str() {
                "small" => SynthConfig::small(seed),
                "standard" => SynthConfig::standard(seed),
                other => bail!("unknown size `{other}`; expected small or standard"),
            };
            if let Some(n) = comments {
                cfg.comments = n;
            }
            let corpus = synthetic_corpus(&cfg);
            save_corpus(&corpus, &out)?;
            eprintln!("{} videos, {} comments -> {}", corpus.videos().len(), corpus.comments().len(), out.display());
        }
        SynthCommand::StanceGold { seed, n, out } => {
            let set = stance_gold_set(seed, n);
            let kb_dir = out.join("kb");
            fs::create_dir_all(&kb_dir)?;
            for t in &set.topics {
                let mut body: String = t.keywords.iter().map(|k| format!("@match\t{k}\n")).collect();
                body.push_str(&t.kb);
                fs::write(kb_dir.join(format!("topic-{}.kb", t.topic_id)), body)?;
            }
            write_jsonl(&out.join("gold.jsonl"), &set.items)?;
            eprintln!("{} gold items, {} claim files -> {}", set.items.len(), set.topics.len(), out.display());
        }
    }
    Ok(())
}
