//! Batch orchestration: ingest → filter → topics → signals → stance → analytics.

use crate::config::{ConfigError, FilterStageConfig, PipelineConfig, SignalStageConfig, StanceStageConfig, TopicStageConfig};
use crate::store::{Begin, RunManifest, RunStore, StoreError};
use serde::Serialize;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use thiserror::Error;
use threadscope::analytics::{analyze, write_bundle};
use threadscope::corpus::{exclude_creator_comments, load_corpus_with, merge, Corpus, CorpusError, IngestStats, LoadOptions};
use threadscope::embed::{EmbedError, EmbeddingBackend};
use threadscope::filter::{filter_corpus, train_filter, FilterError, FilterLexicons, FilterOutcome, TrainingSummary};
use threadscope::lexicon::load_list;
use threadscope::signals::{
    active_user_signal_profile, score_corpus, PrecomputedSignals, SignalBackend, SignalError, SignalLexicons,
};
use threadscope::stance::{stance_corpus, stance_summary, KbSet, MarkerLexicons, StanceEngine, StanceError, StanceResult};
use threadscope::topics::{
    model_topics, normalize::default_boilerplate, Boilerplate, PcaReducer, PunctuationSplitter, Stopwords, TopicError,
    TopicModelReport, TopicResources,
};

pub const STAGES: [&str; 6] = ["ingest", "filter", "topics", "signals", "stance", "analytics"];

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("loading {path}: {source}")]
    Corpus { path: PathBuf, source: CorpusError },
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("no corpus paths given")]
    NoInput,
}

/// Errors raised inside a stage; recorded in the run manifest.
#[derive(Debug, Error)]
pub enum StageError {
    #[error("io: {0}")]
    Io(#[from] io::Error),
    #[error(transparent)]
    Filter(#[from] FilterError),
    #[error(transparent)]
    Topics(#[from] TopicError),
    #[error(transparent)]
    Signals(#[from] SignalError),
    #[error(transparent)]
    Stance(#[from] StanceError),
    #[error(transparent)]
    Embed(#[from] EmbedError),
    #[error(transparent)]
    Config(#[from] ConfigError),
}

impl StageError {
    pub fn kind(&self) -> &'static str {
        match self {
            StageError::Io(_) => "io",
            StageError::Filter(_) => "filter",
            StageError::Topics(_) => "topics",
            StageError::Signals(_) => "signals",
            StageError::Stance(_) => "stance",
            StageError::Embed(_) => "embedding",
            StageError::Config(_) => "config",
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Re-run even when a sealed run with the same id exists.
    pub force: bool,
}

/// An ingested corpus plus per-file counters, ready for [`run_corpus`].
#[derive(Debug, Clone)]
pub struct Ingested {
    pub corpus: Corpus,
    pub files: Vec<(String, IngestStats)>,
}

pub fn ingest_paths(paths: &[PathBuf], cfg: &PipelineConfig) -> Result<Ingested, PipelineError> {
    if paths.is_empty() {
        return Err(PipelineError::NoInput);
    }
    let opts = LoadOptions {
        default_category: cfg.ingest.default_category,
        malformed_threshold: cfg.ingest.malformed_threshold,
    };
    let mut parts = Vec::new();
    let mut files = Vec::new();
    for p in paths {
        let (c, stats) = load_corpus_with(p, &opts).map_err(|source| PipelineError::Corpus { path: p.clone(), source })?;
        let name = p.file_name().map_or_else(|| p.display().to_string(), |n| n.to_string_lossy().into_owned());
        files.push((name, stats));
        parts.push(c);
    }
    let corpus = if parts.len() == 1 { parts.pop().expect("one part") } else { merge("pipeline", &parts) };
    Ok(Ingested { corpus, files })
}

/// Loads the corpus files and runs every stage.
pub fn run_pipeline(
    paths: &[PathBuf],
    cfg: &PipelineConfig,
    store: &RunStore,
    opts: &RunOptions,
) -> Result<RunManifest, PipelineError> {
    let ingested = ingest_paths(paths, cfg)?;
    run_corpus(ingested, cfg, store, opts)
}

#[derive(Serialize)]
struct IngestFile<'a> {
    file: &'a str,
    stats: &'a IngestStats,
}

#[derive(Serialize)]
struct IngestSummary<'a> {
    snapshot: &'a str,
    corpus_fingerprint: String,
    files: Vec<IngestFile<'a>>,
    videos: usize,
    comments: usize,
    orphans: usize,
    creator_exclusion: Option<threadscope::corpus::ExclusionReport>,
}

#[derive(Serialize)]
struct FilterSummary {
    threshold: f64,
    training: TrainingSummary,
    input_comments: usize,
    kept: usize,
    dropped: usize,
}

fn write_jsonl<T: Serialize>(path: &Path, items: impl IntoIterator<Item = T>) -> io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for it in items {
        serde_json::to_writer(&mut w, &it)?;
        w.write_all(b"\n")?;
    }
    w.flush()
}

fn write_pretty<T: Serialize>(path: &Path, value: &T) -> io::Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    std::fs::write(path, bytes)
}

fn write_corpus(path: &Path, c: &Corpus) -> io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    c.write_jsonl(&mut w)?;
    w.flush()
}

/// Runs every stage over an already ingested corpus. A stage failure ends
/// the run early; the returned manifest is then `partial`.
pub fn run_corpus(
    ingested: Ingested,
    cfg: &PipelineConfig,
    store: &RunStore,
    opts: &RunOptions,
) -> Result<RunManifest, PipelineError> {
    cfg.validate()?;
    let config_fp = cfg.fingerprint()?;
    let corpus_fp = ingested.corpus.fingerprint();
    let run_id = crate::store::run_id(&config_fp, &corpus_fp);
    let mut w = match store.begin(&run_id, &config_fp, &corpus_fp, opts.force)? {
        Begin::Existing(m) => {
            log::info!("run {run_id} already sealed; reusing");
            return Ok(m);
        }
        Begin::New(w) => w,
    };
    log::info!("run {run_id}: {} comments", ingested.corpus.comments().len());
    let kind = |e: &StageError| e.kind().to_string();

    macro_rules! stage {
        ($name:expr, $body:expr) => {
            match w.stage($name, $body, kind)? {
                Ok(v) => v,
                Err(_) => return Ok(w.manifest().clone()),
            }
        };
    }

    let corpus: Corpus = stage!("ingest", |dir: &Path| -> Result<Corpus, StageError> {
        let (corpus, exclusion) = if cfg.ingest.exclude_creators {
            let (c, r) = exclude_creator_comments(&ingested.corpus);
            (c, Some(r))
        } else {
            (ingested.corpus.clone(), None)
        };
        write_corpus(&dir.join("corpus.jsonl"), &corpus)?;
        let summary = IngestSummary {
            snapshot: ingested.corpus.snapshot_label(),
            corpus_fingerprint: corpus_fp.clone(),
            files: ingested.files.iter().map(|(f, s)| IngestFile { file: f, stats: s }).collect(),
            videos: corpus.videos().len(),
            comments: corpus.comments().len(),
            orphans: corpus.orphans().len(),
            creator_exclusion: exclusion,
        };
        write_pretty(&dir.join("ingest.json"), &summary)?;
        Ok(corpus)
    });

    let kept: Corpus = stage!("filter", |dir: &Path| -> Result<Corpus, StageError> {
        let (out, training) = filter_stage(&corpus, &cfg.filter)?;
        write_corpus(&dir.join("kept.jsonl"), &out.kept)?;
        write_jsonl(&dir.join("dropped.jsonl"), &out.dropped)?;
        write_pretty(
            &dir.join("summary.json"),
            &FilterSummary {
                threshold: cfg.filter.threshold,
                training,
                input_comments: corpus.comments().len(),
                kept: out.kept.comments().len(),
                dropped: out.dropped.len(),
            },
        )?;
        Ok(out.kept)
    });

    let Some(backend) = stage_backend(cfg, &mut w)? else {
        return Ok(w.manifest().clone());
    };

    let report: TopicModelReport = stage!("topics", |dir: &Path| -> Result<TopicModelReport, StageError> {
        let report = topics_stage(&kept, &backend, &cfg.topics)?;
        write_pretty(&dir.join("report.json"), &report)?;
        Ok(report)
    });

    stage!("signals", |dir: &Path| -> Result<(), StageError> {
        let sb = signal_backend(&cfg.signals)?;
        let scored = score_corpus(&kept, &sb)?;
        write_jsonl(&dir.join("signals.jsonl"), &scored)?;
        write_pretty(&dir.join("profiles.json"), &active_user_signal_profile(&kept, &scored))?;
        Ok(())
    });

    stage!("stance", |dir: &Path| -> Result<(), StageError> {
        let results = stance_stage(&kept, &report, &backend, &cfg.stance)?;
        write_jsonl(&dir.join("stance.jsonl"), &results)?;
        write_pretty(&dir.join("summary.json"), &stance_summary(&kept, &results))?;
        Ok(())
    });

    stage!("analytics", |dir: &Path| -> Result<(), StageError> {
        let report = analyze(&corpus, &cfg.analytics);
        write_bundle(&report, dir, &corpus_fp)?;
        Ok(())
    });

    Ok(w.seal()?)
}

/// Trains the filter on every comment of `corpus` and applies it.
pub fn filter_stage(corpus: &Corpus, cfg: &FilterStageConfig) -> Result<(FilterOutcome, TrainingSummary), StageError> {
    let lex = match &cfg.lexicon_dir {
        Some(d) => FilterLexicons::load_dir(d)?,
        None => FilterLexicons::default(),
    };
    let texts: Vec<&str> = corpus.comments().iter().map(|c| c.text.as_str()).collect();
    let (model, training) = train_filter(&texts, lex, &cfg.label_model(), &cfg.train())?;
    Ok((filter_corpus(corpus, &model, cfg.threshold), training))
}

pub fn topics_stage(
    corpus: &Corpus,
    backend: &EmbeddingBackend,
    cfg: &TopicStageConfig,
) -> Result<TopicModelReport, StageError> {
    let mut phrases = default_boilerplate();
    if let Some(f) = &cfg.boilerplate_file {
        phrases.extend(load_list(f)?);
    }
    let boilerplate = Boilerplate::new(&phrases);
    let mut stopwords = Stopwords::default();
    if let Some(f) = &cfg.stopwords_file {
        stopwords.extend(load_list(f)?);
    }
    let res = TopicResources {
        boilerplate: &boilerplate,
        stopwords: &stopwords,
        splitter: &PunctuationSplitter::default(),
        reducer: &PcaReducer,
    };
    Ok(model_topics(corpus, backend, &res, &cfg.model)?)
}

pub fn signal_backend(cfg: &SignalStageConfig) -> Result<SignalBackend, StageError> {
    Ok(match (&cfg.precomputed, &cfg.lexicon_dir) {
        (Some(p), _) => SignalBackend::Precomputed(Arc::new(PrecomputedSignals::read_jsonl(
            io::BufReader::new(File::open(p)?),
            cfg.threshold,
        )?)),
        (None, Some(d)) => {
            let mut lex = SignalLexicons::load_dir(d)?;
            lex.threshold = cfg.threshold;
            SignalBackend::Lexicon(Arc::new(lex))
        }
        (None, None) => {
            SignalBackend::Lexicon(Arc::new(SignalLexicons { threshold: cfg.threshold, ..SignalLexicons::default() }))
        }
    })
}

pub fn stance_stage(
    corpus: &Corpus,
    report: &TopicModelReport,
    backend: &EmbeddingBackend,
    cfg: &StanceStageConfig,
) -> Result<Vec<StanceResult>, StageError> {
    let kbs = match &cfg.kb_dir {
        Some(d) => KbSet::load_dir(d, backend)?,
        None => KbSet::default(),
    };
    let markers = match &cfg.marker_dir {
        Some(d) => MarkerLexicons::load_dir(d)?,
        None => MarkerLexicons::default(),
    };
    let stopwords = Stopwords::default();
    let engine = StanceEngine { backend, markers: &markers, stopwords: &stopwords, config: cfg.weights };
    Ok(stance_corpus(corpus, report, &kbs, &engine))
}

/// The embedding backend is built outside any stage directory, but a bad
/// precomputed index still has to leave a failure record; it is attributed
/// to the topics stage, the first consumer.
fn stage_backend(cfg: &PipelineConfig, w: &mut crate::store::RunWriter) -> Result<Option<EmbeddingBackend>, StoreError> {
    match cfg.embedding.backend() {
        Ok(b) => Ok(Some(b)),
        Err(e) => {
            let e = StageError::from(e);
            let _ = w.stage("topics", |_| Err::<(), _>(e), |e: &StageError| e.kind().to_string())?;
            Ok(None)
        }
    }
}
