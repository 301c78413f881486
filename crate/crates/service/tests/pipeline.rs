use std::collections::BTreeSet;
use std::fs;
use threadscope::corpus::IngestStats;
use threadscope::synth::{synthetic_corpus, SynthConfig};
use threadscope_service::store::{RunStatus, StageStatus};
use threadscope_service::{run_corpus, Ingested, PipelineConfig, RunOptions, RunStore, STAGES};

fn fixture() -> Ingested {
    let cfg = SynthConfig { comments: 100, videos_per_topic: 5, ..SynthConfig::small(11) };
    Ingested { corpus: synthetic_corpus(&cfg), files: vec![("fixture.jsonl".into(), IngestStats::default())] }
}

fn small_config() -> PipelineConfig {
    let mut cfg = PipelineConfig::default();
    cfg.topics.model.min_cluster_size = 3;
    cfg.topics.model.target_dim = 2;
    cfg
}

fn lines(path: &std::path::Path) -> usize {
    fs::read_to_string(path).unwrap().lines().count()
}

#[test]
fn fixture_run_is_sealed_with_every_stage() {
    let dir = tempfile::tempdir().unwrap();
    let store = RunStore::open(dir.path()).unwrap();
    let m = run_corpus(fixture(), &small_config(), &store, &RunOptions::default()).unwrap();
    assert_eq!(m.status, RunStatus::Sealed, "{:?}", m.failure());
    let names: Vec<&str> = m.stages.iter().map(|s| s.name.as_str()).collect();
    assert_eq!(names, STAGES);
    for s in &m.stages {
        assert_eq!(s.status, StageStatus::Sealed);
        assert!(!s.files.is_empty(), "{}", s.name);
        let (_, d) = store.stage_dir(&m.run_id, &s.name).unwrap();
        for f in s.files.keys() {
            assert!(d.join(f).is_file(), "{}/{f}", s.name);
        }
    }
    assert_eq!(store.resolve("latest").unwrap(), m.run_id);
}

#[test]
fn threshold_one_drops_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let store = RunStore::open(dir.path()).unwrap();
    let mut cfg = small_config();
    cfg.filter.threshold = 1.0;
    let m = run_corpus(fixture(), &cfg, &store, &RunOptions::default()).unwrap();
    assert_eq!(m.status, RunStatus::Sealed);
    let (_, ingest) = store.stage_dir(&m.run_id, "ingest").unwrap();
    let (_, filter) = store.stage_dir(&m.run_id, "filter").unwrap();
    let (_, stance) = store.stage_dir(&m.run_id, "stance").unwrap();
    assert_eq!(lines(&filter.join("dropped.jsonl")), 0);
    let comment_ids = |p: &std::path::Path| -> BTreeSet<String> {
        fs::read_to_string(p)
            .unwrap()
            .lines()
            .filter_map(|l| serde_json::from_str::<serde_json::Value>(l).ok())
            .filter(|v| v["kind"] == "comment")
            .map(|v| v["comment_id"].as_str().unwrap().to_string())
            .collect()
    };
    let ingested = comment_ids(&ingest.join("corpus.jsonl"));
    assert!(!ingested.is_empty());
    assert_eq!(comment_ids(&filter.join("kept.jsonl")), ingested);
    let stanced: BTreeSet<String> = fs::read_to_string(stance.join("stance.jsonl"))
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str::<serde_json::Value>(l).unwrap()["comment_id"].as_str().unwrap().to_string())
        .collect();
    assert_eq!(stanced, ingested);
}

#[test]
fn corrupted_topics_config_leaves_partial_run() {
    let dir = tempfile::tempdir().unwrap();
    let store = RunStore::open(dir.path()).unwrap();
    let mut cfg = small_config();
    cfg.topics.model.min_cluster_size = 1;
    let m = run_corpus(fixture(), &cfg, &store, &RunOptions::default()).unwrap();
    assert_eq!(m.status, RunStatus::Partial);
    let f = m.failure().unwrap();
    assert_eq!(f.stage, "topics");
    assert_eq!(f.kind, "topics");
    assert!(store.read_stage_file(&m.run_id, "filter", "summary.json").is_ok());
    assert!(store.read_stage_file(&m.run_id, "filter", "kept.jsonl").is_ok());
    for later in ["topics", "signals", "stance", "analytics"] {
        assert!(store.stage_dir(&m.run_id, later).is_err(), "{later}");
    }
    // the failed stage leaves no directory behind
    let stages = store.run_dir(&m.run_id).join("stages");
    assert!(!stages.join("topics").exists() && !stages.join("topics.tmp").exists());
}

#[test]
fn sealed_run_is_reused_and_forced_rerun_matches() {
    let dir = tempfile::tempdir().unwrap();
    let store = RunStore::open(dir.path()).unwrap();
    let cfg = small_config();
    let a = run_corpus(fixture(), &cfg, &store, &RunOptions::default()).unwrap();
    let b = run_corpus(fixture(), &cfg, &store, &RunOptions::default()).unwrap();
    assert_eq!(a, b);
    let c = run_corpus(fixture(), &cfg, &store, &RunOptions { force: true }).unwrap();
    assert_eq!(c.run_id, a.run_id);
    for (x, y) in a.stages.iter().zip(&c.stages) {
        assert_eq!(x.files, y.files, "{}", x.name);
    }
}

#[test]
fn config_change_gives_new_run() {
    let dir = tempfile::tempdir().unwrap();
    let store = RunStore::open(dir.path()).unwrap();
    let mut cfg = small_config();
    let a = run_corpus(fixture(), &cfg, &store, &RunOptions::default()).unwrap();
    cfg.filter.threshold = 0.9;
    let b = run_corpus(fixture(), &cfg, &store, &RunOptions::default()).unwrap();
    assert_ne!(a.run_id, b.run_id);
    assert_eq!(store.list().unwrap().len(), 2);
}

#[test]
fn pipeline_reads_corpus_files() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = fixture().corpus;
    let path = dir.path().join("c.jsonl");
    threadscope::corpus::write_corpus(&corpus, &path).unwrap();
    let cfg = small_config();
    let ing = threadscope_service::ingest_paths(&[path], &cfg).unwrap();
    assert_eq!(ing.corpus.fingerprint(), corpus.fingerprint());
    assert_eq!(ing.files[0].1.malformed, 0);
    let store = RunStore::open(dir.path().join("runs")).unwrap();
    let m = run_corpus(ing, &cfg, &store, &RunOptions::default()).unwrap();
    assert_eq!(m.status, RunStatus::Sealed);
}
