//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any fails.

use axum::body::Body;
use axum::http::{Request, StatusCode};
use http_body_util::BodyExt;
use num_bigint::BigUint;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;
use std::collections::{BTreeMap, BTreeSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;
use threadscope::analytics::{
    engagement_ecdf, mann_whitney_exact_counts, mann_whitney_u, normalized_timeseries, pearson, quartiles, Bucket,
    SpikeConfig, TestMethod,
};
use threadscope::corpus::{Category, Channel, Comment, Corpus, IngestStats, Video};
use threadscope::embed::EmbeddingBackend;
use threadscope::filter::{
    fit_label_model, train_filter, Decision, FilterLexicons, LabelModelConfig, TrainConfig, Vote, VoteMatrix,
};
use threadscope::stance::{
    evaluate_stance, parse_kb, Anchor, KnowledgeBase, MarkerLexicons, StanceConfig, StanceEngine, StanceLabel,
    TopicContext,
};
use threadscope::synth;
use threadscope::topics::{adjusted_rand_index, cluster_density, davies_bouldin, silhouette, HdbscanParams, Stopwords};
use threadscope_service::{run_corpus, Ingested, PipelineConfig, RunManifest, RunOptions, RunStatus, RunStore};
use tower::ServiceExt;

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

// ---------------------------------------------------------------- 1

fn filter_quality() -> Outcome {
    let start = Instant::now();
    let pool = synth::filter_training_pool(11, 3000);
    let refs: Vec<&str> = pool.iter().map(String::as_str).collect();
    let (model, summary) =
        train_filter(&refs, FilterLexicons::default(), &LabelModelConfig::default(), &TrainConfig::default())
            .map_err(|e| e.to_string())?;
    ensure!(summary.classifier_trained, "discriminative classifier was not trained: {:?}", summary.fallback_reason);
    let fixture = synth::filter_fixture(5, 500);
    let (mut tp, mut fp, mut fneg) = (0usize, 0usize, 0usize);
    for item in &fixture {
        let dropped = model.verdict("x", &item.text, 0.5).decision == Decision::Drop;
        match (dropped, item.irrelevant) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fneg += 1,
            _ => {}
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let f1 = 2.0 * tp as f64 / (2 * tp + fp + fneg).max(1) as f64;
    let detail = format!("F1 {f1:.3} (tp {tp}, fp {fp}, fn {fneg}) on {} items in {secs:.2} s", fixture.len());
    ensure!(f1 >= 0.90, "{detail}; need F1 >= 0.90");
    ensure!(secs < 10.0, "{detail}; need < 10 s");
    Ok(detail)
}

// ---------------------------------------------------------------- 2

/// Bayes posterior of the irrelevant class, by direct products.
fn bayes_posterior(acc: &[f64], prior: f64, row: &[Vote]) -> f64 {
    let (mut pi, mut pr) = (prior, 1.0 - prior);
    for (a, v) in acc.iter().zip(row) {
        match v {
            Vote::Irrelevant => {
                pi *= a;
                pr *= 1.0 - a;
            }
            Vote::Relevant => {
                pi *= 1.0 - a;
                pr *= a;
            }
            Vote::Abstain => {}
        }
    }
    pi / (pi + pr)
}

/// Vote matrix whose row frequencies equal the generative model's
/// expectation exactly: every (class, pattern) pair appears
/// `rows · ½ · Π P(vote | class)` times. Accuracies are rationals `(num, den)`.
fn expected_matrix(acc: &[(u64, u64)], rows: u64) -> Result<VoteMatrix, String> {
    let k = acc.len();
    let mut out = Vec::new();
    for y_irrelevant in [true, false] {
        for mask in 0u32..(1 << k) {
            let (mut num, mut den) = (rows, 2u64);
            let row: Vec<Vote> = (0..k)
                .map(|j| {
                    let (a, d) = acc[j];
                    let says_irrelevant = mask & (1 << j) != 0;
                    num *= if says_irrelevant == y_irrelevant { a } else { d - a };
                    den *= d;
                    if says_irrelevant { Vote::Irrelevant } else { Vote::Relevant }
                })
                .collect();
            ensure!(num % den == 0, "{rows} rows do not split exactly for {acc:?}");
            for _ in 0..num / den {
                out.push(row.clone());
            }
        }
    }
    ensure!(out.len() as u64 == rows, "built {} rows", out.len());
    Ok(VoteMatrix { function_ids: (0..k).map(|j| format!("lf{j}")).collect(), rows: out })
}

fn label_model_oracle() -> Outcome {
    // posterior recovery on matrices with exactly the model's vote frequencies
    let fixtures: [(&[(u64, u64)], u64); 4] = [
        (&[(3, 4), (3, 4), (3, 4)], 128),
        (&[(2, 3), (3, 4), (4, 5)], 120),
        (&[(2, 3), (3, 4), (3, 4)], 96),
        (&[(4, 5), (4, 5), (3, 4)], 200),
    ];
    let mut worst = 0.0f64;
    let mut iterations = 0usize;
    for (acc, rows) in fixtures {
        let vm = expected_matrix(acc, rows)?;
        let truth: Vec<f64> = acc.iter().map(|&(a, d)| a as f64 / d as f64).collect();
        let model = fit_label_model(&vm, &LabelModelConfig::default()).map_err(|e| e.to_string())?;
        iterations += model.log_likelihood.len().saturating_sub(1);
        for row in &vm.rows {
            worst = worst.max((model.posterior(row) - bayes_posterior(&truth, 0.5, row)).abs());
        }
        ensure!(
            model.log_likelihood.windows(2).all(|w| w[1] >= w[0] - 1e-9 * w[0].abs().max(1.0)),
            "log-likelihood decreased on {acc:?}"
        );
    }

    // monotone EM on randomly sampled matrices
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let trials = 200;
    for trial in 0..trials {
        let k = rng.random_range(2..=8usize);
        let rows = rng.random_range(10..=200usize);
        let acc: Vec<f64> = (0..k).map(|_| rng.random_range(0.3..0.95)).collect();
        let m = (0..rows)
            .map(|_| {
                let y_irrelevant = rng.random_bool(0.5);
                acc.iter()
                    .map(|&a| {
                        if rng.random_bool(0.3) {
                            Vote::Abstain
                        } else if rng.random_bool(a) == y_irrelevant {
                            Vote::Irrelevant
                        } else {
                            Vote::Relevant
                        }
                    })
                    .collect()
            })
            .collect();
        let vm = VoteMatrix { function_ids: (0..k).map(|j| format!("lf{j}")).collect(), rows: m };
        let Ok(model) = fit_label_model(&vm, &LabelModelConfig::default()) else { continue };
        for w in model.log_likelihood.windows(2) {
            ensure!(
                w[1] >= w[0] - 1e-9 * w[0].abs().max(1.0),
                "trial {trial}: log-likelihood decreased {} -> {}",
                w[0],
                w[1]
            );
        }
        iterations += model.log_likelihood.len().saturating_sub(1);
    }
    let detail = format!(
        "max |dp| {worst:.2e} vs Bayes posterior on 4 exact-frequency matrices; {iterations} EM iterations over {} fits all non-decreasing",
        trials + 4
    );
    ensure!(worst <= 0.02, "{detail}; need <= 0.02");
    Ok(detail)
}

// ---------------------------------------------------------------- 3

fn enumerate_u(n: usize, m: usize, u_obs: u64) -> (u64, u64) {
    let nm = (n * m) as i64;
    let obs = (2 * u_obs as i64 - nm).abs();
    let (mut extreme, mut total) = (0u64, 0u64);
    for mask in 0u32..(1 << (n + m)) {
        if mask.count_ones() as usize != n {
            continue;
        }
        let rank_sum: i64 = (0..n + m).filter(|i| mask & (1 << i) != 0).map(|i| i as i64 + 1).sum();
        let u = rank_sum - (n * (n + 1) / 2) as i64;
        total += 1;
        if (2 * u - nm).abs() >= obs {
            extreme += 1;
        }
    }
    (extreme, total)
}

fn type7(values: &[f64], p: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = 1.0 + (v.len() as f64 - 1.0) * p;
    let j = pos.floor() as usize;
    let g = pos - j as f64;
    if j >= v.len() {
        return v[v.len() - 1];
    }
    (1.0 - g) * v[j - 1] + g * v[j]
}

fn statistics_oracles() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut cases = 0;
    for n in 1..=7usize {
        for m in 1..=7usize {
            for _ in 0..3 {
                let mut values: Vec<f64> = (0..n + m).map(|i| i as f64 * 0.5 + 1.0).collect();
                values.shuffle(&mut rng);
                let (a, b) = values.split_at(n);
                let r = mann_whitney_u(a, b).map_err(|e| e.to_string())?;
                ensure!(r.method == TestMethod::ExactEnumeration, "n={n} m={m}: method {:?}", r.method);
                let (ext, tot) = enumerate_u(n, m, r.u as u64);
                let (le, lt) = mann_whitney_exact_counts(n, m, r.u as u64);
                // equal fractions: le/lt == ext/tot
                ensure!(le.clone() * BigUint::from(tot) == BigUint::from(ext) * lt.clone(), "n={n} m={m}: p {le}/{lt} vs {ext}/{tot}");
                ensure!(r.p_value == (ext as f64 / tot as f64).min(1.0), "n={n} m={m}: p {} vs {ext}/{tot}", r.p_value);
                cases += 1;
            }
        }
    }
    let mut worst_r = 0.0f64;
    for _ in 0..100 {
        let n = rng.random_range(3..50);
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-50.0..50.0)).collect();
        let s = rng.random_range(0.05..20.0);
        let up: Vec<f64> = x.iter().map(|v| s * v + 3.0).collect();
        let down: Vec<f64> = x.iter().map(|v| -s * v + 1.0).collect();
        let ru = pearson(&x, &up).ok_or("pearson undefined")?.r;
        let rd = pearson(&x, &down).ok_or("pearson undefined")?.r;
        worst_r = worst_r.max((ru - 1.0).abs()).max((rd + 1.0).abs());
    }
    ensure!(worst_r <= 1e-12, "Pearson off by {worst_r:e}");
    let mut worst_q = 0.0f64;
    for _ in 0..1000 {
        let n = rng.random_range(1..300);
        let v: Vec<f64> = (0..n).map(|_| rng.random_range(-1e4..1e4)).collect();
        let q = quartiles(&v).ok_or("quartiles undefined")?;
        for (got, p) in [(q.q1, 0.25), (q.q2, 0.5), (q.q3, 0.75)] {
            let want = type7(&v, p);
            worst_q = worst_q.max((got - want).abs() / want.abs().max(1.0));
        }
    }
    ensure!(worst_q <= 1e-12, "quartiles off by relative {worst_q:e}");
    Ok(format!("{cases} exact MWU cases equal enumeration; Pearson |r|-1 <= {worst_r:.1e}; 1000 quartile samples within {worst_q:.1e}"))
}

// ---------------------------------------------------------------- 4

fn clustering_recovery() -> Outcome {
    let mut aris = Vec::new();
    for s in 0..5u64 {
        let per = 30 + 7 * s as usize;
        let p = synth::planted_clusters(100 + s, 4, per, 5, 5.0);
        ensure!(p.separation >= 5.0 * p.intra_spread, "set {s}: separation too small");
        let labels = cluster_density(&p.points, &HdbscanParams::new(15, 15)).map_err(|e| e.to_string())?;
        let ari = adjusted_rand_index(&p.labels, &labels);
        ensure!(ari >= 0.9, "set {s} ({per} per cluster): ARI {ari:.3}");
        ensure!(*labels.last().unwrap() < 0, "set {s}: outlier labelled {}", labels.last().unwrap());
        aris.push(ari);
    }
    let pts = vec![vec![0.0, 0.0], vec![0.0, 0.0], vec![3.0, 4.0], vec![3.0, 4.0]];
    let lab = [0, 0, 1, 1];
    let sil = silhouette(&pts, &lab).ok_or("silhouette undefined")?;
    let db = davies_bouldin(&pts, &lab).ok_or("Davies-Bouldin undefined")?;
    ensure!((sil - 1.0).abs() <= 1e-9, "silhouette {sil}");
    ensure!(db.abs() <= 1e-9, "Davies-Bouldin {db}");
    let aris: Vec<String> = aris.iter().map(|a| format!("{a:.3}")).collect();
    Ok(format!("ARI [{}] with outlier as noise in all 5; silhouette {sil}, DB {db}", aris.join(", ")))
}

// ---------------------------------------------------------------- 5

fn stance_rules() -> Outcome {
    let b = EmbeddingBackend::default();
    let markers = MarkerLexicons::default();
    let stop = Stopwords::default();
    let engine = StanceEngine { backend: &b, markers: &markers, stopwords: &stop, config: StanceConfig::default() };

    let threads = synth::thread_fixture(4, 40);
    let (mut total, mut agree) = (0usize, 0usize);
    let mut misses = Vec::new();
    for th in &threads {
        let ctx = TopicContext::empty(b.dim());
        let top = engine.detect_toplevel(&th.top, &ctx, None);
        let replies: Vec<&Comment> = th.replies.iter().collect();
        let out = engine.detect_replies(&th.top, &replies, &top, &ctx, None);
        for r in std::iter::once(&top).chain(&out) {
            total += 1;
            let label_ok = th.expected.get(&r.comment_id) == Some(&r.label);
            let anchor_ok = match (&r.evidence.anchor, th.expected_anchor.get(&r.comment_id)) {
                (_, None) => true,
                (Anchor::ParentComment(a) | Anchor::Referenced(a), Some(want)) => a == want,
                (Anchor::Topic(_), Some(_)) => false,
            };
            if label_ok && anchor_ok {
                agree += 1;
            } else {
                misses.push(r.comment_id.clone());
            }
        }
    }
    ensure!(agree == total, "threads: {agree}/{total} agree; misses {misses:?}");

    let gold = synth::stance_gold_set(9, 300);
    let mut kbs = BTreeMap::new();
    for t in &gold.topics {
        let src = parse_kb(&t.kb, &format!("{}.kb", t.topic_id)).map_err(|e| e.to_string())?;
        kbs.insert(t.topic_id, KnowledgeBase::build(&t.topic_id.to_string(), src, &b).map_err(|e| e.to_string())?);
    }
    let contexts: BTreeMap<i32, TopicContext> =
        gold.topics.iter().map(|t| (t.topic_id, TopicContext::new(t.topic_id, &t.keywords, &b))).collect();
    let mut pred = BTreeMap::new();
    let mut want = BTreeMap::new();
    for it in &gold.items {
        let c = Comment {
            comment_id: it.comment_id.clone(),
            video_id: "v".into(),
            parent_id: None,
            author_id: "a".into(),
            author_display: "a".into(),
            text: it.text.clone(),
            published_at: 0,
            like_count: 0,
        };
        let r = engine.detect_toplevel(&c, &contexts[&it.topic_id], kbs.get(&it.topic_id));
        pred.insert(it.comment_id.clone(), r.label);
        want.insert(it.comment_id.clone(), it.gold);
    }
    let rep = evaluate_stance(&pred, &want).map_err(|e| e.to_string())?;
    let fav = rep.row(StanceLabel::Favour).map_or(0.0, |r| r.f1);
    let detail = format!(
        "threads {agree}/{total}; gold accuracy {:.3}, Favour F1 {fav:.3} over {} items",
        rep.accuracy, rep.total
    );
    ensure!(rep.accuracy >= 0.80 && fav >= 0.85, "{detail}; need accuracy >= 0.80 and Favour F1 >= 0.85");
    Ok(detail)
}

// ---------------------------------------------------------------- 6

/// Proleptic Gregorian (year, month) of a day count since 1970-01-01.
fn civil_month(days: i64) -> (i64, u32) {
    let z = days + 719_468;
    let era = z.div_euclid(146_097);
    let doe = z - era * 146_097;
    let yoe = (doe - doe / 1460 + doe / 36_524 - doe / 146_096) / 365;
    let doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    let mp = (5 * doy + 2) / 153;
    let m = if mp < 10 { mp + 3 } else { mp - 9 } as u32;
    let y = yoe + era * 400 + i64::from(m <= 2);
    (y, m)
}

fn integer_fixture(rng: &mut ChaCha8Rng) -> (Corpus, Vec<i64>) {
    let n_videos = rng.random_range(1..=6usize);
    let videos: Vec<Video> = (0..n_videos)
        .map(|i| Video {
            video_id: format!("v{i}"),
            channel_id: "ch".into(),
            title: String::new(),
            published_at: synth::EPOCH,
            view_count: 0,
            like_count: 0,
            reported_comment_count: 0,
            category: Category::Baseline,
            transcript: None,
        })
        .collect();
    let n = rng.random_range(1..400usize);
    let times: Vec<i64> = (0..n).map(|_| synth::EPOCH + rng.random_range(0..500 * synth::DAY)).collect();
    let comments = times
        .iter()
        .enumerate()
        .map(|(i, &t)| Comment {
            comment_id: format!("c{i}"),
            video_id: format!("v{}", i % n_videos),
            parent_id: None,
            author_id: format!("u{}", i % 13),
            author_display: String::new(),
            text: "x".into(),
            published_at: t,
            like_count: 0,
        })
        .collect();
    let chan = Channel { channel_id: "ch".into(), owner_author_id: "owner".into() };
    (Corpus::new("fixture", videos, vec![chan], comments), times)
}

fn temporal_analytics() -> Outcome {
    let burst = synth::burst_corpus(75, 10_000, 0.75);
    let share = engagement_ecdf(&burst).share_within(7.0);
    ensure!((share - 0.75).abs() <= 0.001, "share_within(7) = {share}");

    let mut rng = ChaCha8Rng::seed_from_u64(1000);
    for i in 0..1000u64 {
        let n = rng.random_range(1..300usize);
        let s = rng.random_range(0.0..=1.0);
        let c = synth::burst_corpus(i, n, s);
        let e = engagement_ecdf(&c).ecdf;
        let pts = e.points();
        ensure!(pts.windows(2).all(|w| w[0].0 < w[1].0 && w[0].1 <= w[1].1), "corpus {i}: ECDF points not monotone");
        ensure!(pts.last().map(|p| p.1) == Some(1.0), "corpus {i}: right endpoint {:?}", pts.last());
        let mut prev = 0.0;
        for k in 0..=120 {
            let y = e.eval(k as f64);
            ensure!(y >= prev, "corpus {i}: ECDF decreases at {k}");
            prev = y;
        }
    }

    let mut checked = 0;
    for _ in 0..50 {
        let (corpus, times) = integer_fixture(&mut rng);
        let videos = corpus.videos().len();
        let mut want: BTreeMap<(i64, u32), u64> = BTreeMap::new();
        for t in &times {
            *want.entry(civil_month(t.div_euclid(synth::DAY))).or_insert(0) += 1;
        }
        let series = normalized_timeseries(&corpus, Bucket::Month, &SpikeConfig::default());
        ensure!(series.videos == videos, "divisor {} vs {videos}", series.videos);
        for p in &series.points {
            let key = (i64::from(year_of(p.period_start)), month_of(p.period_start));
            let c = want.get(&key).copied().unwrap_or(0);
            ensure!(p.count == c, "{:?}: count {} vs {c}", p.period_start, p.count);
            ensure!(p.normalized == c as f64 / videos as f64, "{:?}: normalized {}", p.period_start, p.normalized);
            checked += 1;
        }
        let total: u64 = series.points.iter().map(|p| p.count).sum();
        ensure!(total == times.len() as u64, "series drops comments");
    }
    Ok(format!("share_within(7) = {share:.4}; 1000 ECDFs monotone; {checked} monthly points equal count/videos"))
}

fn year_of(d: impl std::fmt::Display) -> i32 {
    d.to_string()[..4].parse().expect("year")
}

fn month_of(d: impl std::fmt::Display) -> u32 {
    d.to_string()[5..7].parse().expect("month")
}

// ---------------------------------------------------------------- 7

struct FullRun {
    _dir: tempfile::TempDir,
    store: RunStore,
    manifest: RunManifest,
}

fn tree(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(p.strip_prefix(root).unwrap().to_path_buf(), std::fs::read(&p).unwrap());
            }
        }
    }
    out
}

fn end_to_end(slot: &mut Option<FullRun>) -> Outcome {
    let corpus = synth::synthetic_corpus(&synth::SynthConfig::standard(7));
    ensure!(corpus.comments().len() == 10_000, "corpus has {} comments", corpus.comments().len());
    let cfg = PipelineConfig::default();
    let ingested = || Ingested { corpus: corpus.clone(), files: vec![("standard.jsonl".into(), IngestStats::default())] };
    let mut runs = Vec::new();
    let mut times = Vec::new();
    for _ in 0..2 {
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let store = RunStore::open(dir.path()).map_err(|e| e.to_string())?;
        let start = Instant::now();
        let m = run_corpus(ingested(), &cfg, &store, &RunOptions::default()).map_err(|e| e.to_string())?;
        times.push(start.elapsed().as_secs_f64());
        ensure!(m.status == RunStatus::Sealed, "run not sealed: {:?}", m.failure());
        runs.push(FullRun { _dir: dir, store, manifest: m });
    }
    let (a, b) = (&runs[0], &runs[1]);
    ensure!(a.manifest.run_id == b.manifest.run_id, "run ids differ");
    let ta = tree(&a.store.run_dir(&a.manifest.run_id).join("stages"));
    let tb = tree(&b.store.run_dir(&b.manifest.run_id).join("stages"));
    ensure!(ta.keys().eq(tb.keys()), "stage file sets differ");
    let differing: Vec<_> = ta.iter().filter(|(k, v)| tb[*k] != **v).map(|(k, _)| k.display().to_string()).collect();
    ensure!(differing.is_empty(), "outputs differ: {differing:?}");
    let bytes: usize = ta.values().map(Vec::len).sum();
    let detail = format!(
        "10000 comments in {:.2} s and {:.2} s; {} stage files ({} bytes) byte-identical",
        times[0],
        times[1],
        ta.len(),
        bytes
    );
    ensure!(times.iter().all(|t| *t < 60.0), "{detail}; need < 60 s");
    *slot = runs.into_iter().next();
    Ok(detail)
}

// ---------------------------------------------------------------- 8

fn read_csv(path: &Path) -> Vec<BTreeMap<String, String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    let headers: Vec<String> = r.headers().unwrap().iter().map(String::from).collect();
    r.records().map(|rec| headers.iter().cloned().zip(rec.unwrap().iter().map(String::from)).collect()).collect()
}

fn f(s: &str) -> f64 {
    s.parse().unwrap_or_else(|_| panic!("not a number: {s}"))
}

/// JSON number equal to a CSV cell; an empty cell matches null.
fn same(v: &Value, cell: &str) -> bool {
    match v {
        Value::Null => cell.is_empty(),
        Value::Number(n) => !cell.is_empty() && n.as_f64() == Some(f(cell)),
        Value::String(s) => s == cell,
        _ => false,
    }
}

fn parity(slot: &Option<FullRun>) -> Outcome {
    let run = slot.as_ref().ok_or("no sealed full-fixture run (criterion 7 failed)")?;
    let id = run.manifest.run_id.clone();
    let (_, bundle) = run.store.stage_dir(&id, "analytics").map_err(|e| e.to_string())?;
    let (_, topics_dir) = run.store.stage_dir(&id, "topics").map_err(|e| e.to_string())?;
    let (_, stance_dir) = run.store.stage_dir(&id, "stance").map_err(|e| e.to_string())?;
    let app = threadscope_service::http::router(Arc::new(run.store.clone()));
    let rt = tokio::runtime::Builder::new_multi_thread().worker_threads(4).enable_all().build().map_err(|e| e.to_string())?;
    let get = |uri: String| -> Value {
        rt.block_on(async {
            let resp = app.clone().oneshot(Request::get(&uri).body(Body::empty()).unwrap()).await.unwrap();
            assert_eq!(resp.status(), StatusCode::OK, "{uri}");
            let body = resp.into_body().collect().await.unwrap().to_bytes();
            let v: Value = serde_json::from_slice(&body).unwrap();
            assert_eq!(v["run_id"], id.as_str(), "{uri}: run_id");
            v
        })
    };
    let mut compared = 0usize;
    let mut cmp = |ok: bool, what: String| -> Result<(), String> {
        compared += 1;
        if ok {
            Ok(())
        } else {
            Err(format!("mismatch: {what}"))
        }
    };

    let datasets: Vec<String> = {
        let m: Value = serde_json::from_slice(&std::fs::read(bundle.join("manifest.json")).unwrap()).unwrap();
        m["datasets"].as_array().unwrap().iter().map(|d| d.as_str().unwrap().to_string()).collect()
    };

    // ECDF
    let ecdf_rows = read_csv(&bundle.join("ecdf.csv"));
    for ds in &datasets {
        let v = get(format!("/runs/{id}/analytics/ecdf?dataset={ds}"));
        let pts = v["datasets"][0]["points"].as_array().unwrap();
        let rows: Vec<_> = ecdf_rows.iter().filter(|r| &r["dataset"] == ds).collect();
        cmp(pts.len() == rows.len(), format!("{ds} ecdf length {} vs {}", pts.len(), rows.len()))?;
        for (p, r) in pts.iter().zip(&rows) {
            cmp(same(&p[0], &r["delta_days"]) && same(&p[1], &r["cumulative_share"]), format!("{ds} ecdf {p}"))?;
        }
    }

    // correlation
    let corr_rows = read_csv(&bundle.join("correlation.csv"));
    for ds in &datasets {
        let v = get(format!("/runs/{id}/analytics/correlation?dataset={ds}"));
        let d = &v["datasets"][0];
        let vars: Vec<&str> = d["variables"].as_array().unwrap().iter().map(|x| x.as_str().unwrap()).collect();
        for r in corr_rows.iter().filter(|r| &r["dataset"] == ds) {
            let i = vars.iter().position(|x| *x == r["var_a"]).unwrap();
            let j = vars.iter().position(|x| *x == r["var_b"]).unwrap();
            let cell = &d["cells"][i][j];
            cmp(same(&cell["r"], &r["r"]), format!("{ds} r {i},{j}"))?;
            cmp(same(&cell["p_value"], &r["p_value"]), format!("{ds} p {i},{j}"))?;
            cmp(same(&d["n"], &r["n"]), format!("{ds} n"))?;
        }
    }

    // time series and spikes, every bucket
    let ts_rows = read_csv(&bundle.join("timeseries.csv"));
    let spike_rows = read_csv(&bundle.join("spikes.csv"));
    for ds in &datasets {
        for b in Bucket::ALL {
            let v = get(format!("/runs/{id}/analytics/timeseries?dataset={ds}&bucket={b}"));
            let d = &v["datasets"][0];
            let pts = d["points"].as_array().unwrap();
            let rows: Vec<_> = ts_rows.iter().filter(|r| &r["dataset"] == ds && r["bucket"] == b.as_str()).collect();
            cmp(pts.len() == rows.len(), format!("{ds}/{b} series length"))?;
            for (p, r) in pts.iter().zip(&rows) {
                cmp(
                    same(&p["period_start"], &r["period_start"])
                        && same(&p["count"], &r["count"])
                        && same(&d["videos"], &r["videos"])
                        && same(&p["normalized"], &r["normalized"]),
                    format!("{ds}/{b} point {p}"),
                )?;
            }
            let spikes = d["spikes"].as_array().unwrap();
            let rows: Vec<_> = spike_rows.iter().filter(|r| &r["dataset"] == ds && r["bucket"] == b.as_str()).collect();
            cmp(spikes.len() == rows.len(), format!("{ds}/{b} spike count"))?;
            for (s, r) in spikes.iter().zip(&rows) {
                cmp(
                    same(&s["period_start"], &r["period_start"])
                        && same(&s["count"], &r["count"])
                        && same(&s["rolling_median"], &r["rolling_median"])
                        && same(&s["ratio"], &r["ratio"]),
                    format!("{ds}/{b} spike {s}"),
                )?;
            }
        }
    }

    // engagement for every video, with the comments-per-video quartiles
    let quart = read_csv(&bundle.join("quartiles.csv"));
    for r in read_csv(&bundle.join("engagement.csv")) {
        let v = get(format!("/runs/{id}/videos/{}/engagement", r["video_id"]));
        let e = &v["engagement"];
        cmp(same(&v["dataset"], &r["dataset"]), format!("{} dataset", r["video_id"]))?;
        for col in ["channel_id", "views", "likes", "reported_comments", "comments", "unique_commenters"] {
            cmp(same(&e[col], &r[col]), format!("{} {col}", r["video_id"]))?;
        }
        let q = quart.iter().find(|q| q["dataset"] == r["dataset"] && q["metric"] == "comments_per_video").unwrap();
        let s = &v["quartile_context"]["summary"];
        for col in ["n", "min", "q1", "q2", "q3", "max"] {
            cmp(same(&s[col], &q[col]), format!("{} quartile {col}", r["video_id"]))?;
        }
    }

    // topics against the topic report
    let report: Value = serde_json::from_slice(&std::fs::read(topics_dir.join("report.json")).unwrap()).unwrap();
    let v = get(format!("/runs/{id}/topics"));
    cmp(v["topics"] == report["clusters"], "topic clusters".into())?;
    cmp(v["silhouette"] == report["silhouette"] && v["davies_bouldin"] == report["davies_bouldin"], "topic metrics".into())?;
    let v = get(format!("/runs/{id}/topics?min_coherence=0.05"));
    let want: BTreeSet<i64> = report["clusters"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|c| c["coherence"].as_f64().unwrap() > 0.05)
        .map(|c| c["topic_id"].as_i64().unwrap())
        .collect();
    let got: BTreeSet<i64> = v["topics"].as_array().unwrap().iter().map(|c| c["topic_id"].as_i64().unwrap()).collect();
    cmp(got == want, "coherence-filtered topics".into())?;

    // stance summary
    let summary: Value = serde_json::from_slice(&std::fs::read(stance_dir.join("summary.json")).unwrap()).unwrap();
    for row in summary.as_array().unwrap() {
        let ds = row["dataset"].as_str().unwrap();
        let v = get(format!("/runs/{id}/stance/summary?dataset={ds}"));
        cmp(v["datasets"][0] == *row, format!("stance summary {ds}"))?;
    }
    Ok(format!("{compared} endpoint values equal the bundle over {} datasets", datasets.len()))
}

// ----------------------------------------------------------------

fn run(n: u8, name: &str, body: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let outcome = match catch_unwind(AssertUnwindSafe(body)) {
        Ok(o) => o,
        Err(p) => Err(p
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "panicked".into())),
    };
    let secs = start.elapsed().as_secs_f64();
    match outcome {
        Ok(detail) => {
            println!("PASS criterion {n} {name}: {detail} [{secs:.1} s]");
            true
        }
        Err(why) => {
            println!("FAIL criterion {n} {name}: {why} [{secs:.1} s]");
            false
        }
    }
}

fn main() {
    let mut full: Option<FullRun> = None;
    let results = [
        run(1, "filter quality", filter_quality),
        run(2, "label-model oracle", label_model_oracle),
        run(3, "statistics oracles", statistics_oracles),
        run(4, "clustering recovery", clustering_recovery),
        run(5, "stance rules", stance_rules),
        run(6, "temporal analytics", temporal_analytics),
        run(7, "end-to-end determinism and scale", || end_to_end(&mut full)),
        run(8, "CLI/service parity", || parity(&full)),
    ];
    let passed = results.iter().filter(|r| **r).count();
    println!("acceptance: {passed}/{} criteria passed", results.len());
    if passed != results.len() {
        std::process::exit(1);
    }
}
