use assert_cmd::Command;
use std::fs;
use std::path::Path;

fn cli() -> Command {
    let mut c = Command::cargo_bin("threadscope").unwrap();
    c.env("RUST_LOG", "warn");
    c
}

fn synth_corpus(dir: &Path, seed: u64) -> std::path::PathBuf {
    let out = dir.join(format!("synth-{seed}.jsonl"));
    cli()
        .args(["synth", "corpus", "--seed", &seed.to_string(), "--comments", "120", "--out"])
        .arg(&out)
        .assert()
        .success();
    out
}

fn small_config(dir: &Path) -> std::path::PathBuf {
    let p = dir.join("cfg.toml");
    fs::write(&p, "[topics]\nmin_cluster_size = 2\ntarget_dim = 2\n").unwrap();
    p
}

#[test]
fn stage_commands_chain() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let corpus = synth_corpus(d, 3);
    let cfg = small_config(d);
    cli()
        .args(["ingest", "--category", "qanon", "--input"])
        .arg(&corpus)
        .arg("--out")
        .arg(d.join("ingested.jsonl"))
        .assert()
        .success();
    cli()
        .arg("filter")
        .arg("--corpus")
        .arg(d.join("ingested.jsonl"))
        .arg("--out")
        .arg(d.join("kept.jsonl"))
        .arg("--dropped")
        .arg(d.join("dropped.jsonl"))
        .args(["--threshold", "0.5"])
        .assert()
        .success();
    cli()
        .arg("topics")
        .arg("--config")
        .arg(&cfg)
        .arg("--corpus")
        .arg(d.join("kept.jsonl"))
        .args(["--backend", "hashed", "--min-cluster-size", "3", "--out"])
        .arg(d.join("report.json"))
        .assert()
        .success();
    let report: serde_json::Value = serde_json::from_slice(&fs::read(d.join("report.json")).unwrap()).unwrap();
    assert!(report["points"].as_array().is_some_and(|p| !p.is_empty()));
    cli()
        .arg("signals")
        .arg("--corpus")
        .arg(d.join("kept.jsonl"))
        .arg("--out")
        .arg(d.join("signals.jsonl"))
        .assert()
        .success();
    cli()
        .arg("stance")
        .arg("--corpus")
        .arg(d.join("kept.jsonl"))
        .arg("--topics")
        .arg(d.join("report.json"))
        .arg("--out")
        .arg(d.join("stance.jsonl"))
        .assert()
        .success();
    let kept = fs::read_to_string(d.join("kept.jsonl")).unwrap();
    let kept_comments = kept.lines().filter(|l| l.contains("\"kind\":\"comment\"")).count();
    let stanced = fs::read_to_string(d.join("stance.jsonl")).unwrap().lines().count();
    assert_eq!(stanced, kept_comments);
    assert_eq!(fs::read_to_string(d.join("signals.jsonl")).unwrap().lines().count(), kept_comments);
    cli()
        .arg("analyze")
        .arg("--corpus")
        .arg(d.join("kept.jsonl"))
        .arg("--out")
        .arg(d.join("reports"))
        .args(["--bucket", "week", "--spike-factor", "2.5"])
        .assert()
        .success();
    for f in ["ecdf.csv", "quartiles.csv", "timeseries.csv", "report.json"] {
        assert!(d.join("reports").join(f).is_file(), "{f}");
    }
}

#[test]
fn threshold_out_of_range_fails() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = synth_corpus(dir.path(), 4);
    cli()
        .arg("filter")
        .arg("--corpus")
        .arg(&corpus)
        .arg("--out")
        .arg(dir.path().join("k.jsonl"))
        .args(["--threshold", "1.5"])
        .assert()
        .failure();
}

#[test]
fn diff_and_audit() {
    let dir = tempfile::tempdir().unwrap();
    let a = synth_corpus(dir.path(), 5);
    let out = cli().arg("diff").arg("--a").arg(&a).arg("--b").arg(&a).output().unwrap();
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(v.is_object());
    cli().arg("audit").arg("--corpus").arg(&a).arg("--out").arg(dir.path().join("audit")).assert().success();
    let csv = fs::read_to_string(dir.path().join("audit/discrepancies.csv")).unwrap();
    assert!(csv.lines().count() > 1);
    assert!(dir.path().join("audit/histogram.csv").is_file());
}

#[test]
fn ingest_from_fixture_client() {
    let dir = tempfile::tempdir().unwrap();
    let fixture = dir.path().join("fixture");
    fs::create_dir_all(&fixture).unwrap();
    let corpus = synth_corpus(dir.path(), 6);
    fs::copy(&corpus, fixture.join("corpus.jsonl")).unwrap();
    fs::write(fixture.join("fixture.json"), r#"{"page_size": 7}"#).unwrap();
    let out = dir.path().join("fetched.jsonl");
    cli()
        .arg("ingest")
        .arg("--client")
        .arg(format!("fixture:{}", fixture.display()))
        .arg("--out")
        .arg(&out)
        .assert()
        .success();
    let count = |p: &Path| fs::read_to_string(p).unwrap().lines().filter(|l| l.contains("\"kind\":\"comment\"")).count();
    assert_eq!(count(&out), count(&corpus));
    cli().args(["ingest", "--client", "youtube:x", "--out"]).arg(&out).assert().failure();
}

#[test]
fn pipeline_run_is_reused() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = synth_corpus(dir.path(), 7);
    let cfg = small_config(dir.path());
    let runs = dir.path().join("runs");
    let run = || {
        let out = cli()
            .args(["pipeline", "run", "--config"])
            .arg(&cfg)
            .arg("--corpus")
            .arg(&corpus)
            .arg("--out")
            .arg(&runs)
            .output()
            .unwrap();
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        String::from_utf8(out.stdout).unwrap().trim().to_string()
    };
    let id = run();
    assert_eq!(id.len(), 16);
    assert_eq!(run(), id);
    let manifest = fs::read_to_string(runs.join(&id).join("run.json")).unwrap();
    assert!(manifest.contains("\"sealed\""));
}

#[test]
fn stance_eval_prints_report() {
    let dir = tempfile::tempdir().unwrap();
    let gold_dir = dir.path().join("gold");
    cli().args(["synth", "stance-gold", "--n", "40", "--out"]).arg(&gold_dir).assert().success();
    assert!(fs::read_dir(gold_dir.join("kb")).unwrap().count() > 0);
    // predictions equal to gold
    let pred: String = fs::read_to_string(gold_dir.join("gold.jsonl"))
        .unwrap()
        .lines()
        .map(|l| {
            let v: serde_json::Value = serde_json::from_str(l).unwrap();
            format!(
                "{}\n",
                serde_json::json!({ "comment_id": v["comment_id"], "label": v["gold"] })
            )
        })
        .collect();
    fs::write(dir.path().join("pred.jsonl"), pred).unwrap();
    let out = cli()
        .arg("stance-eval")
        .arg("--pred")
        .arg(dir.path().join("pred.jsonl"))
        .arg("--gold")
        .arg(gold_dir.join("gold.jsonl"))
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let acc = text.lines().find(|l| l.trim_start().starts_with("accuracy")).unwrap();
    assert!(acc.contains("1.00"), "{text}");
    assert!(text.contains("Favour") && text.contains("Against"));
}
