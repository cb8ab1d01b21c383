use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::time::{Duration, Instant};

fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn run(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_emograph"))
        .args(args)
        .arg("--config")
        .arg(fixtures().join("run.conf"))
        .arg("--out")
        .arg(out)
        .output()
        .unwrap()
}

fn ok(out: &Path, args: &[&str]) -> String {
    let o = run(out, args);
    assert!(
        o.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&o.stderr)
    );
    String::from_utf8(o.stdout).unwrap()
}

fn error_line(o: &Output) -> serde_json::Value {
    let stderr = String::from_utf8_lossy(&o.stderr);
    let line = stderr.lines().last().expect("an error line");
    serde_json::from_str(line).unwrap_or_else(|_| panic!("not JSON: {line}"))
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn full_chain_on_fixtures() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    let start = Instant::now();
    for stage in ["preprocess", "mine", "build-graphs", "train", "eval", "bench"] {
        ok(out, &[stage, "--threads", "2"]);
    }
    let stdout = ok(out, &["infer", "--text", "a man surfing a wave on a sunny beach"]);
    assert!(start.elapsed() < Duration::from_secs(60), "{:?}", start.elapsed());
    assert!(stdout.contains("text-1"));

    for file in ["corpus.json", "cooccur.json", "graphs/train/manifest.json", "checkpoint.json", "eval_report.json", "latency_report.json"] {
        let meta = &json(&out.join(file))["meta"];
        assert_eq!(meta["seed"], 0, "{file}");
        assert_eq!(meta["config_hash"].as_str().unwrap().len(), 16, "{file}");
        assert!(meta["tool_version"].is_string(), "{file}");
    }

    let log = std::fs::read_to_string(out.join("train_log.csv")).unwrap();
    let mut lines = log.lines();
    assert!(lines.next().unwrap().starts_with("# {"));
    assert_eq!(lines.next().unwrap(), "epoch,train_loss,val_loss,val_mAP");
    assert_eq!(lines.count(), 30);

    let report = json(&out.join("eval_report.json"));
    let map = report["map"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&map));
    assert_eq!(report["per_category_ap"].as_array().unwrap().len(), 26);

    let latency = json(&out.join("latency_report.json"));
    assert!(latency["min_ms"].as_f64().unwrap() <= latency["mean_ms"].as_f64().unwrap());

    let preds = std::fs::read_to_string(out.join("predictions.jsonl")).unwrap();
    let rows: Vec<serde_json::Value> = preds.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert!(rows[0]["meta"].is_object());
    assert_eq!(rows.len(), 2);
    let scores = rows[1]["scores"].as_array().unwrap();
    assert_eq!(scores.len(), 26);
    assert!(scores.iter().all(|s| {
        let s = s.as_f64().unwrap();
        s > 0.0 && s < 1.0
    }));
    assert_eq!(rows[1]["vad"].as_array().unwrap().len(), 3);
    assert_eq!(rows[1]["top"].as_array().unwrap().len(), 3);
    assert_eq!(rows[1]["degenerate"], false);

    // Rerunning a stage reproduces its outputs byte for byte.
    let before = std::fs::read(out.join("graphs/train/manifest.json")).unwrap();
    let ck = std::fs::read(out.join("checkpoint.json")).unwrap();
    ok(out, &["build-graphs", "--threads", "1"]);
    ok(out, &["train"]);
    assert_eq!(std::fs::read(out.join("graphs/train/manifest.json")).unwrap(), before);
    assert_eq!(std::fs::read(out.join("checkpoint.json")).unwrap(), ck);
}

#[test]
fn stage_order_is_enforced() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    let o = run(out, &["eval"]);
    assert_eq!(o.status.code(), Some(3));
    let err = error_line(&o);
    assert_eq!(err["kind"], "input");
    assert!(err["message"].as_str().unwrap().starts_with("run train first"), "{err}");

    let o = run(out, &["mine"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(error_line(&o)["message"].as_str().unwrap().starts_with("run preprocess first"));
}

#[test]
fn mixed_config_needs_force() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    ok(out, &["preprocess"]);
    ok(out, &["mine"]);
    let o = run(out, &["build-graphs", "--set", "window=5"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(error_line(&o)["message"].as_str().unwrap().contains("rerun mine"));
    let o = run(out, &["build-graphs", "--set", "window=5", "--force"]);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("warning"));
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    for args in [
        vec!["explode"],
        vec!["mine", "--set", "colour=red"],
        vec!["mine", "--set", "pooling=max"],
        vec!["infer"],
    ] {
        let o = run(out, &args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        assert_eq!(error_line(&o)["kind"], "usage", "{args:?}");
    }
}
