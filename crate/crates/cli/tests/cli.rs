use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn scissor(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_scissor")).args(args).current_dir(cwd).output().unwrap()
}

fn ok(out: &Output) {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
}

fn fixture() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/features.csv")
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn seed_is_mandatory() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        vec!["generate", "--out", "t.json"],
        vec!["rank", "--features", "f.csv", "--out", "r.json"],
        vec!["report", "--inputs", "a.json", "--out", "b.json"],
    ] {
        let out = scissor(&args, dir.path());
        assert!(!out.status.success());
        assert!(String::from_utf8_lossy(&out.stderr).contains("--seed"));
    }
}

#[test]
fn subcommands_chain() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&scissor(&["generate", "--seed", "5", "--count", "300", "--out", "tests.json"], d));
    ok(&scissor(&["label", "--seed", "5", "--tests", "tests.json", "--aggression", "1.5", "--out", "labeled.json"], d));
    ok(&scissor(&["extract", "--seed", "5", "--labeled", "labeled.json", "--out", "features.csv"], d));
    ok(&scissor(&["train", "--seed", "5", "--features", "features.csv", "--model", "tree", "--out", "model.json"], d));
    ok(&scissor(&["eval", "--seed", "5", "--model", "model.json", "--features", "features.csv", "--report", "eval.json"], d));
    ok(&scissor(&["pool", "--seed", "5", "--labeled", "labeled.json", "--composition", "80/20", "--out", "pool.json"], d));
    ok(&scissor(&["fix", "--seed", "5", "--pool", "pool.json", "--model", "model.json", "--reps", "5", "--out", "fix.json"], d));
    ok(&scissor(&["reach", "--seed", "5", "--pool", "pool.json", "--oracle", "--reps", "5", "--out", "reach.json"], d));

    let labeled = json(&d.join("labeled.json"));
    let first = &labeled[0];
    for key in ["test_id", "label", "obe_segments", "sim_duration_s", "wall_cost_s"] {
        assert!(first.get(key).is_some(), "labeled test lacks {key}");
    }
    let eval = json(&d.join("eval.json"));
    let acc = eval["accuracy"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&acc));

    ok(&scissor(&["report", "--seed", "5", "--inputs", "fix.json", "--out", "single.json"], d));
    assert_eq!(json(&d.join("single.json")), json(&d.join("fix.json")));
    ok(&scissor(
        &["report", "--seed", "5", "--inputs", "fix.json", "reach.json", "--out", "all.json", "--csv-dir", "csv"],
        d,
    ));
    let all = json(&d.join("all.json"));
    let experiments: Vec<&str> = all["selection"].as_array().unwrap().iter().map(|s| s["experiment"].as_str().unwrap()).collect();
    assert_eq!(experiments, ["fix", "fix", "reach", "reach"]);
    let csv = fs::read_to_string(d.join("csv/selection.csv")).unwrap();
    assert!(csv.lines().next().unwrap().starts_with("experiment,strategy,pool,target,repetition"));
}

fn h(labels: &[bool]) -> f64 {
    let n = labels.len() as f64;
    let p = labels.iter().filter(|&&l| l).count() as f64 / n;
    [p, 1.0 - p].iter().filter(|&&q| q > 0.0).map(|&q| -q * q.log2()).sum()
}

fn best_gain(values: &[f64], y: &[bool]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v.dedup();
    let n = y.len() as f64;
    v.windows(2)
        .map(|w| {
            let t = (w[0] + w[1]) / 2.0;
            let l: Vec<bool> = values.iter().zip(y).filter(|(x, _)| **x <= t).map(|(_, l)| *l).collect();
            let r: Vec<bool> = values.iter().zip(y).filter(|(x, _)| **x > t).map(|(_, l)| *l).collect();
            h(y) - l.len() as f64 / n * h(&l) - r.len() as f64 / n * h(&r)
        })
        .fold(0.0, f64::max)
}

#[test]
fn rank_only_pipeline_on_fixture() {
    let dir = tempfile::tempdir().unwrap();
    fs::copy(fixture(), dir.path().join("features.csv")).unwrap();
    let cfg = r#"{"seed": 1, "stages": ["rank"], "rank": {"methods": ["infogain", "correlation"], "input": "features.csv"}}"#;
    fs::write(dir.path().join("rank.json"), cfg).unwrap();
    ok(&scissor(&["pipeline", "--seed", "1", "--config", "rank.json", "--out-dir", "out"], dir.path()));

    let text = fs::read_to_string(fixture()).unwrap();
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    let y: Vec<bool> = rows.iter().map(|r| *r.last().unwrap() == "unsafe").collect();
    let features = &header[2..header.len() - 1];

    let ranking = json(&dir.path().join("out/ranking.json"));
    let info = &ranking[0];
    assert_eq!(info["method"], "infogain");
    assert_eq!(info["threshold"], 0.01);
    let listed = info["features"].as_array().unwrap();
    assert_eq!(listed.len(), features.len());
    let mut prev = f64::INFINITY;
    for f in listed {
        let name = f["feature"].as_str().unwrap();
        let j = 2 + features.iter().position(|c| *c == name).unwrap();
        let col: Vec<f64> = rows.iter().map(|r| r[j].parse().unwrap()).collect();
        let want = best_gain(&col, &y);
        let got = f["score"].as_f64().unwrap();
        assert!((got - want).abs() < 1e-9, "{name}: {got} vs {want}");
        assert_eq!(f["above_threshold"].as_bool().unwrap(), got >= 0.01);
        assert!(got <= prev);
        prev = got;
    }
    assert_eq!(ranking[1]["method"], "correlation");
    assert!(dir.path().join("out/ranking.csv").exists());
    let manifest = json(&dir.path().join("out/manifest.json"));
    assert_eq!(manifest["inputs"][0]["path"], "features.csv");
}

#[test]
fn pipeline_reruns_are_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{
        "seed": 9,
        "generate": {"count": 400},
        "fix": {"reps": 5, "pools": ["80/20", "60/40"]},
        "reach": {"reps": 5, "pools": ["60/40"]},
        "realtime": {"modes": ["baseline", "pre_trained"], "config": {"budget_s": 1500}}
    }"#;
    fs::write(dir.path().join("cfg.json"), cfg).unwrap();
    ok(&scissor(&["pipeline", "--seed", "9", "--config", "cfg.json", "--out-dir", "a"], dir.path()));
    ok(&scissor(&["pipeline", "--seed", "9", "--config", "cfg.json", "--out-dir", "b"], dir.path()));
    let manifest = json(&dir.path().join("a/manifest.json"));
    assert_eq!(manifest["master_seed"], 9);
    assert!(manifest["config"].get("out_dir").is_none());
    for a in manifest["artifacts"].as_array().unwrap() {
        let name = a["path"].as_str().unwrap();
        let bytes = fs::read(dir.path().join("a").join(name)).unwrap();
        assert_eq!(bytes, fs::read(dir.path().join("b").join(name)).unwrap(), "{name}");
        assert_eq!(a["bytes"].as_u64().unwrap(), bytes.len() as u64);
    }
    assert_eq!(fs::read(dir.path().join("a/manifest.json")).unwrap(), fs::read(dir.path().join("b/manifest.json")).unwrap());

    // Deleting the outputs and rerunning from the stored config reproduces them.
    let stored = serde_json::to_string(&manifest["config"]).unwrap();
    fs::write(dir.path().join("again.json"), stored).unwrap();
    fs::remove_dir_all(dir.path().join("b")).unwrap();
    ok(&scissor(&["pipeline", "--seed", "9", "--config", "again.json", "--out-dir", "b"], dir.path()));
    assert_eq!(fs::read(dir.path().join("a/fix.json")).unwrap(), fs::read(dir.path().join("b/fix.json")).unwrap());
}

#[test]
fn missing_input_reports_stage_and_path() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("cfg.json"), r#"{"seed": 1, "stages": ["train"], "train": {"input": "gone/labeled.json"}}"#).unwrap();
    let out = scissor(&["pipeline", "--seed", "1", "--config", "cfg.json"], dir.path());
    assert!(!out.status.success());
    let record: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(record["error"], "stage_failure");
    assert_eq!(record["stage"], "train");
    assert!(record["path"].as_str().unwrap().ends_with("gone/labeled.json"));
}

#[test]
fn unknown_config_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("cfg.json"), r#"{"seed": 1, "stagez": []}"#).unwrap();
    let out = scissor(&["pipeline", "--seed", "1", "--config", "cfg.json"], dir.path());
    assert!(!out.status.success());
    let record: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(record["error"], "config_invalid");
}
