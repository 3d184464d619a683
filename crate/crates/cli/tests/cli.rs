use std::path::Path;
use std::process::{Command, Output};

fn factguard(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_factguard"))
        .args(args)
        .arg("-q")
        .output()
        .expect("spawn factguard")
}

fn ok(args: &[&str]) -> Output {
    let out = factguard(args);
    assert!(
        out.status.success(),
        "factguard {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write_config(dir: &Path, epochs: usize) -> std::path::PathBuf {
    let path = dir.join("run.json");
    std::fs::write(
        &path,
        format!(
            r#"{{"model": {{"d": 8, "heads": 2}},
                "data": {{"dataset": "data/dataset.jsonl", "bundle": "data/encodings"}},
                "train": {{"batch_size": 8, "max_epochs": {epochs}}},
                "distill": {{"batch_size": 8, "max_epochs": 3}}}}"#
        ),
    )
    .unwrap();
    path
}

fn csv_field(path: &Path, row: &str, column: &str) -> String {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let col = header.iter().position(|h| *h == column).unwrap();
    let line = lines.find(|l| l.split(',').next() == Some(row)).unwrap();
    line.split(',').nth(col).unwrap().to_string()
}

#[test]
fn train_then_infer_reproduces_validation_accuracy() {
    let tmp = tempfile::tempdir().unwrap();
    let root = tmp.path();
    ok(&["synth", "--out", s(&root.join("data")), "--size", "120", "--d", "8"]);
    let config = write_config(root, 6);
    let run = root.join("run");
    ok(&["train", "--config", s(&config), "--out", s(&run)]);
    for f in ["config.json", "history.csv", "metrics.csv", "meta.json", "checkpoints/best.fg1"] {
        assert!(run.join(f).is_file(), "missing {f}");
    }

    let out = ok(&[
        "infer",
        "--teacher",
        s(&run.join("checkpoints/best.fg1")),
        "--input",
        s(&root.join("data/dataset.jsonl")),
        "--bundle",
        s(&root.join("data/encodings")),
        "--split",
        "val",
    ]);
    let labels: std::collections::HashMap<String, u8> = std::fs::read_to_string(root.join("data/dataset.jsonl"))
        .unwrap()
        .lines()
        .map(|l| {
            let v: serde_json::Value = serde_json::from_str(l).unwrap();
            (v["id"].as_str().unwrap().to_string(), v["y"].as_u64().unwrap() as u8)
        })
        .collect();
    let stdout = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<(&str, &str)> = stdout
        .lines()
        .map(|l| {
            let f: Vec<&str> = l.split('\t').collect();
            (f[0], f[2])
        })
        .collect();
    assert!(!rows.is_empty());
    let correct = rows
        .iter()
        .filter(|(id, verdict)| (*verdict == "fake") == (labels[*id] == 1))
        .count();
    let acc = correct as f64 / rows.len() as f64;
    let recorded: f64 = csv_field(&run.join("metrics.csv"), "val", "acc").parse().unwrap();
    assert_eq!(acc, recorded);
    assert_eq!(
        csv_field(&run.join("metrics.csv"), "val", "count"),
        rows.len().to_string()
    );
}

#[test]
fn distill_and_eval_write_their_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let root = tmp.path();
    ok(&["synth", "--out", s(&root.join("data")), "--size", "120", "--d", "8"]);
    let config = write_config(root, 3);
    let run = root.join("run");
    ok(&["train", "--config", s(&config), "--out", s(&run)]);
    let teacher = run.join("checkpoints/best.fg1");
    let before = std::fs::read(&teacher).unwrap();
    let dist = root.join("dist");
    ok(&["distill", "--teacher", s(&teacher), "--config", s(&config), "--out", s(&dist), "--lambda", "8"]);
    assert_eq!(std::fs::read(&teacher).unwrap(), before);
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dist.join("summary.json")).unwrap()).unwrap();
    assert!(summary["initial_val_mse"].as_f64().unwrap() > 0.0);

    let eval = root.join("eval");
    ok(&["eval", "--student", s(&dist.join("student.fgd1")), "--config", s(&config), "--out", s(&eval)]);
    assert!(eval.join("metrics.csv").is_file());
    assert!(eval.join("confidence.csv").is_file());
}

const RAW: &str = "raw.jsonl";

fn write_raw(dir: &Path) {
    let lines: Vec<String> = (0..10)
        .map(|i| {
            format!(
                r#"{{"id": "r{i}", "n": "Officials in town {i} reported flooding after heavy rain on Monday.", "y": {}, "lang": "en", "timestamp": {i}}}"#,
                i % 2
            )
        })
        .collect();
    std::fs::write(dir.join(RAW), lines.join("\n")).unwrap();
    std::fs::write(
        dir.join("mock.jsonl"),
        r#"{"id": "r3", "role": "topic_content", "responses": ["stock markets rallied"]}"#,
    )
    .unwrap();
}

fn prepare(dir: &Path, out: &str) -> Output {
    factguard(&[
        "prepare-data",
        "--in",
        s(&dir.join(RAW)),
        "--out",
        s(&dir.join(out).join("dataset.jsonl")),
        "--lang",
        "en",
        "--mock",
        s(&dir.join("mock.jsonl")),
    ])
}

#[test]
fn prepare_data_with_mock_is_deterministic_and_drops_gate_failures() {
    let tmp = tempfile::tempdir().unwrap();
    let root = tmp.path();
    write_raw(root);
    for out in ["a", "b"] {
        let o = prepare(root, out);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let dataset = std::fs::read_to_string(root.join("a/dataset.jsonl")).unwrap();
    assert_eq!(dataset.lines().count(), 9);
    assert!(!dataset.contains("\"r3\""));
    assert_eq!(csv_field(&root.join("a/gate_report.csv"), "r3", "status"), "gate_failed");
    assert_eq!(csv_field(&root.join("a/gate_report.csv"), "r3", "attempts"), "4");
    for f in ["dataset.jsonl", "gate_report.csv"] {
        assert_eq!(
            std::fs::read(root.join("a").join(f)).unwrap(),
            std::fs::read(root.join("b").join(f)).unwrap(),
            "{f} differs between runs"
        );
    }
}

#[test]
fn prepare_data_without_provider_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    write_raw(tmp.path());
    let o = factguard(&[
        "prepare-data",
        "--in",
        s(&tmp.path().join(RAW)),
        "--out",
        s(&tmp.path().join("x.jsonl")),
        "--lang",
        "en",
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn student_inference_refuses_llm_inputs() {
    let o = factguard(&["infer", "--student", "s.fgd1", "--news", "text", "--topic-content", "c"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn train_without_data_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let o = factguard(&["train", "--out", s(&tmp.path().join("run"))]);
    assert_eq!(o.status.code(), Some(2));

    let bad = tmp.path().join("bad.json");
    std::fs::write(&bad, r#"{"train": {"learning_rate": 0.1, "momentum": 0.9}}"#).unwrap();
    let o = factguard(&["train", "--config", s(&bad), "--out", s(&tmp.path().join("run"))]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn missing_checkpoint_is_a_runtime_error() {
    let o = factguard(&["infer", "--teacher", "/nonexistent/best.fg1", "--news", "n"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn gradcheck_passes_on_two_seeds() {
    let out = ok(&["gradcheck", "--seeds", "2"]);
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert_eq!(stdout.lines().filter(|l| l.ends_with("ok")).count(), 2);
}
