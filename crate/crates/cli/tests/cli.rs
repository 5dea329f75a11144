use std::path::Path;
use std::process::{Command, Output};

use sentinel_core::synth::presets::person_classes;

fn sentinel(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sentinel"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("spawn sentinel")
}

fn ok(args: &[&str], cwd: &Path) -> Output {
    let out = sentinel(args, cwd);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn synth(root: &Path, frames: &str) {
    ok(&["synth", "--frames", frames, "--seed", "5", "--out", "frames"], root);
}

#[test]
fn malformed_config_exits_with_2() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.json"), "{\"pipelines\": [\"bins\",]}").unwrap();
    let out = sentinel(&["run", "--config", "bad.json", "--out", "o"], dir.path());
    assert_eq!(out.status.code(), Some(2));

    std::fs::write(dir.path().join("unknown.json"), r#"{"pipelines": ["teleport"], "input": "x"}"#).unwrap();
    let out = sentinel(&["run", "--config", "unknown.json", "--out", "o"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_config_file_exits_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = sentinel(&["run", "--config", "nope.json", "--out", "o"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn run_succeeds_and_unreadable_frame_exits_with_1() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    synth(root, "2");
    std::fs::write(
        root.join("run.json"),
        r#"{"pipelines": ["bins", "litter"], "input": "frames"}"#,
    )
    .unwrap();
    ok(&["run", "--config", "run.json", "--out", "good"], root);
    let report = std::fs::read_to_string(root.join("good/report.jsonl")).unwrap();
    assert!(report.lines().any(|l| l.contains("\"kind\":\"summary\"")));

    std::fs::write(root.join("frames/frame_00001.png"), b"not a png").unwrap();
    let out = sentinel(&["run", "--config", "run.json", "--out", "bad"], root);
    assert_eq!(out.status.code(), Some(1));
    let report = std::fs::read_to_string(root.join("bad/report.jsonl")).unwrap();
    assert!(report.contains("\"partial\":true"));
}

#[test]
fn synth_eval_reports_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    synth(root, "2");
    std::fs::write(
        root.join("run.json"),
        r#"{"pipelines": ["bins", "litter", "stains", "mapping"], "input": "frames"}"#,
    )
    .unwrap();
    ok(&["run", "--config", "run.json", "--out", "out"], root);
    let out = ok(
        &["eval", "--report", "out/report.jsonl", "--manifest", "frames/manifest.json"],
        root,
    );
    let metrics: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(metrics["frames"], 2);
    assert_eq!(metrics["bin_accuracy"], 1.0);
}

#[test]
fn detect_calibrate_map_heatmap_chain() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    synth(root, "3");

    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(root.join("frames/manifest.json")).unwrap()).unwrap();
    std::fs::write(root.join("markers.json"), manifest["markers"].to_string()).unwrap();
    std::fs::write(root.join("people.json"), serde_json::to_string(&person_classes()).unwrap()).unwrap();

    ok(
        &["calibrate", "--frame", "frames/frame_00000.png", "--markers", "markers.json", "--out", "h.json"],
        root,
    );
    let cal: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(root.join("h.json")).unwrap()).unwrap();
    assert!(cal["reprojection_rms_px"].as_f64().unwrap() < 1.0);

    ok(
        &["detect", "--input", "frames", "--detector", "people.json", "--out", "people.jsonl"],
        root,
    );
    ok(
        &["map", "--homography", "h.json", "--detections", "people.jsonl", "--out", "tracks.jsonl"],
        root,
    );
    let tracks = std::fs::read_to_string(root.join("tracks.jsonl")).unwrap();
    assert!(tracks.lines().count() >= 3, "one line per mapped person per frame");

    ok(&["heatmap", "--tracks", "tracks.jsonl", "--out", "heat.pgm"], root);
    let pgm = std::fs::read(root.join("heat.pgm")).unwrap();
    assert!(pgm.starts_with(b"P5"));
}

#[test]
fn benchmark_prints_a_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = ok(&["benchmark", "--resolutions", "640x480,1280x720"], dir.path());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().filter(|l| l.starts_with('|')).count(), 4);
}
