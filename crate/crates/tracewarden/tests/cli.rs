//! End-to-end runs of the binary: the full bench/profile/detect/eval loop,
//! determinism at the file level, and the exit-code contract.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_tracewarden"))
}

fn run_ok(args: &[&str], dir: &Path) -> Output {
    let output = bin().args(args).current_dir(dir).output().expect("spawn");
    assert!(
        output.status.success(),
        "command {args:?} failed:\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&output.stdout),
        String::from_utf8_lossy(&output.stderr)
    );
    output
}

fn run_code(args: &[&str], dir: &Path) -> (i32, String) {
    let output = bin().args(args).current_dir(dir).output().expect("spawn");
    (
        output.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&output.stderr).to_string(),
    )
}

const GEN_SMALL: &[&str] = &[
    "bench",
    "gen",
    "--scenario",
    "clinic",
    "--seed",
    "5",
    "--benign",
    "60",
    "--at-c1",
    "15",
    "--at-c2",
    "15",
    "--out",
    "data",
];

#[test]
fn full_pipeline_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let dir = dir.path();

    run_ok(GEN_SMALL, dir);
    for file in ["traces.jsonl", "benign.jsonl", "labels.json", "judge.json"] {
        assert!(dir.join("data").join(file).exists(), "{file} missing");
    }

    run_ok(
        &[
            "profile",
            "--traces",
            "data/benign.jsonl",
            "--out",
            "profile.json",
            "--judge",
            "data/judge.json",
        ],
        dir,
    );
    let out = run_ok(
        &[
            "detect",
            "--profile",
            "profile.json",
            "--traces",
            "data/traces.jsonl",
            "--out",
            "report.json",
            "--judge",
            "data/judge.json",
            "--jobs",
            "2",
        ],
        dir,
    );
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("classified 90 sessions"), "{stdout}");

    let out = run_ok(
        &[
            "eval",
            "--report",
            "report.json",
            "--labels",
            "data/labels.json",
            "--out",
            "metrics.json",
        ],
        dir,
    );
    let table = String::from_utf8_lossy(&out.stdout);
    assert!(
        table.contains("AT-C1") && table.contains("AT-C2"),
        "{table}"
    );
    assert!(table.contains("precision"), "{table}");

    let metrics: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("metrics.json")).unwrap()).unwrap();
    assert_eq!(metrics["per_category"]["AT-C1"]["tp"], 15);
    assert_eq!(metrics["confusion"]["fp"], 0);
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let dir = dir.path();

    let gen_b: Vec<&str> = GEN_SMALL
        .iter()
        .map(|s| if *s == "data" { "data_b" } else { *s })
        .collect();
    run_ok(GEN_SMALL, dir);
    run_ok(&gen_b, dir);
    for file in ["traces.jsonl", "benign.jsonl", "labels.json"] {
        let a = std::fs::read(dir.join("data").join(file)).unwrap();
        let b = std::fs::read(dir.join("data_b").join(file)).unwrap();
        assert_eq!(a, b, "{file} differs between identical runs");
    }

    for out in ["p1.json", "p2.json"] {
        run_ok(
            &[
                "profile",
                "--traces",
                "data/benign.jsonl",
                "--out",
                out,
                "--judge",
                "data/judge.json",
            ],
            dir,
        );
    }
    let p1 = std::fs::read(dir.join("p1.json")).unwrap();
    let p2 = std::fs::read(dir.join("p2.json")).unwrap();
    assert_eq!(p1, p2, "profile output differs between identical runs");
}

#[test]
fn empty_traces_profile_exits_with_empty_corpus_code() {
    let dir = tempfile::tempdir().unwrap();
    let dir = dir.path();
    std::fs::write(dir.join("empty.jsonl"), "").unwrap();
    let (code, stderr) = run_code(
        &["profile", "--traces", "empty.jsonl", "--out", "p.json"],
        dir,
    );
    assert_eq!(code, 6, "stderr: {stderr}");
}

#[test]
fn empty_traces_detect_succeeds_with_empty_report() {
    let dir = tempfile::tempdir().unwrap();
    let dir = dir.path();
    run_ok(GEN_SMALL, dir);
    run_ok(
        &[
            "profile",
            "--traces",
            "data/benign.jsonl",
            "--out",
            "profile.json",
        ],
        dir,
    );
    std::fs::write(dir.join("empty.jsonl"), "").unwrap();
    run_ok(
        &[
            "detect",
            "--profile",
            "profile.json",
            "--traces",
            "empty.jsonl",
            "--out",
            "report.json",
        ],
        dir,
    );
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["summary"]["total"], 0);
}

#[test]
fn schema_version_mismatch_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let dir = dir.path();
    std::fs::write(dir.join("t.jsonl"), "").unwrap();
    std::fs::write(
        dir.join("profile.json"),
        r#"{"schema_version": 99, "levels": {}, "known_types": [], "rules": []}"#,
    )
    .unwrap();
    let (code, stderr) = run_code(
        &[
            "detect",
            "--profile",
            "profile.json",
            "--traces",
            "t.jsonl",
            "--out",
            "r.json",
        ],
        dir,
    );
    assert_eq!(code, 3, "stderr: {stderr}");
}

#[test]
fn malformed_profile_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let dir = dir.path();
    std::fs::write(dir.join("profile.json"), "not json").unwrap();
    std::fs::write(dir.join("t.jsonl"), "").unwrap();
    let (code, _) = run_code(
        &[
            "detect",
            "--profile",
            "profile.json",
            "--traces",
            "t.jsonl",
            "--out",
            "r.json",
        ],
        dir,
    );
    assert_eq!(code, 2);
}

#[test]
fn missing_input_exits_5() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _) = run_code(
        &["profile", "--traces", "nope.jsonl", "--out", "p.json"],
        dir.path(),
    );
    assert_eq!(code, 5);
}

#[test]
fn invalid_bench_spec_exits_8() {
    let dir = tempfile::tempdir().unwrap();
    let (code, stderr) = run_code(
        &[
            "bench",
            "gen",
            "--scenario",
            "clinic",
            "--seed",
            "1",
            "--benign",
            "5",
            "--at-c2",
            "5",
            "--out",
            "data",
        ],
        dir.path(),
    );
    assert_eq!(code, 8, "stderr: {stderr}");
}

#[test]
fn unreachable_remote_judge_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let dir = dir.path();
    run_ok(GEN_SMALL, dir);
    std::fs::write(
        dir.join("remote.json"),
        r#"{"mode": "remote", "endpoint": "http://127.0.0.1:9/", "retries": 0, "timeout_secs": 1}"#,
    )
    .unwrap();
    let (code, stderr) = run_code(
        &[
            "profile",
            "--traces",
            "data/benign.jsonl",
            "--out",
            "p.json",
            "--judge",
            "remote.json",
        ],
        dir,
    );
    assert_eq!(code, 4, "stderr: {stderr}");
}

#[test]
fn label_mismatch_exits_7() {
    let dir = tempfile::tempdir().unwrap();
    let dir = dir.path();
    run_ok(GEN_SMALL, dir);
    run_ok(
        &[
            "profile",
            "--traces",
            "data/benign.jsonl",
            "--out",
            "profile.json",
        ],
        dir,
    );
    run_ok(
        &[
            "detect",
            "--profile",
            "profile.json",
            "--traces",
            "data/benign.jsonl",
            "--out",
            "report.json",
        ],
        dir,
    );
    // Labels cover the full dataset; the report covers only the benign part.
    let (code, stderr) = run_code(
        &[
            "eval",
            "--report",
            "report.json",
            "--labels",
            "data/labels.json",
        ],
        dir,
    );
    assert_eq!(code, 7, "stderr: {stderr}");
}

#[test]
fn cross_scenario_detection_flags_everything_without_crashing() {
    let dir = tempfile::tempdir().unwrap();
    let dir = dir.path();
    run_ok(GEN_SMALL, dir);
    run_ok(
        &[
            "bench",
            "gen",
            "--scenario",
            "procurement",
            "--seed",
            "5",
            "--benign",
            "96",
            "--at-c1",
            "0",
            "--at-c2",
            "0",
            "--out",
            "proc",
        ],
        dir,
    );
    run_ok(
        &[
            "profile",
            "--traces",
            "data/benign.jsonl",
            "--out",
            "clinic-profile.json",
        ],
        dir,
    );
    let out = run_ok(
        &[
            "detect",
            "--profile",
            "clinic-profile.json",
            "--traces",
            "proc/traces.jsonl",
            "--out",
            "cross-report.json",
        ],
        dir,
    );
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("classified 96 sessions"), "{stdout}");
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("cross-report.json")).unwrap())
            .unwrap();
    // Foreign-scenario traces should be overwhelmingly anomalous.
    assert_eq!(report["summary"]["normal"], 0);
}
