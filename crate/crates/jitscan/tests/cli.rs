mod common;

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn jitscan(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_jitscan"))
        .args(args)
        .current_dir(cwd)
        .env_remove("JITSCAN_MODEL_URL")
        .env("RUST_LOG", "error")
        .output()
        .unwrap()
}

fn ok(args: &[&str], cwd: &Path) -> String {
    let out = jitscan(args, cwd);
    assert!(
        out.status.success(),
        "jitscan {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn sample_ids(samples: &Path) -> Vec<String> {
    fs::read_to_string(samples.join("samples.jsonl"))
        .unwrap()
        .lines()
        .map(|l| {
            serde_json::from_str::<serde_json::Value>(l).unwrap()["sample_id"]
                .as_str()
                .unwrap()
                .to_string()
        })
        .collect()
}

#[test]
fn pair_run_eval_pipeline() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let entries = common::five_repos(&dir.join("hist"));
    let manifest: String = entries
        .iter()
        .map(|e| serde_json::to_string(e).unwrap() + "\n")
        .collect();
    fs::write(dir.join("manifest.jsonl"), manifest).unwrap();

    ok(
        &[
            "pair",
            "build",
            "--manifest",
            "manifest.jsonl",
            "--history-root",
            "hist",
            "-o",
            "samples",
        ],
        dir,
    );
    let ids = sample_ids(&dir.join("samples"));
    assert_eq!(ids.len(), 5);
    assert_eq!(fs::read_to_string(dir.join("samples/rejections.jsonl")).unwrap(), "");
    fs::write(dir.join("script.jsonl"), common::five_react_script(&ids)).unwrap();

    for out in ["run_a", "run_b"] {
        ok(
            &[
                "run",
                "--detector",
                "react",
                "--strategy",
                "cot",
                "--script",
                "script.jsonl",
                "--samples",
                "samples",
                "-o",
                out,
                "--parallelism",
                "3",
            ],
            dir,
        );
    }
    assert_eq!(
        fs::read(dir.join("run_a/records.jsonl")).unwrap(),
        fs::read(dir.join("run_b/records.jsonl")).unwrap()
    );

    let json: serde_json::Value = serde_json::from_str(&ok(&["eval", "run_a", "--format", "json"], dir)).unwrap();
    assert_eq!(json[0]["report"]["pacc"]["value"], 0.4);
    assert_eq!(json[0]["report"]["f1"]["value"], 0.6);
    assert_eq!(json[0]["method"], "ReAct Agent w/ CoT");

    // Every vulnerable prediction already names the exact CWE.
    fs::write(dir.join("parents.json"), r#"{"CWE-918": "CWE-20"}"#).unwrap();
    let hier: serde_json::Value = serde_json::from_str(&ok(
        &["eval", "run_a", "--format", "json", "--cwe-parents", "parents.json"],
        dir,
    ))
    .unwrap();
    assert_eq!(hier[0]["report"]["cla"], json[0]["report"]["cla"]);

    let table = ok(&["eval", "run_a", "run_b", "--histogram-csv", "hist.csv"], dir);
    let rows: Vec<&str> = table.lines().collect();
    assert_eq!(rows.len(), 4, "{table}");
    assert!(
        rows[2].starts_with("ReAct Agent w/ CoT") && rows[2].contains("60.00") && rows[2].contains("40.00"),
        "{table}"
    );
    let csv = fs::read_to_string(dir.join("hist.csv")).unwrap();
    assert!(csv.starts_with("method,tool_invocations,count\n"));
    assert!(csv.contains("ReAct Agent w/ CoT,1,7\n"), "{csv}");
}

#[test]
fn graph_build_and_queries() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    fs::create_dir_all(dir.join("snap")).unwrap();
    fs::write(dir.join("snap/m.c"), common::module_text("decode", 1)).unwrap();
    ok(&["graph", "build", "snap", "-o", "graph.json"], dir);
    let doc: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.join("graph.json")).unwrap()).unwrap();
    assert_eq!(doc["functions"].as_array().unwrap().len(), 3);

    let callers = ok(
        &["graph", "query", "callers", "copy_bytes", "--graph", "graph.json"],
        dir,
    );
    assert_eq!(callers, "Callers of copy_bytes: decode (line 11)\n");
    let callees = ok(&["graph", "query", "callees", "decode", "--graph", "graph.json"], dir);
    assert_eq!(
        callees,
        "Callees of decode: memcpy (line 10, external), copy_bytes (line 11)\n"
    );
    let def = ok(
        &[
            "graph",
            "query",
            "def",
            "copy_bytes",
            "--graph",
            "graph.json",
            "--snapshot",
            "snap",
        ],
        dir,
    );
    assert!(
        def.starts_with("Definition of copy_bytes (m.c, lines 3-6):\nstatic int copy_bytes"),
        "{def}"
    );
    let deps = ok(&["graph", "query", "deps", "decode", "--snapshot", "snap"], dir);
    let lines: Vec<&str> = deps.lines().collect();
    assert_eq!(lines.len(), 2, "{deps}");
    assert!(lines.iter().all(|l| l.split('\t').count() == 4));

    let missing = jitscan(&["graph", "query", "def", "copy_bytes", "--graph", "graph.json"], dir);
    assert!(!missing.status.success());
    assert!(String::from_utf8_lossy(&missing.stderr).starts_with("error: "));
}

#[test]
fn scan_writes_report() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    fs::create_dir_all(dir.join("snap")).unwrap();
    fs::write(dir.join("snap/m.c"), common::module_text("decode", 1)).unwrap();
    fs::write(
        dir.join("known.jsonl"),
        "{\"file\":\"m.c\",\"function_name\":\"decode\",\"cwe_id\":\"CWE-787\"}\n",
    )
    .unwrap();
    let script = [
        ("m.c::copy_bytes", "Final Answer: benign"),
        ("m.c::decode", "Final Answer: vulnerable CWE-787"),
        ("m.c::entry_decode", "Final Answer: vulnerable CWE-20"),
    ]
    .iter()
    .map(|(f, t)| serde_json::json!({"function": f, "text": t}).to_string() + "\n")
    .collect::<String>();
    fs::write(dir.join("scan.jsonl"), script).unwrap();
    ok(
        &[
            "scan",
            "snap",
            "--known",
            "known.jsonl",
            "--detector",
            "plain",
            "--script",
            "scan.jsonl",
            "-o",
            "out",
        ],
        dir,
    );
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.join("out/scan.json")).unwrap()).unwrap();
    assert_eq!(report["result"]["marked"], 2);
    assert_eq!(report["metrics"]["vdr"], 1.0);
    assert_eq!(report["cla"]["value"], 1.0);
    assert_eq!(fs::read_dir(dir.join("out/transcripts")).unwrap().count(), 3);
    assert_eq!(
        fs::read_to_string(dir.join("out/functions.jsonl"))
            .unwrap()
            .lines()
            .count(),
        3
    );

    let eval: serde_json::Value = serde_json::from_str(&ok(&["eval", "out", "--format", "json"], dir)).unwrap();
    assert_eq!(eval[0]["report"]["scan"]["mfr"], 2.0 / 3.0);
}

#[test]
fn bad_inputs_fail_cleanly() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let out = jitscan(
        &[
            "pair",
            "build",
            "--manifest",
            "nope.jsonl",
            "--history-root",
            ".",
            "-o",
            "s",
        ],
        dir,
    );
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.starts_with("error: ") && err.contains("nope.jsonl"), "{err}");

    fs::write(dir.join("bad.jsonl"), "{\"cve_id\": 1}\n").unwrap();
    let out = jitscan(
        &[
            "pair",
            "build",
            "--manifest",
            "bad.jsonl",
            "--history-root",
            ".",
            "-o",
            "s",
        ],
        dir,
    );
    assert!(
        String::from_utf8_lossy(&out.stderr).contains("bad.jsonl:1"),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );

    let out = jitscan(&["run", "--detector", "oracle", "--samples", "s", "-o", "o"], dir);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown detector"));
}
