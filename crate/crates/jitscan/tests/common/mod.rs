//! Fixture builders shared by the integration tests.
#![allow(dead_code)]

use std::fs;
use std::path::Path;

use jitscan_core::history::ManifestEntry;
use jitscan_core::Label;
use serde_json::json;

/// Write a directory-per-commit history. `commits` is oldest first; each
/// commit lists the full file set of its snapshot.
pub fn write_history(root: &Path, repo: &str, commits: &[(&str, Vec<(&str, String)>)]) {
    let repo_dir = root.join(repo);
    for (seq, (id, files)) in commits.iter().enumerate() {
        let dir = repo_dir.join("history").join(format!("{:03}_{id}", seq + 1));
        fs::create_dir_all(&dir).unwrap();
        for (path, text) in files {
            let p = dir.join(path);
            fs::create_dir_all(p.parent().unwrap()).unwrap();
            fs::write(p, text).unwrap();
        }
    }
    let chain: Vec<&str> = commits.iter().rev().map(|(id, _)| *id).collect();
    fs::write(repo_dir.join("chain.json"), serde_json::to_string(&chain).unwrap()).unwrap();
}

pub fn entry(cve: &str, cwe: &str, repo: &str, fix: &str) -> ManifestEntry {
    ManifestEntry {
        cve_id: cve.into(),
        cwe_id: cwe.into(),
        repo: repo.into(),
        vul_fix_commit: fix.into(),
        file_hint: None,
    }
}

/// The target function `name` with one of three bodies: `0` original,
/// `1` vulnerable, `2` fixed.
pub fn target_body(name: &str, variant: u8) -> String {
    match variant {
        0 => format!("int {name}(char *dst, const char *src, int n)\n{{\n    return copy_bytes(dst, src, 0);\n}}\n"),
        1 => format!("int {name}(char *dst, const char *src, int n)\n{{\n    memcpy(dst, src, n);\n    return copy_bytes(dst, src, n);\n}}\n"),
        _ => format!("int {name}(char *dst, const char *src, int n)\n{{\n    if (n > LIMIT)\n        return -1;\n    memcpy(dst, src, n);\n    return copy_bytes(dst, src, n);\n}}\n"),
    }
}

pub fn module_text(name: &str, variant: u8) -> String {
    format!(
        "#include <string.h>\n\nstatic int copy_bytes(char *d, const char *s, int n)\n{{\n    return n;\n}}\n\n{}\nint entry_{name}(char *buf)\n{{\n    return {name}(buf, \"abc\", 3);\n}}\n",
        target_body(name, variant)
    )
}

pub fn util_text(revision: u32) -> String {
    format!("int util_version(void)\n{{\n    return {revision};\n}}\n")
}

/// One repository with the history
/// c1 (original) → c2 (introduces the vulnerable body) → c3 (unrelated
/// edit) → c4 (fix). Returns the fix commit id.
pub fn simple_repo(root: &Path, repo: &str, name: &str) -> &'static str {
    let file = format!("src/{name}.c");
    let file = file.as_str();
    write_history(
        root,
        repo,
        &[
            ("c1", vec![(file, module_text(name, 0)), ("src/util.c", util_text(1))]),
            ("c2", vec![(file, module_text(name, 1)), ("src/util.c", util_text(1))]),
            ("c3", vec![(file, module_text(name, 1)), ("src/util.c", util_text(2))]),
            ("c4", vec![(file, module_text(name, 2)), ("src/util.c", util_text(2))]),
        ],
    );
    "c4"
}

pub const FIVE_TARGETS: [(&str, &str, &str); 5] = [
    ("CVE-2024-0001", "CWE-787", "parse_header"),
    ("CVE-2024-0002", "CWE-125", "read_chunk"),
    ("CVE-2024-0003", "CWE-190", "grow_buffer"),
    ("CVE-2024-0004", "CWE-416", "drop_session"),
    ("CVE-2024-0005", "CWE-918", "fetch_remote"),
];

/// Five repositories `r1`..`r5` and their manifest entries.
pub fn five_repos(root: &Path) -> Vec<ManifestEntry> {
    FIVE_TARGETS
        .iter()
        .enumerate()
        .map(|(i, (cve, cwe, name))| {
            let repo = format!("r{}", i + 1);
            let fix = simple_repo(root, &repo, name);
            entry(cve, cwe, &repo, fix)
        })
        .collect()
}

/// Predicted labels per sample for the five-sample fixture, (vul side, ben
/// side): correct, pairwise vulnerable, pairwise benign, reversed, correct.
pub const FIVE_PREDICTIONS: [(Label, Label); 5] = [
    (Label::Vul, Label::Ben),
    (Label::Vul, Label::Vul),
    (Label::Ben, Label::Ben),
    (Label::Ben, Label::Vul),
    (Label::Vul, Label::Ben),
];

fn answer(label: Label, cwe: &str) -> String {
    match label {
        Label::Vul => format!("vulnerable, {cwe}"),
        Label::Ben => "benign".into(),
    }
}

/// Keyed ReAct script for the five-sample fixture. The vulnerable version of
/// sample `i` makes `i % 3 + 1` tool calls, the benign version one.
pub fn five_react_script(sample_ids: &[String]) -> String {
    let mut out = String::new();
    for (i, id) in sample_ids.iter().enumerate() {
        let (_, cwe, name) = FIVE_TARGETS[i];
        let (vul_pred, ben_pred) = FIVE_PREDICTIONS[i];
        let calls = [
            format!("Thought: who calls it?\nAction: get_callers\nAction Input: {name}"),
            format!("Thought: what does it call?\nAction: get_callees\nAction Input: {name}"),
            "Thought: look at the helper\nAction: get_definition\nAction Input: copy_bytes".to_string(),
        ];
        let mut push = |version: Label, text: String| {
            out.push_str(&json!({"sample_id": id, "version": version, "text": text}).to_string());
            out.push('\n');
        };
        for call in calls.iter().take(i % 3 + 1) {
            push(Label::Vul, call.clone());
        }
        push(
            Label::Vul,
            format!("Thought: decided\nFinal Answer: {}", answer(vul_pred, cwe)),
        );
        push(Label::Ben, calls[0].clone());
        push(
            Label::Ben,
            format!("Thought: decided\nFinal Answer: {}", answer(ben_pred, cwe)),
        );
    }
    out
}
