mod common;

use std::fs;
use std::path::Path;
use std::process::Command;

use jitscan::git::GitHistory;
use jitscan::store::SnapshotStore;
use jitscan_core::history::{build_pairwise_sample, HistoryError, HistoryProvider};

fn git(dir: &Path, args: &[&str]) -> String {
    let out = Command::new("git")
        .arg("-C")
        .arg(dir)
        .args(args)
        .env("GIT_AUTHOR_NAME", "t")
        .env("GIT_AUTHOR_EMAIL", "t@example.com")
        .env("GIT_COMMITTER_NAME", "t")
        .env("GIT_COMMITTER_EMAIL", "t@example.com")
        .env("GIT_CONFIG_NOSYSTEM", "1")
        .env("HOME", dir)
        .output()
        .expect("git is installed");
    assert!(
        out.status.success(),
        "git {args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap().trim().to_string()
}

/// The same four-step history as the directory fixture, as git commits.
/// Returns the commit ids oldest first.
fn make_repo(root: &Path) -> Vec<String> {
    let dir = root.join("proj");
    fs::create_dir_all(dir.join("src")).unwrap();
    git(&dir, &["init", "-q", "-b", "main"]);
    let steps = [
        (0, 1, "original"),
        (1, 1, "add fast path"),
        (1, 2, "bump util"),
        (2, 2, "bound length"),
    ];
    let mut ids = Vec::new();
    for (variant, util, msg) in steps {
        fs::write(dir.join("src/parse.c"), common::module_text("parse", variant)).unwrap();
        fs::write(dir.join("src/util.c"), common::util_text(util)).unwrap();
        fs::write(dir.join("README"), msg).unwrap();
        git(&dir, &["add", "-A"]);
        git(&dir, &["commit", "-q", "-m", msg]);
        ids.push(git(&dir, &["rev-parse", "HEAD"]));
    }
    ids
}

#[test]
fn traces_introduction_through_git() {
    let tmp = tempfile::tempdir().unwrap();
    let ids = make_repo(tmp.path());
    let provider = GitHistory::new(tmp.path());
    let entry = common::entry("CVE-2021-0001", "CWE-787", "proj", &ids[3]);
    let sample = build_pairwise_sample(&entry, &provider).unwrap();
    assert_eq!(sample.vul_intro.id, ids[1]);
    assert_eq!(sample.vul_intro.message, "add fast path");
    assert_eq!(sample.vul_fix.id, ids[3]);
    assert_eq!(sample.function_name, "parse");
    assert_eq!(sample.file, "src/parse.c");
    assert_eq!(sample.r_intro(), format!("proj@{}", ids[1]));
}

#[test]
fn snapshots_hold_only_source_files() {
    let tmp = tempfile::tempdir().unwrap();
    let ids = make_repo(tmp.path());
    let provider = GitHistory::new(tmp.path());
    let files = SnapshotStore::load(&provider, &format!("proj@{}", ids[0])).unwrap();
    let paths: Vec<&str> = files.iter().map(|f| f.path.as_str()).collect();
    assert_eq!(paths, ["src/parse.c", "src/util.c"]);
    assert_eq!(files[0].text, common::module_text("parse", 0));
    assert_eq!(files, provider.files_at("proj", &ids[0]).unwrap());
}

#[test]
fn chain_follows_first_parents() {
    let tmp = tempfile::tempdir().unwrap();
    let ids = make_repo(tmp.path());
    let provider = GitHistory::new(tmp.path());
    let view = provider.history("proj", &ids[3]).unwrap();
    let chain: Vec<&str> = view.commits().iter().map(|c| c.id.as_str()).collect();
    let expected: Vec<&str> = ids.iter().rev().map(String::as_str).collect();
    assert_eq!(chain, expected);
    assert!(view.is_ancestor(&ids[0], &ids[3]));
}

#[test]
fn unknown_commit_is_reported() {
    let tmp = tempfile::tempdir().unwrap();
    make_repo(tmp.path());
    let provider = GitHistory::new(tmp.path());
    let entry = common::entry(
        "CVE-2021-0002",
        "CWE-787",
        "proj",
        "0123456789abcdef0123456789abcdef01234567",
    );
    let err = build_pairwise_sample(&entry, &provider).unwrap_err();
    assert!(matches!(err, HistoryError::UnknownCommit(_)), "{err:?}");
}
