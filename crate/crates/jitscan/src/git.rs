//! History provider backed by git repositories.
//!
//! Repositories live below a root directory, one checkout per repository
//! name. Commits are followed along first parents. Snapshot locators have the
//! form `<repo>@<commit id>`.

use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};

use jitscan_core::code_graph::SourceFile;
use jitscan_core::history::{CommitRef, HistoryError, HistoryProvider, HistoryView};

use crate::error::{Error, Result};
use crate::store::SnapshotStore;

#[derive(Debug, Clone)]
pub struct GitHistory {
    root: PathBuf,
}

fn run_git(repo: &Path, args: &[&str], stdin: Option<&[u8]>) -> Result<Vec<u8>> {
    let mut cmd = Command::new("git");
    cmd.arg("-C").arg(repo).args(args);
    cmd.stdin(if stdin.is_some() { Stdio::piped() } else { Stdio::null() })
        .stdout(Stdio::piped())
        .stderr(Stdio::piped());
    let mut child = cmd.spawn().map_err(|e| Error::Git(format!("cannot run git: {e}")))?;
    let writer = stdin.map(|input| {
        let mut pipe = child.stdin.take().expect("stdin is piped");
        let input = input.to_vec();
        std::thread::spawn(move || pipe.write_all(&input))
    });
    let output = child.wait_with_output().map_err(|e| Error::Git(e.to_string()))?;
    if let Some(w) = writer {
        w.join()
            .map_err(|_| Error::Git("stdin writer panicked".into()))?
            .map_err(|e| Error::Git(e.to_string()))?;
    }
    if !output.status.success() {
        return Err(Error::Git(format!(
            "git {} in {}: {}",
            args.join(" "),
            repo.display(),
            String::from_utf8_lossy(&output.stderr).trim()
        )));
    }
    Ok(output.stdout)
}

impl GitHistory {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        GitHistory { root: root.into() }
    }

    fn repo_dir(&self, repo: &str) -> PathBuf {
        self.root.join(repo)
    }

    fn chain(&self, repo: &str, head: &str) -> Result<Vec<CommitRef>> {
        let out = run_git(
            &self.repo_dir(repo),
            &["log", "--first-parent", "--format=%H%x1f%s", head, "--"],
            None,
        )?;
        let text = String::from_utf8_lossy(&out);
        let ids: Vec<(String, String)> = text
            .lines()
            .filter_map(|l| {
                let (id, msg) = l.split_once('\x1f')?;
                Some((id.to_string(), msg.to_string()))
            })
            .collect();
        Ok(ids
            .iter()
            .enumerate()
            .map(|(i, (id, message))| CommitRef {
                id: id.clone(),
                parent: ids.get(i + 1).map(|p| p.0.clone()),
                snapshot_ref: format!("{repo}@{id}"),
                message: message.clone(),
            })
            .collect())
    }

    /// All C-like files of `commit`, read in one `cat-file --batch` call.
    pub fn files_at(&self, repo: &str, commit: &str) -> Result<Vec<SourceFile>> {
        let dir = self.repo_dir(repo);
        let listing = run_git(&dir, &["ls-tree", "-r", "-z", "--full-tree", commit], None)?;
        let mut blobs: Vec<(String, String)> = Vec::new();
        for entry in listing.split(|b| *b == 0).filter(|e| !e.is_empty()) {
            let entry = String::from_utf8_lossy(entry);
            let Some((meta, path)) = entry.split_once('\t') else {
                continue;
            };
            let mut meta = meta.split(' ');
            let (_mode, kind, sha) = (meta.next(), meta.next(), meta.next());
            if kind != Some("blob") || SourceFile::language_for(path).is_none() {
                continue;
            }
            if let Some(sha) = sha {
                blobs.push((path.to_string(), sha.to_string()));
            }
        }
        blobs.sort();
        if blobs.is_empty() {
            return Ok(Vec::new());
        }
        let request: String = blobs.iter().map(|(_, sha)| format!("{sha}\n")).collect();
        let out = run_git(&dir, &["cat-file", "--batch"], Some(request.as_bytes()))?;
        let mut reader = &out[..];
        let mut files = Vec::with_capacity(blobs.len());
        for (path, sha) in blobs {
            let header_end = reader
                .iter()
                .position(|b| *b == b'\n')
                .ok_or_else(|| Error::Git("truncated cat-file output".into()))?;
            let header = String::from_utf8_lossy(&reader[..header_end]).into_owned();
            reader = &reader[header_end + 1..];
            let mut parts = header.split(' ');
            if parts.next() != Some(sha.as_str()) {
                return Err(Error::Git(format!("unexpected cat-file header '{header}'")));
            }
            let size: usize = parts
                .nth(1)
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| Error::Git(format!("unexpected cat-file header '{header}'")))?;
            let mut content = vec![0; size];
            reader
                .read_exact(&mut content)
                .map_err(|_| Error::Git("truncated cat-file output".into()))?;
            reader = reader.get(1..).unwrap_or_default();
            files.push(SourceFile::from_bytes(path, &content));
        }
        Ok(files)
    }
}

impl HistoryProvider for GitHistory {
    fn history(&self, repo: &str, head: &str) -> Result<HistoryView, HistoryError> {
        let dir = self.repo_dir(repo);
        if !dir.is_dir() {
            return Err(HistoryError::Provider(format!("no repository at {}", dir.display())));
        }
        let spec = format!("{head}^{{commit}}");
        if run_git(&dir, &["rev-parse", "--verify", "--quiet", &spec], None).is_err() {
            return Err(HistoryError::UnknownCommit(head.into()));
        }
        let chain = self
            .chain(repo, head)
            .map_err(|e| HistoryError::Provider(e.to_string()))?;
        HistoryView::new(chain)
    }

    fn snapshot(&self, repo: &str, commit: &CommitRef) -> Result<Vec<SourceFile>, HistoryError> {
        self.files_at(repo, &commit.id)
            .map_err(|e| HistoryError::Provider(e.to_string()))
    }
}

impl SnapshotStore for GitHistory {
    fn load(&self, snapshot_ref: &str) -> Result<Vec<SourceFile>> {
        let (repo, commit) = snapshot_ref
            .rsplit_once('@')
            .ok_or_else(|| Error::Config(format!("'{snapshot_ref}' is not a <repo>@<commit> locator")))?;
        self.files_at(repo, commit)
    }
}
