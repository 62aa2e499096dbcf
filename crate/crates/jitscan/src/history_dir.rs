//! Commit histories stored as plain directories.
//!
//! ```text
//! <root>/<repo>/chain.json
//! <root>/<repo>/history/<seq>_<id>/<files...>
//! ```
//!
//! `chain.json` lists the commits newest first. An entry is either a bare id
//! or an object `{"id", "parent", "message"}`; a missing `parent` means the
//! next entry. The snapshot of a commit is the directory whose name is the
//! id or ends in `_<id>`.

use std::fs;
use std::path::{Path, PathBuf};

use jitscan_core::code_graph::SourceFile;
use jitscan_core::history::{CommitRef, HistoryError, HistoryProvider, HistoryView};
use serde::{Deserialize, Deserializer};

use crate::error::{io_at, Error, Result};
use crate::snapshot::load_snapshot;
use crate::store::SnapshotStore;

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum ChainEntry {
    Id(String),
    Commit {
        id: String,
        #[serde(default, deserialize_with = "present")]
        parent: Option<Option<String>>,
        #[serde(default)]
        message: String,
    },
}

fn present<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Option<String>>, D::Error> {
    Option::<String>::deserialize(d).map(Some)
}

#[derive(Debug, Clone)]
pub struct DirHistory {
    root: PathBuf,
}

impl DirHistory {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        DirHistory { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// The full chain of `repo`, newest first.
    pub fn chain(&self, repo: &str) -> Result<Vec<CommitRef>> {
        let repo_dir = self.root.join(repo);
        let chain_path = repo_dir.join("chain.json");
        let text = fs::read_to_string(&chain_path).map_err(io_at(&chain_path))?;
        let entries: Vec<ChainEntry> = serde_json::from_str(&text).map_err(|e| Error::Parse {
            path: chain_path.clone(),
            line: e.line(),
            message: e.to_string(),
        })?;
        let ids: Vec<String> = entries
            .iter()
            .map(|e| match e {
                ChainEntry::Id(id) | ChainEntry::Commit { id, .. } => id.clone(),
            })
            .collect();
        let history_dir = repo_dir.join("history");
        let dirs: Vec<String> = match fs::read_dir(&history_dir) {
            Ok(rd) => {
                let mut names = Vec::new();
                for entry in rd {
                    let entry = entry.map_err(io_at(&history_dir))?;
                    if entry.file_type().map_err(io_at(&history_dir))?.is_dir() {
                        names.push(entry.file_name().to_string_lossy().into_owned());
                    }
                }
                names.sort();
                names
            }
            Err(e) => return Err(io_at(&history_dir)(e)),
        };
        entries
            .into_iter()
            .enumerate()
            .map(|(i, entry)| {
                let (id, parent, message) = match entry {
                    ChainEntry::Id(id) => (id, None, String::new()),
                    ChainEntry::Commit { id, parent, message } => (id, parent, message),
                };
                let parent = parent.unwrap_or_else(|| ids.get(i + 1).cloned());
                let suffix = format!("_{id}");
                let matches: Vec<&String> = dirs.iter().filter(|d| **d == id || d.ends_with(&suffix)).collect();
                let dir = match matches.as_slice() {
                    [one] => *one,
                    [] => {
                        return Err(Error::Config(format!(
                            "{}: no snapshot directory for commit {id}",
                            history_dir.display()
                        )))
                    }
                    _ => {
                        return Err(Error::Config(format!(
                            "{}: several snapshot directories for commit {id}",
                            history_dir.display()
                        )))
                    }
                };
                Ok(CommitRef {
                    snapshot_ref: format!("{repo}/history/{dir}"),
                    id,
                    parent,
                    message,
                })
            })
            .collect()
    }
}

fn provider_error(e: Error) -> HistoryError {
    HistoryError::Provider(e.to_string())
}

impl HistoryProvider for DirHistory {
    fn history(&self, repo: &str, head: &str) -> Result<HistoryView, HistoryError> {
        let chain = self.chain(repo).map_err(provider_error)?;
        let pos = chain
            .iter()
            .position(|c| c.id == head)
            .ok_or_else(|| HistoryError::UnknownCommit(head.into()))?;
        HistoryView::new(chain[pos..].to_vec())
    }

    fn snapshot(&self, _repo: &str, commit: &CommitRef) -> Result<Vec<SourceFile>, HistoryError> {
        self.load(&commit.snapshot_ref).map_err(provider_error)
    }
}

impl SnapshotStore for DirHistory {
    fn load(&self, snapshot_ref: &str) -> Result<Vec<SourceFile>> {
        load_snapshot(&self.root.join(snapshot_ref))
    }
}
