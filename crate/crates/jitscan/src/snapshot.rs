//! Loading repository snapshots from disk.

use std::fs;
use std::path::Path;

use jitscan_core::code_graph::SourceFile;
use sha2::{Digest, Sha256};
use walkdir::WalkDir;

use crate::error::{io_at, Error, Result};

/// Every C-like source file below `root`, with `/`-separated paths relative
/// to `root`, sorted by path. `.git` directories are skipped.
pub fn load_snapshot(root: &Path) -> Result<Vec<SourceFile>> {
    if !root.is_dir() {
        return Err(Error::Io {
            path: root.to_path_buf(),
            source: std::io::Error::new(std::io::ErrorKind::NotFound, "snapshot directory not found"),
        });
    }
    let mut files = Vec::new();
    let walker = WalkDir::new(root)
        .sort_by_file_name()
        .into_iter()
        .filter_entry(|e| e.depth() == 0 || e.file_name() != ".git");
    for entry in walker {
        let entry = entry.map_err(|e| Error::Io {
            path: e.path().unwrap_or(root).to_path_buf(),
            source: e.into(),
        })?;
        if !entry.file_type().is_file() {
            continue;
        }
        let rel = entry
            .path()
            .strip_prefix(root)
            .expect("walkdir yields paths below its root");
        let rel: Vec<String> = rel
            .components()
            .map(|c| c.as_os_str().to_string_lossy().into_owned())
            .collect();
        let rel = rel.join("/");
        if SourceFile::language_for(&rel).is_none() {
            continue;
        }
        let bytes = fs::read(entry.path()).map_err(io_at(entry.path()))?;
        files.push(SourceFile::from_bytes(rel, &bytes));
    }
    files.sort_by(|a, b| a.path.cmp(&b.path));
    Ok(files)
}

/// SHA-256 of one file's path and text.
pub fn file_digest(file: &SourceFile) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(file.path.as_bytes());
    h.update([0]);
    h.update(file.text.as_bytes());
    h.finalize().into()
}

/// Hex SHA-256 over all files of a snapshot, in the given order.
pub fn snapshot_digest(files: &[SourceFile]) -> String {
    let mut h = Sha256::new();
    for f in files {
        h.update(file_digest(f));
    }
    hex::encode(h.finalize())
}
