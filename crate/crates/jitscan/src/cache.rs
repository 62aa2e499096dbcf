//! Call graphs cached by snapshot content.
//!
//! The two versions of a sample usually share most files, so extraction is
//! cached per file digest and whole graphs per snapshot digest.

use std::collections::HashMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use jitscan_core::code_graph::{extract_file, CallGraph, FileExtraction, SourceFile};

use crate::error::Result;
use crate::snapshot::{file_digest, snapshot_digest};
use crate::store::SnapshotStore;

#[derive(Default)]
pub struct GraphCache {
    files: Mutex<HashMap<[u8; 32], FileExtraction>>,
    graphs: Mutex<HashMap<String, Arc<CallGraph>>>,
    extracted: AtomicUsize,
    built: AtomicUsize,
}

impl GraphCache {
    pub fn new() -> Self {
        Self::default()
    }

    /// Graph of the snapshot behind `snapshot_ref`. Its snapshot id is the
    /// content digest, so equal snapshots get identical graphs.
    pub fn graph(&self, store: &dyn SnapshotStore, snapshot_ref: &str) -> Result<Arc<CallGraph>> {
        let files = store.load(snapshot_ref)?;
        Ok(self.graph_of(&files))
    }

    pub fn graph_of(&self, files: &[SourceFile]) -> Arc<CallGraph> {
        let digest = snapshot_digest(files);
        if let Some(g) = self.graphs.lock().unwrap_or_else(|e| e.into_inner()).get(&digest) {
            return Arc::clone(g);
        }
        let extractions: Vec<FileExtraction> = files.iter().map(|f| self.extraction(f)).collect();
        let graph = Arc::new(CallGraph::assemble(digest.clone(), extractions));
        self.built.fetch_add(1, Ordering::Relaxed);
        let mut graphs = self.graphs.lock().unwrap_or_else(|e| e.into_inner());
        Arc::clone(graphs.entry(digest).or_insert(graph))
    }

    fn extraction(&self, file: &SourceFile) -> FileExtraction {
        let key = file_digest(file);
        if let Some(x) = self.files.lock().unwrap_or_else(|e| e.into_inner()).get(&key) {
            return x.clone();
        }
        let x = extract_file(file);
        self.extracted.fetch_add(1, Ordering::Relaxed);
        self.files
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .insert(key, x.clone());
        x
    }

    /// Number of files extracted so far (cache misses).
    pub fn files_extracted(&self) -> usize {
        self.extracted.load(Ordering::Relaxed)
    }

    /// Number of graphs assembled so far (cache misses).
    pub fn graphs_built(&self) -> usize {
        self.built.load(Ordering::Relaxed)
    }
}
