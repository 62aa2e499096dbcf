use jitscan_core::code_graph::SourceFile;

use crate::error::Result;

/// Resolves the snapshot locators stored in samples.
pub trait SnapshotStore: Sync {
    fn load(&self, snapshot_ref: &str) -> Result<Vec<SourceFile>>;
}
