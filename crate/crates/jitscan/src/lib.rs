//! Filesystem, git and HTTP plumbing around `jitscan-core`: snapshot and
//! history providers, sample sets, scripted and gateway model backends, the
//! benchmark harness and report rendering.

pub mod backends;
pub mod cache;
pub mod error;
pub mod gateway;
pub mod git;
pub mod harness;
pub mod history_dir;
pub mod jsonl;
pub mod report;
pub mod samples;
pub mod scan;
pub mod script;
pub mod snapshot;
pub mod store;
pub mod templates;

pub use error::{Error, Result};
