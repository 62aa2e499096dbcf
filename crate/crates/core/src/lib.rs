//! Core analysis primitives for just-in-time, repository-level vulnerability
//! detection over C-like code.
//!
//! The crate is `no_std` (it needs `alloc`) and performs no IO. Everything that
//! touches the filesystem, the network or a version-control system lives in the
//! `jitscan` companion crate and reaches this crate through plain values
//! ([`code_graph::SourceFile`]) and small traits ([`history::HistoryProvider`],
//! [`agent::ModelBackend`]).
//!
//! Modules:
//!
//! * [`lexer`]: byte classification of comments, literals and directives.
//! * [`code_graph`]: function extraction, call-site extraction, caller/callee queries.
//! * [`history`]: body normalization, modified-function location, backward tracing
//!   of the commit that introduced a vulnerable function body.
//! * [`retrieval`]: Jaccard ranking of callers and callees.
//! * [`agent`]: prompt assembly, model backends, the Plain / Dep-Aug / ReAct detectors.
//! * [`evaluation`]: F1, pairwise accuracy, failure taxonomy and repository-scan metrics.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod agent;
pub mod code_graph;
pub mod evaluation;
pub mod history;
pub mod label;
pub mod lexer;
pub mod retrieval;

pub use label::{Cwe, Label};
