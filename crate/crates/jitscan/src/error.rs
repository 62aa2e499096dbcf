use std::io;
use std::path::{Path, PathBuf};

use jitscan_core::code_graph::DocumentError;
use jitscan_core::history::HistoryError;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{}:{line}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("configuration: {0}")]
    Config(String),
    #[error(transparent)]
    History(#[from] HistoryError),
    #[error(transparent)]
    Document(#[from] DocumentError),
    #[error("git: {0}")]
    Git(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Adapter for `map_err` that attaches the path to an IO error.
pub(crate) fn io_at(path: &Path) -> impl FnOnce(io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}
