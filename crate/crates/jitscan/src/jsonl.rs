//! Line-delimited JSON files.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{io_at, Error, Result};

/// Parse every non-blank line of `path`.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let text = fs::read_to_string(path).map_err(io_at(path))?;
    parse_jsonl(&text, path)
}

pub fn parse_jsonl<T: DeserializeOwned>(text: &str, path: &Path) -> Result<Vec<T>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}

pub fn to_jsonl<T: Serialize>(items: &[T]) -> String {
    let mut out = String::new();
    for item in items {
        out.push_str(&serde_json::to_string(item).expect("serializable record"));
        out.push('\n');
    }
    out
}

pub fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<()> {
    let mut file = fs::File::create(path).map_err(io_at(path))?;
    file.write_all(to_jsonl(items).as_bytes()).map_err(io_at(path))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blank_lines_skipped_and_errors_located() {
        let p = Path::new("x.jsonl");
        let v: Vec<u32> = parse_jsonl("1\n\n2\n", p).unwrap();
        assert_eq!(v, vec![1, 2]);
        let err = parse_jsonl::<u32>("1\nnope\n", p).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
    }

    #[test]
    fn round_trip() {
        let items = vec!["a".to_string(), "b\nc".to_string()];
        let text = to_jsonl(&items);
        assert_eq!(text, "\"a\"\n\"b\\nc\"\n");
        let back: Vec<String> = parse_jsonl(&text, Path::new("t")).unwrap();
        assert_eq!(back, items);
    }
}
