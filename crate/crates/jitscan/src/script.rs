//! Scripted completions for replay runs.
//!
//! A script is JSONL. A line is either a bare string (a completion) or an
//! object with exactly one of `"text"` / `"error"` and an optional key:
//! `"sample_id"` plus `"version"` for benchmark runs, or `"function"`
//! (`"<file>::<name>"`) for scans. Either every line is keyed or none is.
//! Keyed scripts give each detector run its own queue, which makes them safe
//! to replay in parallel.

use std::collections::BTreeMap;
use std::path::Path;

use jitscan_core::agent::ScriptStep;
use jitscan_core::Label;
use serde::Deserialize;
use sha2::{Digest, Sha256};

use crate::error::{io_at, Error, Result};

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum RawLine {
    Text(String),
    Entry {
        #[serde(default)]
        text: Option<String>,
        #[serde(default)]
        error: Option<String>,
        #[serde(default)]
        sample_id: Option<String>,
        #[serde(default)]
        version: Option<Label>,
        #[serde(default)]
        function: Option<String>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Script {
    Sequential(Vec<ScriptStep>),
    Keyed(BTreeMap<String, Vec<ScriptStep>>),
}

/// Queue key of one benchmark version.
pub fn version_key(sample_id: &str, version: Label) -> String {
    format!("{sample_id}#{version}")
}

/// Queue key of one function in a scan.
pub fn function_key(file: &str, name: &str) -> String {
    format!("{file}::{name}")
}

impl Script {
    pub fn parse(text: &str, origin: &Path) -> Result<Script> {
        let mut sequential = Vec::new();
        let mut keyed: BTreeMap<String, Vec<ScriptStep>> = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let fail = |message: String| Error::Parse {
                path: origin.to_path_buf(),
                line: i + 1,
                message,
            };
            let raw: RawLine = serde_json::from_str(line).map_err(|e| fail(e.to_string()))?;
            let (step, key) = match raw {
                RawLine::Text(t) => (ScriptStep::Text(t), None),
                RawLine::Entry {
                    text,
                    error,
                    sample_id,
                    version,
                    function,
                } => {
                    let step = match (text, error) {
                        (Some(t), None) => ScriptStep::Text(t),
                        (None, Some(e)) => ScriptStep::Error(e),
                        _ => return Err(fail("expected exactly one of \"text\" and \"error\"".into())),
                    };
                    let key = match (sample_id, version, function) {
                        (None, None, None) => None,
                        (Some(s), Some(v), None) => Some(version_key(&s, v)),
                        (None, None, Some(f)) => Some(f),
                        _ => {
                            return Err(fail(
                                "a key is either \"sample_id\" with \"version\", or \"function\"".into(),
                            ))
                        }
                    };
                    (step, key)
                }
            };
            match key {
                Some(k) => keyed.entry(k).or_default().push(step),
                None => sequential.push(step),
            }
        }
        match (sequential.is_empty(), keyed.is_empty()) {
            (_, true) => Ok(Script::Sequential(sequential)),
            (true, false) => Ok(Script::Keyed(keyed)),
            (false, false) => Err(Error::Config(format!(
                "{}: script mixes keyed and unkeyed lines",
                origin.display()
            ))),
        }
    }

    pub fn load(path: &Path) -> Result<(Script, String)> {
        let text = std::fs::read_to_string(path).map_err(io_at(path))?;
        let digest = hex::encode(Sha256::digest(text.as_bytes()));
        Ok((Script::parse(&text, path)?, digest))
    }

    pub fn is_keyed(&self) -> bool {
        matches!(self, Script::Keyed(_))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<Script> {
        Script::parse(text, Path::new("s.jsonl"))
    }

    #[test]
    fn sequential_lines() {
        let s = parse("\"a\"\n{\"text\": \"b\"}\n{\"error\": \"boom\"}\n").unwrap();
        assert_eq!(
            s,
            Script::Sequential(vec![
                ScriptStep::Text("a".into()),
                ScriptStep::Text("b".into()),
                ScriptStep::Error("boom".into()),
            ])
        );
    }

    #[test]
    fn keyed_lines_group_in_order() {
        let s = parse(
            "{\"sample_id\": \"s1\", \"version\": \"vul\", \"text\": \"1\"}\n\
             {\"sample_id\": \"s1\", \"version\": \"ben\", \"text\": \"2\"}\n\
             {\"sample_id\": \"s1\", \"version\": \"vul\", \"text\": \"3\"}\n\
             {\"function\": \"a.c::f\", \"text\": \"4\"}\n",
        )
        .unwrap();
        let Script::Keyed(map) = s else { panic!("keyed") };
        assert_eq!(
            map["s1#vul"],
            vec![ScriptStep::Text("1".into()), ScriptStep::Text("3".into())]
        );
        assert_eq!(map["s1#ben"].len(), 1);
        assert_eq!(map["a.c::f"].len(), 1);
    }

    #[test]
    fn malformed_lines_rejected() {
        assert!(parse("\"a\"\n{\"sample_id\": \"s\", \"version\": \"vul\", \"text\": \"x\"}\n").is_err());
        assert!(matches!(
            parse("{\"text\": \"a\", \"error\": \"b\"}"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(parse("{\"sample_id\": \"s\", \"text\": \"a\"}").is_err());
        assert!(parse("{}\n").is_err());
        assert!(parse("[1]\n").is_err());
    }
}
