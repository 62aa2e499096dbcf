//! Caller/callee graph of one repository snapshot.
//!
//! [`build_graph`] extracts every file independently ([`extract_file`]) and
//! merges the results with [`CallGraph::assemble`]. Callers that cache or
//! parallelize extraction can call those two steps themselves. A built graph
//! is immutable.

mod extract;

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

pub use extract::{extract_file, extract_functions, Diagnostic, ExtractError, FileExtraction, RawCall, CALL_KEYWORDS};

use crate::lexer;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LanguageHint {
    CLike,
}

const C_LIKE_EXTENSIONS: [&str; 8] = ["c", "h", "cc", "cpp", "cxx", "hh", "hpp", "hxx"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceFile {
    /// Repository-relative path with `/` separators.
    pub path: String,
    pub text: String,
    pub language_hint: LanguageHint,
}

impl SourceFile {
    pub fn new(path: impl Into<String>, text: impl Into<String>) -> Self {
        SourceFile {
            path: path.into(),
            text: text.into(),
            language_hint: LanguageHint::CLike,
        }
    }

    /// Decode raw file bytes, replacing invalid UTF-8.
    pub fn from_bytes(path: impl Into<String>, bytes: &[u8]) -> Self {
        SourceFile::new(path, String::from_utf8_lossy(bytes).into_owned())
    }

    /// Language hint for a path, from its extension.
    pub fn language_for(path: &str) -> Option<LanguageHint> {
        let ext = path.rsplit_once('.')?.1;
        C_LIKE_EXTENSIONS
            .iter()
            .any(|e| e.eq_ignore_ascii_case(ext))
            .then_some(LanguageHint::CLike)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FunctionDef {
    pub name: String,
    pub file: String,
    pub start_line: u32,
    pub end_line: u32,
    /// Source lines `start_line..=end_line`, verbatim.
    pub body: String,
}

impl FunctionDef {
    pub fn contains_line(&self, line: u32) -> bool {
        (self.start_line..=self.end_line).contains(&line)
    }
}

/// Index of a function in [`CallGraph::functions`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FunctionId(pub usize);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CallSite {
    pub caller: FunctionId,
    pub callee: String,
    pub line: u32,
    /// Whether any function named `callee` is defined in the snapshot.
    pub resolved: bool,
}

/// A `(name, line)` answer to a caller or callee query.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CallEntry {
    pub name: String,
    /// File containing the call site.
    pub file: String,
    /// Line of the call site.
    pub line: u32,
    pub resolved: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LookupError {
    #[error("function '{0}' not found")]
    NotFound(String),
    #[error("function '{name}' is ambiguous: {} definitions", candidates.len())]
    Ambiguous {
        name: String,
        candidates: Vec<(String, u32)>,
    },
}

/// Result of a lenient lookup that never fails on ambiguity.
#[derive(Debug, Clone, Copy)]
pub struct Resolution<'g> {
    pub def: &'g FunctionDef,
    pub id: FunctionId,
    /// Number of same-named definitions, including the chosen one.
    pub candidates: usize,
}

impl Resolution<'_> {
    pub fn is_ambiguous(&self) -> bool {
        self.candidates > 1
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CallGraph {
    snapshot_id: String,
    functions: Vec<FunctionDef>,
    edges: Vec<CallSite>,
    name_index: BTreeMap<String, Vec<FunctionId>>,
    diagnostics: Vec<Diagnostic>,
}

/// Build the graph of a snapshot. Files are processed in path order, so the
/// result does not depend on the order of `snapshot`.
pub fn build_graph(snapshot: &[SourceFile], snapshot_id: impl Into<String>) -> CallGraph {
    let extractions = snapshot.iter().map(extract_file).collect();
    CallGraph::assemble(snapshot_id, extractions)
}

impl CallGraph {
    /// Merge per-file extractions. Duplicate paths keep the first occurrence
    /// in path order and add a diagnostic.
    pub fn assemble(snapshot_id: impl Into<String>, mut files: Vec<FileExtraction>) -> CallGraph {
        files.sort_by(|a, b| a.path.cmp(&b.path));
        let mut functions = Vec::new();
        let mut edges = Vec::new();
        let mut diagnostics = Vec::new();
        let mut pending = Vec::new();
        let mut last_path: Option<String> = None;
        for file in files {
            if last_path.as_deref() == Some(file.path.as_str()) {
                diagnostics.push(Diagnostic {
                    file: file.path.clone(),
                    line: 0,
                    message: alloc::format!("duplicate path {} ignored", file.path),
                });
                continue;
            }
            last_path = Some(file.path.clone());
            diagnostics.extend(file.diagnostic);
            let base = functions.len();
            functions.extend(file.functions);
            pending.extend(file.calls.into_iter().map(|c| (FunctionId(base + c.caller), c)));
        }
        let mut name_index: BTreeMap<String, Vec<FunctionId>> = BTreeMap::new();
        for (idx, f) in functions.iter().enumerate() {
            name_index.entry(f.name.clone()).or_default().push(FunctionId(idx));
        }
        for (caller, call) in pending {
            let resolved = name_index.contains_key(&call.callee);
            edges.push(CallSite {
                caller,
                callee: call.callee,
                line: call.line,
                resolved,
            });
        }
        CallGraph {
            snapshot_id: snapshot_id.into(),
            functions,
            edges,
            name_index,
            diagnostics,
        }
    }

    pub fn snapshot_id(&self) -> &str {
        &self.snapshot_id
    }

    pub fn functions(&self) -> &[FunctionDef] {
        &self.functions
    }

    pub fn function(&self, id: FunctionId) -> &FunctionDef {
        &self.functions[id.0]
    }

    pub fn edges(&self) -> &[CallSite] {
        &self.edges
    }

    pub fn diagnostics(&self) -> &[Diagnostic] {
        &self.diagnostics
    }

    pub fn caller_of(&self, edge: &CallSite) -> &FunctionDef {
        self.function(edge.caller)
    }

    /// All definitions with this name, ordered by `(file, start_line)`.
    pub fn definitions(&self, name: &str) -> &[FunctionId] {
        self.name_index.get(name).map_or(&[], Vec::as_slice)
    }

    pub fn id_of(&self, def: &FunctionDef) -> Option<FunctionId> {
        self.definitions(&def.name).iter().copied().find(|&id| {
            let f = self.function(id);
            f.file == def.file && f.start_line == def.start_line
        })
    }

    /// Strict lookup: a line, when given, must fall inside the definition.
    pub fn resolve(&self, name: &str, line: Option<u32>) -> Result<FunctionId, LookupError> {
        let ids = self.definitions(name);
        if let Some(line) = line {
            let mut hits = ids.iter().filter(|&&id| self.function(id).contains_line(line));
            return match (hits.next(), hits.next()) {
                (Some(&id), None) => Ok(id),
                (Some(_), Some(_)) => Err(self.ambiguous(name, ids)),
                (None, _) => Err(LookupError::NotFound(name.into())),
            };
        }
        match ids {
            [] => Err(LookupError::NotFound(name.into())),
            [id] => Ok(*id),
            _ => Err(self.ambiguous(name, ids)),
        }
    }

    /// Lookup that resolves ambiguity by taking the lexicographically
    /// smallest `(file, start_line)`. A line that matches no definition falls
    /// back to the name alone.
    pub fn resolve_lenient(&self, name: &str, line: Option<u32>) -> Result<Resolution<'_>, LookupError> {
        let ids = self.definitions(name);
        if ids.is_empty() {
            return Err(LookupError::NotFound(name.into()));
        }
        let containing: Vec<FunctionId> = match line {
            Some(line) => ids
                .iter()
                .copied()
                .filter(|&id| self.function(id).contains_line(line))
                .collect(),
            None => Vec::new(),
        };
        let pool = if containing.is_empty() { ids } else { &containing };
        let chosen = pool[0];
        Ok(Resolution {
            def: self.function(chosen),
            id: chosen,
            candidates: pool.len(),
        })
    }

    fn ambiguous(&self, name: &str, ids: &[FunctionId]) -> LookupError {
        LookupError::Ambiguous {
            name: name.into(),
            candidates: ids
                .iter()
                .map(|&id| {
                    let f = self.function(id);
                    (f.file.clone(), f.start_line)
                })
                .collect(),
        }
    }

    /// Every call site whose callee is `function_name`, as
    /// `(caller name, call line)`, sorted by `(file, line)`.
    pub fn get_callers(&self, function_name: &str) -> Vec<CallEntry> {
        let mut out: Vec<CallEntry> = self
            .edges
            .iter()
            .filter(|e| e.callee == function_name)
            .map(|e| {
                let caller = self.caller_of(e);
                CallEntry {
                    name: caller.name.clone(),
                    file: caller.file.clone(),
                    line: e.line,
                    resolved: true,
                }
            })
            .collect();
        out.sort_by(|a, b| (&a.file, a.line, &a.name).cmp(&(&b.file, b.line, &b.name)));
        out
    }

    /// Call sites inside one definition, sorted by line.
    pub fn callees_of(&self, id: FunctionId) -> Vec<CallEntry> {
        let caller = self.function(id);
        let mut out: Vec<CallEntry> = self
            .edges
            .iter()
            .filter(|e| e.caller == id)
            .map(|e| CallEntry {
                name: e.callee.clone(),
                file: caller.file.clone(),
                line: e.line,
                resolved: e.resolved,
            })
            .collect();
        out.sort_by_key(|e| e.line);
        out
    }

    /// Callees of `function_name`. Unknown names have no callees; several
    /// same-named definitions need a `line` to pick one.
    pub fn get_callees(&self, function_name: &str, line: Option<u32>) -> Result<Vec<CallEntry>, LookupError> {
        match self.resolve(function_name, line) {
            Ok(id) => Ok(self.callees_of(id)),
            Err(LookupError::NotFound(_)) => Ok(Vec::new()),
            Err(err) => Err(err),
        }
    }

    pub fn get_definition(&self, function_name: &str, line: Option<u32>) -> Result<&FunctionDef, LookupError> {
        self.resolve(function_name, line).map(|id| self.function(id))
    }

    /// Definitions that call `target`, deduplicated, in graph order.
    pub fn resolved_callers(&self, target: FunctionId) -> Vec<FunctionId> {
        let name = &self.function(target).name;
        let mut ids: Vec<FunctionId> = self
            .edges
            .iter()
            .filter(|e| &e.callee == name)
            .map(|e| e.caller)
            .collect();
        ids.sort();
        ids.dedup();
        ids
    }

    /// Definitions called from `target`, deduplicated, in graph order.
    pub fn resolved_callees(&self, target: FunctionId) -> Vec<FunctionId> {
        let mut ids: Vec<FunctionId> = self
            .edges
            .iter()
            .filter(|e| e.caller == target && e.resolved)
            .flat_map(|e| self.definitions(&e.callee).iter().copied())
            .collect();
        ids.sort();
        ids.dedup();
        ids
    }

    pub fn to_document(&self) -> GraphDocument {
        GraphDocument {
            snapshot_id: self.snapshot_id.clone(),
            functions: self
                .functions
                .iter()
                .map(|f| FunctionEntry {
                    name: f.name.clone(),
                    file: f.file.clone(),
                    start_line: f.start_line,
                    end_line: f.end_line,
                })
                .collect(),
            edges: self
                .edges
                .iter()
                .map(|e| {
                    let caller = self.caller_of(e);
                    EdgeEntry {
                        caller_file: caller.file.clone(),
                        caller_name: caller.name.clone(),
                        callee: e.callee.clone(),
                        line: e.line,
                        resolved: e.resolved,
                    }
                })
                .collect(),
            diagnostics: self.diagnostics.clone(),
        }
    }

    /// Rebuild a graph from its serialized form. Bodies are re-sliced from
    /// `snapshot` when given and left empty otherwise.
    pub fn from_document(doc: GraphDocument, snapshot: Option<&[SourceFile]>) -> Result<CallGraph, DocumentError> {
        let mut functions = Vec::with_capacity(doc.functions.len());
        for entry in doc.functions {
            if entry.start_line == 0 || entry.start_line > entry.end_line {
                return Err(DocumentError::BadLineRange {
                    name: entry.name,
                    start_line: entry.start_line,
                    end_line: entry.end_line,
                });
            }
            let body = match snapshot {
                Some(files) => {
                    let file = files
                        .iter()
                        .find(|f| f.path == entry.file)
                        .ok_or_else(|| DocumentError::MissingFile(entry.file.clone()))?;
                    lexer::slice_lines(&file.text, entry.start_line, entry.end_line).into()
                }
                None => String::new(),
            };
            functions.push(FunctionDef {
                name: entry.name,
                file: entry.file,
                start_line: entry.start_line,
                end_line: entry.end_line,
                body,
            });
        }
        let mut name_index: BTreeMap<String, Vec<FunctionId>> = BTreeMap::new();
        for (idx, f) in functions.iter().enumerate() {
            name_index.entry(f.name.clone()).or_default().push(FunctionId(idx));
        }
        let mut edges = Vec::with_capacity(doc.edges.len());
        for e in doc.edges {
            let caller = name_index
                .get(&e.caller_name)
                .and_then(|ids| {
                    ids.iter().copied().find(|&id| {
                        let f = &functions[id.0];
                        f.file == e.caller_file && f.contains_line(e.line)
                    })
                })
                .ok_or_else(|| DocumentError::DanglingEdge {
                    caller: e.caller_name.clone(),
                    line: e.line,
                })?;
            edges.push(CallSite {
                caller,
                callee: e.callee,
                line: e.line,
                resolved: e.resolved,
            });
        }
        Ok(CallGraph {
            snapshot_id: doc.snapshot_id,
            functions,
            edges,
            name_index,
            diagnostics: doc.diagnostics,
        })
    }
}

impl fmt::Display for CallEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (line {})", self.name, self.line)
    }
}

/// Serialized graph. Bodies are omitted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphDocument {
    pub snapshot_id: String,
    pub functions: Vec<FunctionEntry>,
    pub edges: Vec<EdgeEntry>,
    pub diagnostics: Vec<Diagnostic>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FunctionEntry {
    pub name: String,
    pub file: String,
    pub start_line: u32,
    pub end_line: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeEntry {
    pub caller_file: String,
    pub caller_name: String,
    pub callee: String,
    pub line: u32,
    pub resolved: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DocumentError {
    #[error("graph references file {0} which is not in the snapshot")]
    MissingFile(String),
    #[error("edge from {caller} at line {line} has no enclosing caller definition")]
    DanglingEdge { caller: String, line: u32 },
    #[error("function {name} has invalid line range {start_line}-{end_line}")]
    BadLineRange {
        name: String,
        start_line: u32,
        end_line: u32,
    },
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn fixture() -> CallGraph {
        build_graph(
            &[SourceFile::new(
                "main.c",
                "void helper(){}\nint main_fn(){ helper(); return 0; }\n",
            )],
            "fixture",
        )
    }

    fn pairs(entries: &[CallEntry]) -> Vec<(&str, u32)> {
        entries.iter().map(|e| (e.name.as_str(), e.line)).collect()
    }

    #[test]
    fn fixture_edges_and_queries() {
        let g = fixture();
        assert_eq!(g.functions().len(), 2);
        assert_eq!(g.edges().len(), 1);
        assert_eq!(g.caller_of(&g.edges()[0]).name, "main_fn");
        assert_eq!(g.edges()[0].callee, "helper");
        assert_eq!(pairs(&g.get_callers("helper")), vec![("main_fn", 2)]);
        assert!(g.get_callers("main_fn").is_empty());
        assert!(g.get_callers("nonexistent").is_empty());
        assert_eq!(pairs(&g.get_callees("main_fn", None).unwrap()), vec![("helper", 2)]);
        assert!(g.get_callees("helper", None).unwrap().is_empty());
        assert_eq!(g.get_definition("helper", None).unwrap().body, "void helper(){}");
        assert_eq!(
            g.get_definition("ghost", None),
            Err(LookupError::NotFound("ghost".into()))
        );
    }

    #[test]
    fn empty_snapshot() {
        let g = build_graph(&[], "empty");
        assert!(g.functions().is_empty());
        assert!(g.edges().is_empty());
    }

    #[test]
    fn external_calls_are_unresolved() {
        let g = build_graph(
            &[SourceFile::new("a.c", "void copy(char *d){\n  memcpy(d, s, 4);\n}\n")],
            "ext",
        );
        let callees = g.get_callees("copy", None).unwrap();
        assert_eq!(pairs(&callees), vec![("memcpy", 2)]);
        assert!(!callees[0].resolved);
    }

    #[test]
    fn duplicate_names_are_ambiguous_without_line() {
        let g = build_graph(
            &[
                SourceFile::new("b.c", "\nvoid init(){ b(); }\n"),
                SourceFile::new("a.c", "void init(){ a(); }\n"),
            ],
            "dup",
        );
        assert!(matches!(
            g.get_definition("init", None),
            Err(LookupError::Ambiguous { ref candidates, .. }) if candidates.len() == 2
        ));
        assert_eq!(g.get_definition("init", Some(2)).unwrap().file, "b.c");
        assert!(g.get_callees("init", None).is_err());
        let lenient = g.resolve_lenient("init", None).unwrap();
        assert_eq!(lenient.def.file, "a.c");
        assert!(lenient.is_ambiguous());
        assert_eq!(pairs(&g.get_callees("init", Some(2)).unwrap()), vec![("b", 2)]);
    }

    #[test]
    fn document_round_trips() {
        let files = [SourceFile::new(
            "main.c",
            "void helper(){}\nint main_fn(){ helper(); return 0; }\n",
        )];
        let g = build_graph(&files, "fixture");
        let back = CallGraph::from_document(g.to_document(), Some(&files)).unwrap();
        assert_eq!(back, g);
        let json = serde_json::to_string(&g.to_document()).unwrap();
        assert!(json.starts_with("{\"snapshot_id\":\"fixture\",\"functions\":[{\"name\":\"helper\""));
        assert!(json.contains("\"edges\":[{\"caller_file\":\"main.c\",\"caller_name\":\"main_fn\",\"callee\":\"helper\",\"line\":2,\"resolved\":true}]"));
    }

    #[test]
    fn language_hint_from_extension() {
        assert_eq!(SourceFile::language_for("src/a.C"), Some(LanguageHint::CLike));
        assert_eq!(SourceFile::language_for("x/y.hpp"), Some(LanguageHint::CLike));
        assert_eq!(SourceFile::language_for("README.md"), None);
        assert_eq!(SourceFile::language_for("Makefile"), None);
    }
}
