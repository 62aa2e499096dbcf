//! Lexical extraction of function definitions and call sites.
//!
//! The extractor works on masked text (see [`crate::lexer::mask_non_code`]):
//! a function is an identifier followed by a balanced parameter list and a
//! balanced brace block at file scope. `namespace` and `extern "C"` blocks
//! are transparent. Macros, function pointers and K&R parameter
//! declarations are not understood.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{FunctionDef, SourceFile};
use crate::lexer::{self, is_ident_char, is_ident_start};

/// Identifiers that are followed by `(` without being calls.
pub const CALL_KEYWORDS: [&str; 8] = ["if", "for", "while", "switch", "return", "sizeof", "do", "else"];

// Names that can precede a brace block without naming a function.
const NON_FUNCTION_NAMES: [&str; 12] = [
    "if",
    "for",
    "while",
    "switch",
    "return",
    "sizeof",
    "do",
    "else",
    "catch",
    "defined",
    "__attribute__",
    "__declspec",
];

// Qualifiers allowed between the parameter list and the opening brace.
const TRAILING_QUALIFIERS: [&str; 5] = ["const", "noexcept", "override", "final", "volatile"];

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize, thiserror::Error)]
#[error("{file}:{line}: {message}")]
pub struct Diagnostic {
    pub file: String,
    pub line: u32,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ExtractError {
    #[error("unbalanced braces in {file}: block opened at line {line} never closes")]
    UnbalancedBraces { file: String, line: u32 },
}

impl ExtractError {
    pub fn to_diagnostic(&self) -> Diagnostic {
        match self {
            ExtractError::UnbalancedBraces { file, line } => Diagnostic {
                file: file.clone(),
                line: *line,
                message: self.to_string(),
            },
        }
    }
}

/// A call found inside the body of one of the file's functions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawCall {
    /// Index into [`FileExtraction::functions`].
    pub caller: usize,
    pub callee: String,
    pub line: u32,
}

/// Everything extracted from one file. Independent of every other file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FileExtraction {
    pub path: String,
    pub functions: Vec<FunctionDef>,
    pub calls: Vec<RawCall>,
    pub diagnostic: Option<Diagnostic>,
}

struct Located {
    name: String,
    sig_start: usize,
    open: usize,
    close: usize,
}

/// Extract every file-scope function definition, ordered by start line.
pub fn extract_functions(source: &SourceFile) -> Result<Vec<FunctionDef>, ExtractError> {
    let masked = lexer::mask_non_code(&source.text);
    let starts = lexer::line_starts(&source.text);
    let located = locate(&source.path, masked.as_bytes(), &starts)?;
    Ok(located.iter().map(|loc| to_def(source, &starts, loc)).collect())
}

/// Extract functions and their call sites. An unbalanced file yields no
/// functions and a diagnostic instead of an error.
pub fn extract_file(source: &SourceFile) -> FileExtraction {
    let masked = lexer::mask_non_code(&source.text);
    let bytes = masked.as_bytes();
    let starts = lexer::line_starts(&source.text);
    let located = match locate(&source.path, bytes, &starts) {
        Ok(located) => located,
        Err(err) => {
            return FileExtraction {
                path: source.path.clone(),
                functions: Vec::new(),
                calls: Vec::new(),
                diagnostic: Some(err.to_diagnostic()),
            }
        }
    };
    let mut calls = Vec::new();
    for (idx, loc) in located.iter().enumerate() {
        for (callee, offset) in call_sites(&bytes[loc.open..=loc.close]) {
            calls.push(RawCall {
                caller: idx,
                callee,
                line: lexer::line_of(&starts, loc.open + offset),
            });
        }
    }
    FileExtraction {
        path: source.path.clone(),
        functions: located.iter().map(|loc| to_def(source, &starts, loc)).collect(),
        calls,
        diagnostic: None,
    }
}

fn to_def(source: &SourceFile, starts: &[usize], loc: &Located) -> FunctionDef {
    let start_line = lexer::line_of(starts, loc.sig_start);
    let end_line = lexer::line_of(starts, loc.close);
    FunctionDef {
        name: loc.name.clone(),
        file: source.path.clone(),
        start_line,
        end_line,
        body: lexer::slice_lines(&source.text, start_line, end_line).into(),
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Scope {
    Transparent,
    Opaque,
}

fn locate(path: &str, m: &[u8], starts: &[usize]) -> Result<Vec<Located>, ExtractError> {
    let mut found = Vec::new();
    let mut scopes: Vec<(Scope, usize)> = Vec::new();
    let mut i = 0;
    while i < m.len() {
        match m[i] {
            b'{' => {
                let file_scope = scopes.iter().all(|&(s, _)| s == Scope::Transparent);
                if file_scope {
                    if let Some((name, sig_start)) = function_header(m, i) {
                        let close = matching_brace(m, i).ok_or_else(|| ExtractError::UnbalancedBraces {
                            file: path.into(),
                            line: lexer::line_of(starts, i),
                        })?;
                        found.push(Located {
                            name,
                            sig_start,
                            open: i,
                            close,
                        });
                        i = close + 1;
                        continue;
                    }
                    let scope = if opens_transparent_block(m, i) {
                        Scope::Transparent
                    } else {
                        Scope::Opaque
                    };
                    scopes.push((scope, i));
                } else {
                    scopes.push((Scope::Opaque, i));
                }
            }
            b'}' => {
                // a stray closing brace is ignored
                scopes.pop();
            }
            _ => {}
        }
        i += 1;
    }
    if let Some(&(_, open)) = scopes.first() {
        return Err(ExtractError::UnbalancedBraces {
            file: path.into(),
            line: lexer::line_of(starts, open),
        });
    }
    Ok(found)
}

fn matching_brace(m: &[u8], open: usize) -> Option<usize> {
    let mut depth = 0usize;
    for (offset, &b) in m[open..].iter().enumerate() {
        match b {
            b'{' => depth += 1,
            b'}' => {
                depth -= 1;
                if depth == 0 {
                    return Some(open + offset);
                }
            }
            _ => {}
        }
    }
    None
}

fn skip_ws_back(m: &[u8], mut end: usize) -> usize {
    while end > 0 && m[end - 1].is_ascii_whitespace() {
        end -= 1;
    }
    end
}

/// The identifier ending at byte `end` (exclusive), if any.
fn ident_before(m: &[u8], end: usize) -> Option<(usize, &str)> {
    let mut start = end;
    while start > 0 && is_ident_char(m[start - 1]) {
        start -= 1;
    }
    if start == end || !is_ident_start(m[start]) {
        return None;
    }
    core::str::from_utf8(&m[start..end]).ok().map(|s| (start, s))
}

/// If the brace at `open` starts a function body, return the function name
/// and the offset where its declaration begins.
fn function_header(m: &[u8], open: usize) -> Option<(String, usize)> {
    let mut end = skip_ws_back(m, open);
    while let Some((start, word)) = ident_before(m, end) {
        if !TRAILING_QUALIFIERS.contains(&word) {
            break;
        }
        end = skip_ws_back(m, start);
    }
    if end == 0 || m[end - 1] != b')' {
        return None;
    }
    let mut depth = 0usize;
    let mut paren = end - 1;
    loop {
        match m[paren] {
            b')' => depth += 1,
            b'(' => {
                depth -= 1;
                if depth == 0 {
                    break;
                }
            }
            b';' | b'{' | b'}' => return None,
            _ => {}
        }
        if paren == 0 {
            return None;
        }
        paren -= 1;
    }
    let name_end = skip_ws_back(m, paren);
    let (name_start, name) = ident_before(m, name_end)?;
    if NON_FUNCTION_NAMES.contains(&name) {
        return None;
    }
    // the declaration starts after the previous statement or block
    let mut boundary = name_start;
    while boundary > 0 && !matches!(m[boundary - 1], b';' | b'{' | b'}') {
        boundary -= 1;
    }
    let sig_start = m[boundary..name_start]
        .iter()
        .position(|b| !b.is_ascii_whitespace())
        .map_or(name_start, |p| boundary + p);
    Some((name.into(), sig_start))
}

/// `namespace [name] {` and `extern "C" {` do not open a new scope for the
/// purposes of function detection. The string literal of `extern "C"` is
/// already masked away.
fn opens_transparent_block(m: &[u8], open: usize) -> bool {
    let end = skip_ws_back(m, open);
    match ident_before(m, end) {
        Some((_, "namespace" | "extern")) => true,
        Some((start, _)) => matches!(ident_before(m, skip_ws_back(m, start)), Some((_, "namespace"))),
        None => false,
    }
}

/// Identifiers followed by `(` in a masked body slice, with their offsets.
pub(crate) fn call_sites(body: &[u8]) -> Vec<(String, usize)> {
    let mut calls = Vec::new();
    let mut i = 0;
    while i < body.len() {
        let b = body[i];
        if b.is_ascii_digit() {
            // numeric literal, including suffixes like 10UL or 0x1f
            while i < body.len() && (is_ident_char(body[i]) || body[i] == b'.') {
                i += 1;
            }
            continue;
        }
        if !is_ident_start(b) {
            i += 1;
            continue;
        }
        let start = i;
        while i < body.len() && is_ident_char(body[i]) {
            i += 1;
        }
        let mut j = i;
        while j < body.len() && body[j].is_ascii_whitespace() {
            j += 1;
        }
        if j < body.len() && body[j] == b'(' {
            if let Ok(word) = core::str::from_utf8(&body[start..i]) {
                if !CALL_KEYWORDS.contains(&word) {
                    calls.push((word.to_string(), start));
                }
            }
        }
    }
    calls
}

#[cfg(test)]
mod tests {
    use super::*;

    fn src(text: &str) -> SourceFile {
        SourceFile::new("t.c", text)
    }

    fn names(text: &str) -> Vec<(String, u32, u32)> {
        extract_functions(&src(text))
            .unwrap()
            .into_iter()
            .map(|f| (f.name, f.start_line, f.end_line))
            .collect()
    }

    #[test]
    fn two_function_fixture() {
        let text = "void helper(){}\nint main_fn(){ helper(); return 0; }\n";
        let fns = extract_functions(&src(text)).unwrap();
        assert_eq!(fns.len(), 2);
        assert_eq!(
            (fns[0].name.as_str(), fns[0].start_line, fns[0].end_line),
            ("helper", 1, 1)
        );
        assert_eq!(
            (fns[1].name.as_str(), fns[1].start_line, fns[1].end_line),
            ("main_fn", 2, 2)
        );
        assert_eq!(fns[1].body, "int main_fn(){ helper(); return 0; }");
    }

    #[test]
    fn empty_and_commented_files() {
        assert!(names("").is_empty());
        assert!(names("/* void fake(){} */").is_empty());
        assert!(names("// int g(){ return 1; }\nconst char *s = \"void h(){}\";").is_empty());
    }

    #[test]
    fn multi_line_signature_starts_at_return_type() {
        let text = "#include <stdio.h>\n\nstatic int\nparse(const char *s,\n      int n)\n{\n  return n;\n}\n";
        assert_eq!(names(text), vec![("parse".into(), 3, 8)]);
    }

    #[test]
    fn skips_structs_initializers_and_prototypes() {
        let text = "struct s { int a; };\nint arr[] = { 1, 2 };\nint proto(int);\nenum e { A, B };\nint real(void) { return 0; }\n";
        assert_eq!(names(text), vec![("real".into(), 5, 5)]);
    }

    #[test]
    fn nested_braces_and_transparent_blocks() {
        let text = "extern \"C\" {\nint a(int x) {\n  if (x) { return 1; }\n  return 0;\n}\n}\nnamespace ns {\nvoid b() const {}\n}\n";
        assert_eq!(names(text), vec![("a".into(), 2, 5), ("b".into(), 8, 8)]);
    }

    #[test]
    fn unbalanced_block_is_reported() {
        let err = extract_functions(&src("int ok(){}\nint broken(){\n  if (x) {\n")).unwrap_err();
        assert_eq!(
            err,
            ExtractError::UnbalancedBraces {
                file: "t.c".into(),
                line: 2
            }
        );
        let extraction = extract_file(&src("struct s {\n"));
        assert!(extraction.functions.is_empty());
        assert_eq!(extraction.diagnostic.unwrap().line, 1);
    }

    #[test]
    fn calls_skip_keywords_literals_and_comments() {
        let text = "void f(int x) {\n  if (x) { g(); }\n  while (x--) h (x);\n  /* k() */ s = \"m()\";\n  n = sizeof(int) + 0x1f;\n}\n";
        let extraction = extract_file(&src(text));
        let calls: Vec<_> = extraction.calls.iter().map(|c| (c.callee.as_str(), c.line)).collect();
        assert_eq!(calls, vec![("g", 2), ("h", 3)]);
    }

    #[test]
    fn self_recursion_is_a_call() {
        let extraction = extract_file(&src("int fact(int n){ return n ? n * fact(n - 1) : 1; }"));
        assert_eq!(extraction.calls.len(), 1);
        assert_eq!(extraction.calls[0].callee, "fact");
    }
}
