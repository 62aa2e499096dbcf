//! Byte-level classification of C-like source text.
//!
//! Every byte of the input is tagged as code, comment, literal (string or
//! character) or preprocessor directive. The masking helpers build on that
//! classification and always preserve byte offsets and newlines, so line
//! numbers computed on masked text are valid for the original text.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ByteClass {
    Code,
    Comment,
    Literal,
    Directive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum State {
    Code,
    LineComment,
    BlockComment,
    Str,
    Chr,
    Directive,
    DirectiveStr,
}

/// Classify every byte of `text`.
///
/// With `directives` set, a `#` that is the first non-blank character of a
/// line opens a directive running to the end of the line (backslash
/// continuations included). Comments inside a directive are still comments.
pub fn classify(text: &str, directives: bool) -> Vec<ByteClass> {
    let bytes = text.as_bytes();
    let mut out = vec![ByteClass::Code; bytes.len()];
    let mut state = State::Code;
    // state to resume after a block comment
    let mut resume = State::Code;
    let mut line_blank = true;
    let mut i = 0;
    while i < bytes.len() {
        let b = bytes[i];
        let next = bytes.get(i + 1).copied();
        match state {
            State::Code => {
                if b == b'/' && next == Some(b'/') {
                    state = State::LineComment;
                    out[i] = ByteClass::Comment;
                    out[i + 1] = ByteClass::Comment;
                    i += 2;
                    continue;
                }
                if b == b'/' && next == Some(b'*') {
                    state = State::BlockComment;
                    resume = State::Code;
                    out[i] = ByteClass::Comment;
                    out[i + 1] = ByteClass::Comment;
                    i += 2;
                    continue;
                }
                match b {
                    b'"' => {
                        state = State::Str;
                        out[i] = ByteClass::Literal;
                    }
                    b'\'' => {
                        state = State::Chr;
                        out[i] = ByteClass::Literal;
                    }
                    b'#' if directives && line_blank => {
                        state = State::Directive;
                        out[i] = ByteClass::Directive;
                    }
                    _ => {}
                }
            }
            State::LineComment => {
                if b == b'\n' {
                    state = State::Code;
                } else {
                    out[i] = ByteClass::Comment;
                }
            }
            State::BlockComment => {
                out[i] = ByteClass::Comment;
                if b == b'*' && next == Some(b'/') {
                    out[i + 1] = ByteClass::Comment;
                    state = resume;
                    i += 2;
                    continue;
                }
            }
            State::Str | State::Chr => {
                out[i] = ByteClass::Literal;
                let close = if state == State::Str { b'"' } else { b'\'' };
                if b == b'\\' && next.is_some() {
                    out[i + 1] = ByteClass::Literal;
                    i += 2;
                    continue;
                }
                if b == close {
                    state = State::Code;
                }
            }
            State::Directive => {
                if b == b'\n' {
                    state = State::Code;
                } else if b == b'\\' && next == Some(b'\n') {
                    out[i] = ByteClass::Directive;
                    i += 2;
                    continue;
                } else if b == b'/' && next == Some(b'/') {
                    // rest of the line is a comment and ends the directive
                    state = State::LineComment;
                    out[i] = ByteClass::Comment;
                    out[i + 1] = ByteClass::Comment;
                    i += 2;
                    continue;
                } else if b == b'/' && next == Some(b'*') {
                    state = State::BlockComment;
                    resume = State::Directive;
                    out[i] = ByteClass::Comment;
                    out[i + 1] = ByteClass::Comment;
                    i += 2;
                    continue;
                } else {
                    if b == b'"' {
                        state = State::DirectiveStr;
                    }
                    out[i] = ByteClass::Directive;
                }
            }
            State::DirectiveStr => {
                if b == b'\n' {
                    state = State::Code;
                } else {
                    out[i] = ByteClass::Directive;
                    if b == b'\\' && next.is_some_and(|n| n != b'\n') {
                        out[i + 1] = ByteClass::Directive;
                        i += 2;
                        continue;
                    }
                    if b == b'"' {
                        state = State::Directive;
                    }
                }
            }
        }
        if b == b'\n' {
            line_blank = true;
        } else if !matches!(b, b' ' | b'\t' | b'\r' | b'\x0b' | b'\x0c') {
            line_blank = false;
        }
        i += 1;
    }
    out
}

/// Replace every non-code byte with a space, keeping newlines.
///
/// The result has exactly the byte length and line structure of `text`.
pub fn mask_non_code(text: &str) -> String {
    let classes = classify(text, true);
    let masked: Vec<u8> = text
        .bytes()
        .zip(classes)
        .map(|(b, class)| match class {
            ByteClass::Code => b,
            _ if b == b'\n' => b'\n',
            _ => b' ',
        })
        .collect();
    // Only whole UTF-8 sequences are ever replaced (a multi-byte character
    // lies entirely inside one class), and ASCII replacements are valid.
    String::from_utf8(masked).unwrap_or_else(|e| String::from_utf8_lossy(e.as_bytes()).into_owned())
}

/// Remove comments, replacing each comment with a single space. String and
/// character literals are kept verbatim.
pub fn strip_comments(text: &str) -> String {
    let classes = classify(text, false);
    let mut out = Vec::with_capacity(text.len());
    let mut in_comment = false;
    for (b, class) in text.bytes().zip(classes) {
        if class == ByteClass::Comment {
            if !in_comment {
                out.push(b' ');
                in_comment = true;
            }
        } else {
            in_comment = false;
            out.push(b);
        }
    }
    String::from_utf8(out).unwrap_or_else(|e| String::from_utf8_lossy(e.as_bytes()).into_owned())
}

#[inline]
pub fn is_ident_start(b: u8) -> bool {
    b.is_ascii_alphabetic() || b == b'_'
}

#[inline]
pub fn is_ident_char(b: u8) -> bool {
    b.is_ascii_alphanumeric() || b == b'_'
}

/// Byte offsets at which each line starts. Line `n` (1-based) starts at
/// `starts[n - 1]`.
pub fn line_starts(text: &str) -> Vec<usize> {
    let mut starts = vec![0];
    starts.extend(
        text.bytes()
            .enumerate()
            .filter(|&(_, b)| b == b'\n')
            .map(|(i, _)| i + 1),
    );
    starts
}

/// 1-based line number of a byte offset.
pub fn line_of(starts: &[usize], offset: usize) -> u32 {
    match starts.binary_search(&offset) {
        Ok(idx) => idx as u32 + 1,
        Err(idx) => idx as u32,
    }
}

/// The text of lines `start..=end` (1-based, inclusive), without the final
/// line terminator. Out-of-range lines are clamped.
pub fn slice_lines(text: &str, start: u32, end: u32) -> &str {
    let starts = line_starts(text);
    let first = (start.max(1) as usize - 1).min(starts.len() - 1);
    let last = (end.max(start) as usize).min(starts.len());
    let from = starts[first];
    let to = if last < starts.len() {
        starts[last] - 1
    } else {
        text.len()
    };
    &text[from..to.max(from)]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn masks_comments_and_strings() {
        let src = "int a; /* {x} */ char *s = \"f(){}\"; // g()\nint b;";
        let masked = mask_non_code(src);
        assert_eq!(masked.len(), src.len());
        assert!(!masked.contains('{'));
        assert!(!masked.contains("g()"));
        assert!(masked.contains("int b;"));
    }

    #[test]
    fn directive_masked_to_end_of_line() {
        let src = "#define MAX(a,b) ((a)>(b)?(a):(b))\nint x;\n  # if defined(FOO) \\\n  && BAR(1)\nint y;";
        let masked = mask_non_code(src);
        assert!(!masked.contains("MAX"));
        assert!(!masked.contains("BAR"));
        assert!(masked.contains("int x;"));
        assert!(masked.contains("int y;"));
        assert_eq!(masked.matches('\n').count(), src.matches('\n').count());
    }

    #[test]
    fn apostrophe_in_directive_does_not_open_literal() {
        let src = "#error don't\nvoid f(){}";
        assert!(mask_non_code(src).contains("void f(){}"));
    }

    #[test]
    fn block_comment_inside_directive_spans_lines() {
        let src = "#define X 1 /* a\n b() */\nint z;";
        let masked = mask_non_code(src);
        assert!(!masked.contains("b()"));
        assert!(masked.contains("int z;"));
    }

    #[test]
    fn escaped_quote_stays_in_literal() {
        let src = r#"s = "a\"b(c)"; t();"#;
        let masked = mask_non_code(src);
        assert!(!masked.contains("b(c)"));
        assert!(masked.contains("t();"));
    }

    #[test]
    fn strip_comments_keeps_strings() {
        assert_eq!(strip_comments("a /* x */ b // y"), "a   b  ");
        assert_eq!(strip_comments("\"/* not */\""), "\"/* not */\"");
    }

    #[test]
    fn utf8_in_comments_survives_masking() {
        let src = "/* héllo */ int f();";
        let masked = mask_non_code(src);
        assert_eq!(masked.len(), src.len());
        assert!(masked.ends_with("int f();"));
    }

    #[test]
    fn line_helpers() {
        let text = "a\nbb\nccc";
        let starts = line_starts(text);
        assert_eq!(line_of(&starts, 0), 1);
        assert_eq!(line_of(&starts, 2), 2);
        assert_eq!(line_of(&starts, 7), 3);
        assert_eq!(slice_lines(text, 2, 3), "bb\nccc");
        assert_eq!(slice_lines(text, 1, 1), "a");
    }
}
