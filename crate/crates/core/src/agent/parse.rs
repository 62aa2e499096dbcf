//! Parsing of model completions.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::label::{Cwe, Label};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tool {
    GetCallers,
    GetCallees,
    GetDefinition,
}

impl Tool {
    pub const ALL: [Tool; 3] = [Tool::GetCallers, Tool::GetCallees, Tool::GetDefinition];

    pub fn as_str(self) -> &'static str {
        match self {
            Tool::GetCallers => "get_callers",
            Tool::GetCallees => "get_callees",
            Tool::GetDefinition => "get_definition",
        }
    }
}

impl FromStr for Tool {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Tool::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| s.to_string())
    }
}

impl fmt::Display for Tool {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ToolCall {
    pub tool: Tool,
    pub argument: String,
    pub line: Option<u32>,
}

impl ToolCall {
    pub fn new(tool: Tool, argument: impl Into<String>, line: Option<u32>) -> Self {
        ToolCall {
            tool,
            argument: argument.into(),
            line,
        }
    }

    /// The `Action Input` text for this call.
    pub fn input_text(&self) -> String {
        match self.line {
            Some(line) => alloc::format!("{}, line {}", self.argument, line),
            None => self.argument.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParsedAction {
    Tool { thought: String, call: ToolCall },
    FinalAnswer { thought: String, answer: String },
    ParseFailure { reason: String },
}

fn strip_prefix_ci<'a>(line: &'a str, prefix: &str) -> Option<&'a str> {
    line.get(..prefix.len())
        .filter(|p| p.eq_ignore_ascii_case(prefix))
        .map(|_| &line[prefix.len()..])
}

fn thought_from(lines: &[&str]) -> String {
    let text = lines.join("\n");
    let text = text.trim();
    strip_prefix_ci(text, "Thought:").unwrap_or(text).trim().into()
}

fn clean_argument(raw: &str) -> &str {
    let arg = raw.trim().trim_matches(|c| c == '"' || c == '\'' || c == '`').trim();
    arg.strip_suffix("()").unwrap_or(arg)
}

/// Parse an `Action Input` value: `<name>[, line <n>]`.
fn parse_input(raw: &str) -> Result<(String, Option<u32>), String> {
    let raw = raw.trim();
    let (name, line) = match raw.rsplit_once(',') {
        Some((name, tail)) => {
            let tail = tail.trim();
            match strip_prefix_ci(tail, "line").map(str::trim) {
                Some(n) => match n.parse::<u32>() {
                    Ok(n) => (name, Some(n)),
                    Err(_) => return Err(alloc::format!("invalid line number '{n}'")),
                },
                None => (raw, None),
            }
        }
        None => (raw, None),
    };
    let name = clean_argument(name);
    if name.is_empty() {
        return Err("empty Action Input".into());
    }
    Ok((name.into(), line))
}

/// Recognize `Action: <tool>` followed by `Action Input: <arg>[, line <n>]`,
/// or `Final Answer: <text>`. The first of the two found wins.
pub fn parse_action(completion: &str) -> ParsedAction {
    let lines: Vec<&str> = completion.lines().collect();
    for (i, line) in lines.iter().enumerate() {
        let trimmed = line.trim_start();
        if let Some(rest) = strip_prefix_ci(trimmed, "Final Answer:") {
            let mut answer = String::from(rest.trim());
            for more in &lines[i + 1..] {
                answer.push('\n');
                answer.push_str(more);
            }
            return ParsedAction::FinalAnswer {
                thought: thought_from(&lines[..i]),
                answer: answer.trim().into(),
            };
        }
        if let Some(rest) = strip_prefix_ci(trimmed, "Action:") {
            let tool_name = clean_argument(rest);
            let tool = match tool_name.parse::<Tool>() {
                Ok(tool) => tool,
                Err(name) => {
                    return ParsedAction::ParseFailure {
                        reason: alloc::format!("unknown tool '{name}'"),
                    }
                }
            };
            let input = lines[i + 1..]
                .iter()
                .map(|l| l.trim_start())
                .find(|l| !l.is_empty())
                .and_then(|l| strip_prefix_ci(l, "Action Input:"));
            let Some(input) = input else {
                return ParsedAction::ParseFailure {
                    reason: "Action without Action Input".into(),
                };
            };
            return match parse_input(input) {
                Ok((argument, line)) => ParsedAction::Tool {
                    thought: thought_from(&lines[..i]),
                    call: ToolCall { tool, argument, line },
                },
                Err(reason) => ParsedAction::ParseFailure { reason },
            };
        }
    }
    ParsedAction::ParseFailure {
        reason: "no Action or Final Answer found".into(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub label: Label,
    pub cwe: Option<Cwe>,
    pub raw_answer: String,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("no 'vulnerable' or 'benign' label in answer")]
pub struct NoLabelFound;

fn keyword_positions<'a>(lower: &'a str, word: &'a str) -> impl Iterator<Item = usize> + 'a {
    let bytes = lower.as_bytes();
    lower.match_indices(word).map(|(i, _)| i).filter(move |&i| {
        let before = i == 0 || !bytes[i - 1].is_ascii_alphanumeric();
        let after = bytes.get(i + word.len()).is_none_or(|b| !b.is_ascii_alphanumeric());
        before && after
    })
}

/// The label is given by whichever of "vulnerable" / "benign" appears first
/// (case-insensitive, whole words); the CWE is the first `CWE-<digits>`.
pub fn parse_verdict(final_text: &str) -> Result<Verdict, NoLabelFound> {
    let lower = final_text.to_ascii_lowercase();
    let vul = keyword_positions(&lower, "vulnerable").next();
    let ben = keyword_positions(&lower, "benign").next();
    let label = match (vul, ben) {
        (Some(v), Some(b)) if v < b => Label::Vul,
        (Some(_), None) => Label::Vul,
        (_, Some(_)) => Label::Ben,
        (None, None) => return Err(NoLabelFound),
    };
    Ok(Verdict {
        label,
        cwe: Cwe::find_in(final_text),
        raw_answer: final_text.into(),
    })
}

/// The answer part of a single-shot completion: the text after a
/// `Final Answer:` line when there is one, the whole completion otherwise.
pub fn answer_text(completion: &str) -> &str {
    let mut offset = 0;
    for line in completion.split_inclusive('\n') {
        let trimmed = line.trim_start();
        if strip_prefix_ci(trimmed, "Final Answer:").is_some() {
            let start = offset + (line.len() - trimmed.len()) + "Final Answer:".len();
            return completion[start..].trim();
        }
        offset += line.len();
    }
    completion
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tool_call_from_trace() {
        let parsed = parse_action("Thought: who calls it?\nAction: get_callers\nAction Input: daemon_msg_open_req");
        assert_eq!(
            parsed,
            ParsedAction::Tool {
                thought: "who calls it?".into(),
                call: ToolCall::new(Tool::GetCallers, "daemon_msg_open_req", None),
            }
        );
    }

    #[test]
    fn tool_call_with_line_and_quotes() {
        let parsed = parse_action("Action: get_definition\n\nAction Input: \"daemon_serviceloop\", line 120\n");
        assert_eq!(
            parsed,
            ParsedAction::Tool {
                thought: String::new(),
                call: ToolCall::new(Tool::GetDefinition, "daemon_serviceloop", Some(120)),
            }
        );
        let parsed = parse_action("Action: get_callees\nAction Input: `helper()`");
        assert!(matches!(parsed, ParsedAction::Tool { ref call, .. } if call.argument == "helper"));
    }

    #[test]
    fn final_answer_and_failures() {
        assert_eq!(
            parse_action("Final Answer: vulnerable, CWE-918"),
            ParsedAction::FinalAnswer {
                thought: String::new(),
                answer: "vulnerable, CWE-918".into()
            }
        );
        assert!(matches!(
            parse_action("I think it is fine."),
            ParsedAction::ParseFailure { .. }
        ));
        assert!(matches!(
            parse_action("Action: rm_rf\nAction Input: /"),
            ParsedAction::ParseFailure { .. }
        ));
        assert!(matches!(
            parse_action("Action: get_callers\n"),
            ParsedAction::ParseFailure { .. }
        ));
        assert!(matches!(
            parse_action("Action: get_callers\nAction Input: x, line y"),
            ParsedAction::ParseFailure { .. }
        ));
    }

    #[test]
    fn first_match_wins() {
        let parsed = parse_action("Final Answer: benign\nAction: get_callers\nAction Input: f");
        assert!(matches!(parsed, ParsedAction::FinalAnswer { .. }));
        let parsed = parse_action("Action: get_callers\nAction Input: f\nFinal Answer: benign");
        assert!(matches!(parsed, ParsedAction::Tool { .. }));
    }

    #[test]
    fn verdict_examples() {
        let v = parse_verdict("vulnerable, CWE-120").unwrap();
        assert_eq!((v.label, v.cwe.unwrap().as_str()), (Label::Vul, "CWE-120"));
        let v = parse_verdict("benign").unwrap();
        assert_eq!((v.label, v.cwe), (Label::Ben, None));
        let v = parse_verdict("Benign. Earlier I considered it vulnerable.").unwrap();
        assert_eq!((v.label, v.cwe), (Label::Ben, None));
        assert_eq!(parse_verdict("no idea"), Err(NoLabelFound));
        assert_eq!(parse_verdict("invulnerable").unwrap_err(), NoLabelFound);
    }

    #[test]
    fn answer_text_prefers_final_answer_line() {
        assert_eq!(answer_text("It may be vulnerable...\nFinal Answer: benign"), "benign");
        assert_eq!(answer_text("vulnerable"), "vulnerable");
    }
}
