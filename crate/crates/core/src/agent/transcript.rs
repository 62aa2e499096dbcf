use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write;

use serde::{Deserialize, Serialize};

use super::parse::{ToolCall, Verdict};
use super::DetectorKind;

/// Why a verdict was produced by fallback rather than read from the model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fallback {
    NoLabelFound,
    ParseRetriesExhausted,
    IterationLimit,
}

impl Fallback {
    pub fn as_str(self) -> &'static str {
        match self {
            Fallback::NoLabelFound => "no_label_found",
            Fallback::ParseRetriesExhausted => "parse_retries_exhausted",
            Fallback::IterationLimit => "iteration_limit",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Step {
    Thought(String),
    Action(ToolCall),
    Observation(String),
    /// An unparseable completion and the reminder sent back to the model.
    FormatError {
        completion: String,
        reminder: String,
    },
    Final {
        verdict: Verdict,
        fallback: Option<Fallback>,
    },
    Abort {
        reason: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub kind: DetectorKind,
    pub steps: Vec<Step>,
    pub tool_invocations: u32,
    pub backend_calls: u32,
    pub prompt_chars: u64,
    pub completion_chars: u64,
}

impl Transcript {
    pub fn new(kind: DetectorKind) -> Self {
        Transcript {
            kind,
            steps: Vec::new(),
            tool_invocations: 0,
            backend_calls: 0,
            prompt_chars: 0,
            completion_chars: 0,
        }
    }

    pub fn verdict(&self) -> Option<&Verdict> {
        match self.steps.last() {
            Some(Step::Final { verdict, .. }) => Some(verdict),
            _ => None,
        }
    }

    pub fn fallback(&self) -> Option<Fallback> {
        match self.steps.last() {
            Some(Step::Final { fallback, .. }) => *fallback,
            _ => None,
        }
    }

    pub fn abort_reason(&self) -> Option<&str> {
        match self.steps.last() {
            Some(Step::Abort { reason }) => Some(reason),
            _ => None,
        }
    }

    pub fn observations(&self) -> impl Iterator<Item = &str> {
        self.steps.iter().filter_map(|s| match s {
            Step::Observation(o) => Some(o.as_str()),
            _ => None,
        })
    }

    pub fn actions(&self) -> impl Iterator<Item = &ToolCall> {
        self.steps.iter().filter_map(|s| match s {
            Step::Action(a) => Some(a),
            _ => None,
        })
    }

    /// Plain-text form with one `Thought:` / `Action:` / `Action Input:` /
    /// `Observation:` line group per step.
    pub fn render(&self) -> String {
        let mut out = format!("# detector: {}\n", self.kind.as_str());
        for step in &self.steps {
            let _ = match step {
                Step::Thought(t) => writeln!(out, "Thought: {t}"),
                Step::Action(call) => writeln!(out, "Action: {}\nAction Input: {}", call.tool, call.input_text()),
                Step::Observation(o) => writeln!(out, "Observation: {o}"),
                Step::FormatError { completion, reminder } => {
                    writeln!(out, "Unparsed Output: {completion}\nFormat Reminder: {reminder}")
                }
                Step::Final { verdict, fallback } => {
                    let cwe = verdict.cwe.as_ref().map_or("-", |c| c.as_str());
                    let _ = writeln!(out, "Final Answer: {}", verdict.raw_answer);
                    match fallback {
                        Some(f) => writeln!(out, "Verdict: {} {cwe} (fallback: {})", verdict.label, f.as_str()),
                        None => writeln!(out, "Verdict: {} {cwe}", verdict.label),
                    }
                }
                Step::Abort { reason } => writeln!(out, "Abort: {reason}"),
            };
        }
        let _ = writeln!(
            out,
            "# tool_invocations: {}, backend_calls: {}, prompt_chars: {}, completion_chars: {}",
            self.tool_invocations, self.backend_calls, self.prompt_chars, self.completion_chars
        );
        out
    }
}
