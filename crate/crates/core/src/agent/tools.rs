//! Rendering of code-graph queries as agent observations.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use super::parse::{Tool, ToolCall};
use crate::code_graph::{CallEntry, CallGraph, LookupError, Resolution};

fn not_found(name: &str) -> String {
    format!("Error: function '{name}' not found.")
}

fn ambiguity_note(name: &str, res: &Resolution<'_>) -> String {
    format!(
        "\nNote: {} functions are named '{name}'; showing {}:{}. Add \", line <n>\" to the input to choose another.",
        res.candidates, res.def.file, res.def.start_line
    )
}

fn list(entries: &[CallEntry], mark_external: bool) -> String {
    let items: Vec<String> = entries
        .iter()
        .map(|e| {
            if mark_external && !e.resolved {
                format!("{} (line {}, external)", e.name, e.line)
            } else {
                format!("{} (line {})", e.name, e.line)
            }
        })
        .collect();
    items.join(", ")
}

/// Run one tool call against the graph. Failures become observation text.
pub fn dispatch_tool(graph: &CallGraph, call: &ToolCall) -> String {
    let name = call.argument.as_str();
    match call.tool {
        Tool::GetCallers => {
            let callers = graph.get_callers(name);
            if callers.is_empty() {
                "No callers found.".into()
            } else {
                format!("Callers of {name}: {}", list(&callers, false))
            }
        }
        Tool::GetCallees => match graph.resolve_lenient(name, call.line) {
            Ok(res) => {
                let callees = graph.callees_of(res.id);
                let mut out = if callees.is_empty() {
                    String::from("No callees found.")
                } else {
                    format!("Callees of {name}: {}", list(&callees, true))
                };
                if res.is_ambiguous() {
                    out.push_str(&ambiguity_note(name, &res));
                }
                out
            }
            Err(LookupError::NotFound(_)) | Err(LookupError::Ambiguous { .. }) => "No callees found.".into(),
        },
        Tool::GetDefinition => match graph.resolve_lenient(name, call.line) {
            Ok(res) => {
                let def = res.def;
                let mut out = format!(
                    "Definition of {name} ({}, lines {}-{}):\n{}",
                    def.file, def.start_line, def.end_line, def.body
                );
                if res.is_ambiguous() {
                    out.push_str(&ambiguity_note(name, &res));
                }
                out
            }
            Err(_) => not_found(name),
        },
    }
}
