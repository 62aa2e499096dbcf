//! Prompt templates and prompt assembly.
//!
//! A template is plain text with `{target_function}`, `{dependencies}`,
//! `{examples}` and `{cot}` placeholders. Substitution is a single pass over
//! the template, so placeholder-like text inside the substituted code is
//! never expanded.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write;

use super::{DetectorKind, Strategy};
use crate::label::Cwe;
use crate::retrieval::RankedDependency;

pub const DEFAULT_COT_INSTRUCTION: &str = "Solve this problem step by step.";

pub const NO_DEPENDENCIES: &str = "No dependencies retrieved.";

const PLACEHOLDERS: [&str; 4] = ["target_function", "dependencies", "examples", "cot"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FewShotExample {
    pub cwe_id: Cwe,
    pub vulnerable_code: String,
    pub vulnerable_explanation: String,
    pub benign_code: String,
    pub benign_explanation: String,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ExampleError {
    #[error("first line must be 'cwe: CWE-<digits>'")]
    MissingCwe,
    #[error("{0}")]
    InvalidCwe(#[from] crate::label::InvalidCwe),
    #[error("missing or empty section '{0}'")]
    MissingSection(&'static str),
}

const SECTIONS: [&str; 4] = [
    "vulnerable code",
    "vulnerable explanation",
    "benign code",
    "benign explanation",
];

impl FewShotExample {
    /// Parse an example file:
    ///
    /// ```text
    /// cwe: CWE-787
    /// --- vulnerable code ---
    /// ...
    /// --- vulnerable explanation ---
    /// ...
    /// --- benign code ---
    /// ...
    /// --- benign explanation ---
    /// ...
    /// ```
    pub fn parse(text: &str) -> Result<Self, ExampleError> {
        let mut lines = text.lines();
        let cwe = lines
            .by_ref()
            .find(|l| !l.trim().is_empty())
            .and_then(|l| l.trim().strip_prefix("cwe:"))
            .ok_or(ExampleError::MissingCwe)?;
        let cwe_id = Cwe::parse(cwe)?;
        let mut sections: [Vec<&str>; 4] = Default::default();
        let mut current: Option<usize> = None;
        for line in lines {
            let marker = line
                .trim()
                .strip_prefix("---")
                .and_then(|l| l.strip_suffix("---"))
                .map(str::trim);
            if let Some(idx) = marker.and_then(|m| SECTIONS.iter().position(|s| *s == m)) {
                current = Some(idx);
                continue;
            }
            if let Some(idx) = current {
                sections[idx].push(line);
            }
        }
        let mut take = |idx: usize| -> Result<String, ExampleError> {
            let text = core::mem::take(&mut sections[idx]).join("\n");
            let text = text.trim_matches('\n').trim_end();
            if text.trim().is_empty() {
                Err(ExampleError::MissingSection(SECTIONS[idx]))
            } else {
                Ok(text.into())
            }
        };
        Ok(FewShotExample {
            cwe_id,
            vulnerable_code: take(0)?,
            vulnerable_explanation: take(1)?,
            benign_code: take(2)?,
            benign_explanation: take(3)?,
        })
    }
}

/// The full template set used by the three detectors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplates {
    pub plain: String,
    pub dep_aug: String,
    pub react: String,
    pub cot_instruction: String,
    pub examples: Vec<FewShotExample>,
}

impl PromptTemplates {
    pub fn template(&self, kind: DetectorKind) -> &str {
        match kind {
            DetectorKind::Plain => &self.plain,
            DetectorKind::DepAug => &self.dep_aug,
            DetectorKind::React => &self.react,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PromptError {
    #[error("missing template: {0}")]
    MissingTemplate(&'static str),
    #[error("template placeholder '{{{0}}}' cannot be resolved")]
    PlaceholderUnresolved(String),
    #[error("dependencies must be supplied for dep_aug prompts and only for them")]
    DependencyMismatch,
}

/// The few-shot block inserted at `{examples}`.
pub fn render_examples(examples: &[FewShotExample]) -> String {
    let mut out = String::from(
        "The following examples show vulnerable functions together with their patched, benign versions.\n",
    );
    for (i, ex) in examples.iter().enumerate() {
        let _ = write!(
            out,
            "\nExample {n} ({cwe})\nVulnerable code:\n```c\n{vc}\n```\nWhy it is vulnerable: {ve}\n\nBenign code:\n```c\n{bc}\n```\nWhy it is benign: {be}\n",
            n = i + 1,
            cwe = ex.cwe_id,
            vc = ex.vulnerable_code,
            ve = ex.vulnerable_explanation,
            bc = ex.benign_code,
            be = ex.benign_explanation,
        );
    }
    out.push('\n');
    out
}

/// The dependency block inserted at `{dependencies}`.
pub fn render_dependencies(deps: &[RankedDependency]) -> String {
    if deps.is_empty() {
        return NO_DEPENDENCIES.into();
    }
    let blocks: Vec<String> = deps
        .iter()
        .map(|d| {
            format!(
                "[{rel}] {name} ({file}:{start}-{end}, similarity {score:.4})\n```c\n{body}\n```",
                rel = d.relation.as_str(),
                name = d.function.name,
                file = d.function.file,
                start = d.function.start_line,
                end = d.function.end_line,
                score = d.score,
                body = d.function.body,
            )
        })
        .collect();
    blocks.join("\n\n")
}

/// Assemble a detector prompt. `deps` must be `Some` exactly for
/// [`DetectorKind::DepAug`]; an empty slice renders an explicit
/// "no dependencies" block.
pub fn build_prompt(
    templates: &PromptTemplates,
    kind: DetectorKind,
    strategy: Strategy,
    target_body: &str,
    deps: Option<&[RankedDependency]>,
) -> Result<String, PromptError> {
    if deps.is_some() != (kind == DetectorKind::DepAug) {
        return Err(PromptError::DependencyMismatch);
    }
    let template = templates.template(kind);
    if template.trim().is_empty() {
        return Err(PromptError::MissingTemplate(kind.as_str()));
    }
    let examples = if strategy.few_shot {
        if templates.examples.is_empty() {
            return Err(PromptError::MissingTemplate("few-shot examples"));
        }
        render_examples(&templates.examples)
    } else {
        String::new()
    };
    let cot = if strategy.cot {
        if templates.cot_instruction.trim().is_empty() {
            return Err(PromptError::MissingTemplate("cot instruction"));
        }
        format!("{}\n", templates.cot_instruction.trim_end())
    } else {
        String::new()
    };
    let dependencies = deps.map(render_dependencies).unwrap_or_default();

    let mut required: Vec<&str> = alloc::vec!["target_function"];
    if kind == DetectorKind::DepAug {
        required.push("dependencies");
    }
    if strategy.few_shot {
        required.push("examples");
    }
    if strategy.cot {
        required.push("cot");
    }
    let mut seen: Vec<&str> = Vec::new();
    let mut out = String::with_capacity(template.len() + target_body.len() + examples.len());
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let after = &rest[open + 1..];
        let name_len = after
            .bytes()
            .take_while(|b| b.is_ascii_lowercase() || *b == b'_')
            .count();
        if name_len == 0 || after.as_bytes().get(name_len) != Some(&b'}') {
            out.push('{');
            rest = after;
            continue;
        }
        let name = &after[..name_len];
        let value = match name {
            "target_function" => target_body,
            "dependencies" => dependencies.as_str(),
            "examples" => examples.as_str(),
            "cot" => cot.as_str(),
            other => return Err(PromptError::PlaceholderUnresolved(other.into())),
        };
        out.push_str(value);
        if let Some(p) = PLACEHOLDERS.iter().find(|p| **p == name) {
            seen.push(p);
        }
        rest = &after[name_len + 1..];
    }
    out.push_str(rest);
    if let Some(missing) = required.iter().find(|r| !seen.contains(r)) {
        return Err(PromptError::PlaceholderUnresolved((*missing).into()));
    }
    Ok(out)
}
