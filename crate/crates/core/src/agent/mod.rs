//! The three detector families over a pluggable [`ModelBackend`].
//!
//! * Plain: one completion on the target function alone.
//! * Dep-Aug: one completion with the top-k lexically similar callers and
//!   callees inlined.
//! * ReAct: a thought/action/observation loop where the model queries the
//!   call graph through three tools until it gives a final answer.
//!
//! Every run returns a [`Transcript`]; it ends with a `Final` step carrying
//! the verdict, or an `Abort` step when the backend failed.

mod backend;
mod parse;
mod prompt;
mod tools;
mod transcript;

use alloc::format;
use alloc::string::{String, ToString};
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

pub use backend::{BackendError, Decoding, ModelBackend, ScriptStep, ScriptedBackend};
pub use parse::{answer_text, parse_action, parse_verdict, NoLabelFound, ParsedAction, Tool, ToolCall, Verdict};
pub use prompt::{
    build_prompt, render_dependencies, render_examples, ExampleError, FewShotExample, PromptError, PromptTemplates,
    DEFAULT_COT_INSTRUCTION, NO_DEPENDENCIES,
};
pub use tools::dispatch_tool;
pub use transcript::{Fallback, Step, Transcript};

use crate::code_graph::{CallGraph, FunctionDef};
use crate::label::Label;
use crate::retrieval::{top_k_dependencies, PoolMode, DEFAULT_K};

/// Parse failures tolerated per ReAct step before falling back.
pub const MAX_PARSE_RETRIES: u32 = 2;

pub const DEFAULT_MAX_ITERATIONS: u32 = 10;

pub const FORMAT_REMINDER: &str = "Invalid format. Reply with a \"Thought:\" line followed by either \"Action:\" and \"Action Input:\" lines, or a \"Final Answer:\" line.";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetectorKind {
    Plain,
    DepAug,
    React,
}

impl DetectorKind {
    pub const ALL: [DetectorKind; 3] = [DetectorKind::Plain, DetectorKind::DepAug, DetectorKind::React];

    pub fn as_str(self) -> &'static str {
        match self {
            DetectorKind::Plain => "plain",
            DetectorKind::DepAug => "dep_aug",
            DetectorKind::React => "react",
        }
    }

    /// Name used in report tables.
    pub fn display_name(self) -> &'static str {
        match self {
            DetectorKind::Plain => "Plain LLM",
            DetectorKind::DepAug => "Dep-Aug LLM",
            DetectorKind::React => "ReAct Agent",
        }
    }
}

impl FromStr for DetectorKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "plain" => Ok(DetectorKind::Plain),
            "dep_aug" | "dep-aug" | "depaug" => Ok(DetectorKind::DepAug),
            "react" => Ok(DetectorKind::React),
            other => Err(format!("unknown detector '{other}' (plain, dep_aug, react)")),
        }
    }
}

impl fmt::Display for DetectorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Prompting strategy: chain-of-thought instruction and/or few-shot examples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Strategy {
    pub cot: bool,
    pub few_shot: bool,
}

impl Strategy {
    pub const VANILLA: Strategy = Strategy {
        cot: false,
        few_shot: false,
    };
    pub const COT: Strategy = Strategy {
        cot: true,
        few_shot: false,
    };
    pub const FS: Strategy = Strategy {
        cot: false,
        few_shot: true,
    };
    pub const COT_FS: Strategy = Strategy {
        cot: true,
        few_shot: true,
    };
    pub const ALL: [Strategy; 4] = [Strategy::VANILLA, Strategy::COT, Strategy::FS, Strategy::COT_FS];

    pub fn as_str(self) -> &'static str {
        match (self.cot, self.few_shot) {
            (false, false) => "vanilla",
            (true, false) => "cot",
            (false, true) => "fs",
            (true, true) => "cot+fs",
        }
    }

    pub fn display_name(self) -> &'static str {
        match (self.cot, self.few_shot) {
            (false, false) => "vanilla",
            (true, false) => "w/ CoT",
            (false, true) => "w/ FS",
            (true, true) => "w/ CoT+FS",
        }
    }
}

impl FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "vanilla" => Ok(Strategy::VANILLA),
            "cot" => Ok(Strategy::COT),
            "fs" => Ok(Strategy::FS),
            "cot+fs" | "cot_fs" | "cot-fs" => Ok(Strategy::COT_FS),
            other => Err(format!("unknown strategy '{other}' (vanilla, cot, fs, cot+fs)")),
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorConfig {
    pub kind: DetectorKind,
    pub strategy: Strategy,
    pub k: usize,
    pub pool: PoolMode,
    pub max_iterations: u32,
    pub decoding: Decoding,
}

impl DetectorConfig {
    pub fn new(kind: DetectorKind, strategy: Strategy) -> Self {
        DetectorConfig {
            kind,
            strategy,
            k: DEFAULT_K,
            pool: PoolMode::Pooled,
            max_iterations: DEFAULT_MAX_ITERATIONS,
            decoding: Decoding::default(),
        }
    }
}

/// A configured detector bound to a template set.
#[derive(Debug, Clone, Copy)]
pub struct Detector<'t> {
    pub config: DetectorConfig,
    pub templates: &'t PromptTemplates,
}

impl<'t> Detector<'t> {
    pub fn new(config: DetectorConfig, templates: &'t PromptTemplates) -> Self {
        Detector { config, templates }
    }

    /// Run the configured detector family on `target` in `graph`.
    pub fn run<B: ModelBackend + ?Sized>(
        &self,
        backend: &mut B,
        graph: &CallGraph,
        target: &FunctionDef,
    ) -> Transcript {
        match self.config.kind {
            DetectorKind::Plain => self.run_plain(backend, &target.body),
            DetectorKind::DepAug => self.run_dep_aug(backend, graph, target),
            DetectorKind::React => self.run_react(backend, graph, target),
        }
    }

    pub fn run_plain<B: ModelBackend + ?Sized>(&self, backend: &mut B, target_body: &str) -> Transcript {
        let mut transcript = Transcript::new(DetectorKind::Plain);
        match build_prompt(
            self.templates,
            DetectorKind::Plain,
            self.config.strategy,
            target_body,
            None,
        ) {
            Ok(prompt) => self.single_shot(backend, &prompt, &mut transcript),
            Err(err) => abort(&mut transcript, format!("prompt: {err}")),
        }
        transcript
    }

    pub fn run_dep_aug<B: ModelBackend + ?Sized>(
        &self,
        backend: &mut B,
        graph: &CallGraph,
        target: &FunctionDef,
    ) -> Transcript {
        let mut transcript = Transcript::new(DetectorKind::DepAug);
        let deps = top_k_dependencies(graph, target, self.config.k, self.config.pool);
        match build_prompt(
            self.templates,
            DetectorKind::DepAug,
            self.config.strategy,
            &target.body,
            Some(&deps),
        ) {
            Ok(prompt) => self.single_shot(backend, &prompt, &mut transcript),
            Err(err) => abort(&mut transcript, format!("prompt: {err}")),
        }
        transcript
    }

    fn single_shot<B: ModelBackend + ?Sized>(&self, backend: &mut B, prompt: &str, transcript: &mut Transcript) {
        let Some(completion) = call(backend, prompt, &self.config.decoding, transcript) else {
            return;
        };
        finish(transcript, answer_text(&completion));
    }

    /// The ReAct loop. At most `max_iterations` steps, each allowing
    /// [`MAX_PARSE_RETRIES`] retries after unparseable completions. Running
    /// out of either budget yields a flagged benign verdict.
    pub fn run_react<B: ModelBackend + ?Sized>(
        &self,
        backend: &mut B,
        graph: &CallGraph,
        target: &FunctionDef,
    ) -> Transcript {
        let mut transcript = Transcript::new(DetectorKind::React);
        let base = match build_prompt(
            self.templates,
            DetectorKind::React,
            self.config.strategy,
            &target.body,
            None,
        ) {
            Ok(prompt) => prompt,
            Err(err) => {
                abort(&mut transcript, format!("prompt: {err}"));
                return transcript;
            }
        };
        let mut scratchpad = String::new();
        for _ in 0..self.config.max_iterations.max(1) {
            let mut failures = 0;
            loop {
                let prompt = format!("{base}{scratchpad}");
                let Some(completion) = call(backend, &prompt, &self.config.decoding, &mut transcript) else {
                    return transcript;
                };
                match parse_action(&completion) {
                    ParsedAction::Tool { thought, call } => {
                        let observation = dispatch_tool(graph, &call);
                        scratchpad.push_str(&format!(
                            "Thought: {thought}\nAction: {}\nAction Input: {}\nObservation: {observation}\n",
                            call.tool,
                            call.input_text()
                        ));
                        if !thought.is_empty() {
                            transcript.steps.push(Step::Thought(thought));
                        }
                        transcript.steps.push(Step::Action(call));
                        transcript.steps.push(Step::Observation(observation));
                        transcript.tool_invocations += 1;
                        break;
                    }
                    ParsedAction::FinalAnswer { thought, answer } => {
                        if !thought.is_empty() {
                            transcript.steps.push(Step::Thought(thought));
                        }
                        finish(&mut transcript, &answer);
                        return transcript;
                    }
                    ParsedAction::ParseFailure { reason } => {
                        failures += 1;
                        let reminder = format!("{FORMAT_REMINDER} ({reason})");
                        scratchpad.push_str(&format!("{}\nObservation: {reminder}\n", completion.trim_end()));
                        transcript.steps.push(Step::FormatError { completion, reminder });
                        if failures > MAX_PARSE_RETRIES {
                            fall_back(&mut transcript, Fallback::ParseRetriesExhausted);
                            return transcript;
                        }
                    }
                }
            }
        }
        fall_back(&mut transcript, Fallback::IterationLimit);
        transcript
    }
}

fn call<B: ModelBackend + ?Sized>(
    backend: &mut B,
    prompt: &str,
    decoding: &Decoding,
    transcript: &mut Transcript,
) -> Option<String> {
    transcript.backend_calls += 1;
    transcript.prompt_chars += prompt.chars().count() as u64;
    match backend.complete(prompt, decoding) {
        Ok(text) => {
            transcript.completion_chars += text.chars().count() as u64;
            Some(text)
        }
        Err(err) => {
            abort(transcript, format!("backend: {err}"));
            None
        }
    }
}

fn abort(transcript: &mut Transcript, reason: String) {
    transcript.steps.push(Step::Abort { reason });
}

fn finish(transcript: &mut Transcript, answer: &str) {
    match parse_verdict(answer) {
        Ok(verdict) => transcript.steps.push(Step::Final {
            verdict,
            fallback: None,
        }),
        Err(NoLabelFound) => transcript.steps.push(Step::Final {
            verdict: Verdict {
                label: Label::Ben,
                cwe: None,
                raw_answer: answer.to_string(),
            },
            fallback: Some(Fallback::NoLabelFound),
        }),
    }
}

fn fall_back(transcript: &mut Transcript, reason: Fallback) {
    transcript.steps.push(Step::Final {
        verdict: Verdict {
            label: Label::Ben,
            cwe: None,
            raw_answer: String::new(),
        },
        fallback: Some(reason),
    });
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::code_graph::{build_graph, SourceFile};
    use alloc::vec;

    fn templates() -> PromptTemplates {
        PromptTemplates {
            plain: "Plain:\n{examples}{target_function}\n{cot}".into(),
            dep_aug: "DepAug:\n{examples}{target_function}\n{dependencies}\n{cot}".into(),
            react: "React:\n{examples}{target_function}\n{cot}Begin!\n".into(),
            cot_instruction: DEFAULT_COT_INSTRUCTION.into(),
            examples: vec![],
        }
    }

    fn graph() -> CallGraph {
        build_graph(
            &[SourceFile::new(
                "rpcapd/daemon.c",
                "int daemon_msg_open_req(char *source){\n  return pcap_open(source);\n}\nvoid daemon_serviceloop(){\n  daemon_msg_open_req(buf);\n}\n",
            )],
            "s",
        )
    }

    #[test]
    fn plain_run_reads_verdict() {
        let t = templates();
        let detector = Detector::new(DetectorConfig::new(DetectorKind::Plain, Strategy::VANILLA), &t);
        let mut backend = ScriptedBackend::from_texts(["vulnerable, CWE-787"]);
        let transcript = detector.run_plain(&mut backend, "void f(){}");
        let verdict = transcript.verdict().unwrap();
        assert_eq!(
            (verdict.label, verdict.cwe.as_ref().unwrap().as_str()),
            (Label::Vul, "CWE-787")
        );
        assert_eq!(transcript.tool_invocations, 0);
    }

    #[test]
    fn plain_run_aborts_on_backend_error() {
        let t = templates();
        let detector = Detector::new(DetectorConfig::new(DetectorKind::Plain, Strategy::VANILLA), &t);
        let mut backend = ScriptedBackend::new([ScriptStep::Error("timeout".into())]);
        let transcript = detector.run_plain(&mut backend, "void f(){}");
        assert!(transcript.verdict().is_none());
        assert_eq!(transcript.abort_reason(), Some("backend: injected fault: timeout"));
    }

    #[test]
    fn react_three_step_trace() {
        let t = templates();
        let g = graph();
        let target = g.get_definition("daemon_msg_open_req", None).unwrap();
        let detector = Detector::new(DetectorConfig::new(DetectorKind::React, Strategy::VANILLA), &t);
        let mut backend = ScriptedBackend::from_texts([
            "Thought: who passes source?\nAction: get_callers\nAction Input: daemon_msg_open_req",
            "Thought: inspect the caller\nAction: get_definition\nAction Input: daemon_serviceloop, line 5",
            "Thought: source is never validated\nFinal Answer: vulnerable, CWE-918",
        ]);
        let transcript = detector.run_react(&mut backend, &g, target);
        assert_eq!(transcript.tool_invocations, 2);
        let verdict = transcript.verdict().unwrap();
        assert_eq!(
            (verdict.label, verdict.cwe.as_ref().unwrap().as_str()),
            (Label::Vul, "CWE-918")
        );
        let observations: Vec<&str> = transcript.observations().collect();
        let expected: Vec<String> = transcript.actions().map(|a| dispatch_tool(&g, a)).collect();
        assert_eq!(observations, expected);
        // the scratchpad carries earlier observations into later prompts
        assert!(
            backend.prompts()[2].contains("Observation: Callers of daemon_msg_open_req: daemon_serviceloop (line 5)")
        );
    }

    #[test]
    fn react_garbage_falls_back_within_budget() {
        let t = templates();
        let g = graph();
        let target = g.get_definition("daemon_msg_open_req", None).unwrap();
        let detector = Detector::new(DetectorConfig::new(DetectorKind::React, Strategy::VANILLA), &t);
        let mut backend = ScriptedBackend::from_texts(vec!["I think it is fine."; 10]);
        let transcript = detector.run_react(&mut backend, &g, target);
        assert_eq!(transcript.fallback(), Some(Fallback::ParseRetriesExhausted));
        assert_eq!(transcript.verdict().unwrap().label, Label::Ben);
        assert_eq!(transcript.backend_calls, 1 + MAX_PARSE_RETRIES);
        assert_eq!(backend.remaining(), 10 - 3);
    }

    #[test]
    fn react_iteration_limit() {
        let t = templates();
        let g = graph();
        let target = g.get_definition("daemon_msg_open_req", None).unwrap();
        let mut config = DetectorConfig::new(DetectorKind::React, Strategy::VANILLA);
        config.max_iterations = 3;
        let detector = Detector::new(config, &t);
        let mut backend = ScriptedBackend::from_texts(vec!["Action: get_callers\nAction Input: x"; 10]);
        let transcript = detector.run_react(&mut backend, &g, target);
        assert_eq!(transcript.fallback(), Some(Fallback::IterationLimit));
        assert_eq!(transcript.tool_invocations, 3);
        assert_eq!(transcript.backend_calls, 3);
    }

    #[test]
    fn strategy_names_round_trip() {
        for s in Strategy::ALL {
            assert_eq!(s.as_str().parse::<Strategy>().unwrap(), s);
        }
        for k in DetectorKind::ALL {
            assert_eq!(k.as_str().parse::<DetectorKind>().unwrap(), k);
        }
    }
}
