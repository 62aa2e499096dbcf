//! Repository scans: the detector is run over every function of one
//! snapshot and the marked functions are compared with a list of known
//! vulnerable functions.

use jitscan_core::agent::Detector;
use jitscan_core::agent::Transcript;
use jitscan_core::code_graph::CallGraph;
use jitscan_core::evaluation::{compute_detection_metrics, DetectionMetrics, ScanResult, Score};
use jitscan_core::Label;
use serde::{Deserialize, Serialize};

use crate::backends::BackendPool;
use crate::script::function_key;

/// One line of the known-vulnerabilities JSONL.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KnownVulnerability {
    pub file: String,
    pub function_name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cwe_id: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScannedFunction {
    pub file: String,
    pub function_name: String,
    pub start_line: u32,
    pub known: bool,
    /// `None` when the run aborted.
    pub predicted: Option<Label>,
    pub predicted_cwe: Option<String>,
    pub tool_invocations: u32,
    pub fallback_flag: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub abort: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanReport {
    pub snapshot_id: String,
    pub method: String,
    pub result: ScanResult,
    /// Absent when there are no known vulnerabilities or no functions.
    pub metrics: Option<DetectionMetrics>,
    /// Exact CWE matches among detected known vulnerabilities that carry one.
    pub cla: Score,
    /// Mean tool invocations over the functions that were analyzed.
    pub tir: Score,
    /// Known entries that name no function of the snapshot.
    pub unmatched_known: Vec<KnownVulnerability>,
    pub functions: Vec<ScannedFunction>,
}

/// Analyze every function of `graph` in graph order. Aborted functions count
/// as not marked. Each run gets the backend keyed `<file>::<name>`.
pub fn scan_snapshot(
    graph: &CallGraph,
    detector: &Detector<'_>,
    backends: &BackendPool<'_>,
    known: &[KnownVulnerability],
) -> (ScanReport, Vec<(String, Transcript)>) {
    let is_known = |file: &str, name: &str| known.iter().find(|k| k.file == file && k.function_name == name);
    let mut functions = Vec::new();
    let mut transcripts = Vec::new();
    for f in graph.functions() {
        let key = function_key(&f.file, &f.name);
        let mut backend = backends.backend(&key);
        let t = detector.run(&mut *backend, graph, f);
        let verdict = t.verdict();
        functions.push(ScannedFunction {
            file: f.file.clone(),
            function_name: f.name.clone(),
            start_line: f.start_line,
            known: is_known(&f.file, &f.name).is_some(),
            predicted: verdict.map(|v| v.label),
            predicted_cwe: verdict.and_then(|v| v.cwe.as_ref()).map(|c| c.as_str().to_string()),
            tool_invocations: t.tool_invocations,
            fallback_flag: t.fallback().is_some(),
            abort: t.abort_reason().map(str::to_string),
        });
        transcripts.push((format!("{key}:{}", f.start_line), t));
    }
    let marked = |file: &str, name: &str| {
        functions
            .iter()
            .any(|s| s.file == file && s.function_name == name && s.predicted == Some(Label::Vul))
    };
    let detected: Vec<&KnownVulnerability> = known.iter().filter(|k| marked(&k.file, &k.function_name)).collect();
    let result = ScanResult {
        detected_known: detected.len() as u64,
        total_known: known.len() as u64,
        marked: functions.iter().filter(|s| s.predicted == Some(Label::Vul)).count() as u64,
        total_functions: functions.len() as u64,
    };
    let with_cwe: Vec<(&KnownVulnerability, &str)> = detected
        .iter()
        .filter_map(|k| k.cwe_id.as_deref().map(|c| (*k, c)))
        .collect();
    let exact = with_cwe
        .iter()
        .filter(|(k, cwe)| {
            functions.iter().any(|s| {
                s.file == k.file
                    && s.function_name == k.function_name
                    && s.predicted == Some(Label::Vul)
                    && s.predicted_cwe.as_deref() == Some(*cwe)
            })
        })
        .count();
    let analyzed: Vec<&ScannedFunction> = functions.iter().filter(|s| s.abort.is_none()).collect();
    let invocations: u64 = analyzed.iter().map(|s| u64::from(s.tool_invocations)).sum();
    let unmatched_known = known
        .iter()
        .filter(|k| {
            !graph
                .functions()
                .iter()
                .any(|f| f.file == k.file && f.name == k.function_name)
        })
        .cloned()
        .collect();
    let cfg = &detector.config;
    let report = ScanReport {
        snapshot_id: graph.snapshot_id().into(),
        method: format!("{} {} (scan)", cfg.kind.display_name(), cfg.strategy.display_name()),
        result,
        metrics: compute_detection_metrics(&result).ok(),
        cla: Score::ratio(exact as f64, with_cwe.len() as f64),
        tir: Score::ratio(invocations as f64, analyzed.len() as f64),
        unmatched_known,
        functions,
    };
    (report, transcripts)
}
