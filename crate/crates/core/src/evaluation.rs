//! Detection metrics.
//!
//! Pairwise metrics (F1, pairwise accuracy and the failure taxonomy) score a
//! benchmark run where every sample is judged once in its vulnerable and once
//! in its benign version. Scan metrics (VDR, MFR, DPI) score a detector that
//! was run over every function of a snapshot with a list of known
//! vulnerabilities. CLA and TIR apply to both.
//!
//! Degenerate denominators produce `0.0` together with a flag instead of an
//! error, so that a report can always be rendered.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::label::Label;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MetricError {
    #[error("metric needs at least one input")]
    EmptyInput,
    #[error("zero denominator: {0}")]
    ZeroDenominator(&'static str),
}

/// A ratio that may have had a zero denominator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Score {
    pub value: f64,
    pub degenerate: bool,
}

impl Score {
    pub fn ratio(num: f64, den: f64) -> Score {
        if den == 0.0 {
            Score {
                value: 0.0,
                degenerate: true,
            }
        } else {
            Score {
                value: num / den,
                degenerate: false,
            }
        }
    }
}

/// `2·TP / (2·TP + FP + FN)`.
pub fn f1(tp: u64, fp: u64, fn_: u64) -> Score {
    Score::ratio(2.0 * tp as f64, (2 * tp + fp + fn_) as f64)
}

pub fn precision(tp: u64, fp: u64) -> Score {
    Score::ratio(tp as f64, (tp + fp) as f64)
}

pub fn recall(tp: u64, fn_: u64) -> Score {
    Score::ratio(tp as f64, (tp + fn_) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairOutcome {
    Correct,
    PairwiseVulnerable,
    PairwiseBenign,
    PairwiseReversed,
}

impl PairOutcome {
    pub const ALL: [PairOutcome; 4] = [
        PairOutcome::Correct,
        PairOutcome::PairwiseVulnerable,
        PairOutcome::PairwiseBenign,
        PairOutcome::PairwiseReversed,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PairOutcome::Correct => "correct",
            PairOutcome::PairwiseVulnerable => "pairwise_vulnerable",
            PairOutcome::PairwiseBenign => "pairwise_benign",
            PairOutcome::PairwiseReversed => "pairwise_reversed",
        }
    }
}

/// Classify the predictions made on the vulnerable and on the benign version.
pub fn classify_pair(pred_on_vul: Label, pred_on_ben: Label) -> PairOutcome {
    match (pred_on_vul, pred_on_ben) {
        (Label::Vul, Label::Ben) => PairOutcome::Correct,
        (Label::Vul, Label::Vul) => PairOutcome::PairwiseVulnerable,
        (Label::Ben, Label::Ben) => PairOutcome::PairwiseBenign,
        (Label::Ben, Label::Vul) => PairOutcome::PairwiseReversed,
    }
}

/// Fraction of pairs labeled correctly on both sides.
pub fn pacc(outcomes: &[PairOutcome]) -> Result<f64, MetricError> {
    if outcomes.is_empty() {
        return Err(MetricError::EmptyInput);
    }
    let correct = outcomes.iter().filter(|&&o| o == PairOutcome::Correct).count();
    Ok(correct as f64 / outcomes.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScanResult {
    pub detected_known: u64,
    pub total_known: u64,
    pub marked: u64,
    pub total_functions: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionMetrics {
    pub vdr: f64,
    pub mfr: f64,
    /// `2 / (1/(VDR+1) + 1/(MFR+1))`, exactly as defined for the benchmark.
    pub dpi: f64,
    /// Not part of the benchmark definition: the same construction with
    /// `1 - MFR`, so that over-marking lowers the index.
    pub dpi_alt: f64,
}

pub fn dpi(vdr: f64, mfr: f64) -> f64 {
    2.0 / (1.0 / (vdr + 1.0) + 1.0 / (mfr + 1.0))
}

pub fn compute_detection_metrics(scan: &ScanResult) -> Result<DetectionMetrics, MetricError> {
    if scan.total_known == 0 {
        return Err(MetricError::ZeroDenominator("total_known"));
    }
    if scan.total_functions == 0 {
        return Err(MetricError::ZeroDenominator("total_functions"));
    }
    let vdr = scan.detected_known as f64 / scan.total_known as f64;
    let mfr = scan.marked as f64 / scan.total_functions as f64;
    Ok(DetectionMetrics {
        vdr,
        mfr,
        dpi: dpi(vdr, mfr),
        dpi_alt: dpi(vdr, 1.0 - mfr),
    })
}

/// One prediction joined with its ground truth.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub sample_id: String,
    pub version: Label,
    pub truth: Label,
    pub predicted: Label,
    pub predicted_cwe: Option<String>,
    pub truth_cwe: String,
    pub tool_invocations: u32,
    pub fallback_flag: bool,
}

/// How a predicted CWE is compared with the ground truth.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub enum CweMatch {
    #[default]
    Exact,
    /// Also accept ancestors and descendants under a child → parent map.
    Hierarchical(BTreeMap<String, String>),
}

impl CweMatch {
    pub fn matches(&self, predicted: &str, truth: &str) -> bool {
        if predicted == truth {
            return true;
        }
        match self {
            CweMatch::Exact => false,
            CweMatch::Hierarchical(parents) => {
                descends_from(parents, predicted, truth) || descends_from(parents, truth, predicted)
            }
        }
    }
}

fn descends_from(parents: &BTreeMap<String, String>, child: &str, ancestor: &str) -> bool {
    let mut cur = child;
    // The step bound guards against cycles in user-supplied maps.
    for _ in 0..parents.len() {
        match parents.get(cur) {
            Some(p) if p == ancestor => return true,
            Some(p) => cur = p,
            None => return false,
        }
    }
    false
}

/// Among records that are vulnerable and predicted vulnerable, the fraction
/// whose predicted CWE equals the ground truth exactly.
pub fn cla(records: &[PredictionRecord]) -> Score {
    cla_with(records, &CweMatch::Exact)
}

pub fn cla_with(records: &[PredictionRecord], matcher: &CweMatch) -> Score {
    let detected: Vec<&PredictionRecord> = records
        .iter()
        .filter(|r| r.truth == Label::Vul && r.predicted == Label::Vul)
        .collect();
    let matched = detected
        .iter()
        .filter(|r| {
            r.predicted_cwe
                .as_deref()
                .is_some_and(|p| matcher.matches(p, &r.truth_cwe))
        })
        .count();
    Score::ratio(matched as f64, detected.len() as f64)
}

/// Mean tool invocations per analyzed function.
pub fn tir(records: &[PredictionRecord]) -> Result<f64, MetricError> {
    if records.is_empty() {
        return Err(MetricError::EmptyInput);
    }
    let total: u64 = records.iter().map(|r| u64::from(r.tool_invocations)).sum();
    Ok(total as f64 / records.len() as f64)
}

/// Invocation count → number of records with exactly that count.
pub fn tool_histogram(records: &[PredictionRecord]) -> BTreeMap<u32, u64> {
    let mut hist = BTreeMap::new();
    for r in records {
        *hist.entry(r.tool_invocations).or_insert(0) += 1;
    }
    hist
}

/// Mean tool invocations over the records of one version.
pub fn mean_tool_invocations(records: &[PredictionRecord], version: Label) -> Score {
    let (sum, n) = records
        .iter()
        .filter(|r| r.version == version)
        .fold((0u64, 0u64), |(s, n), r| (s + u64::from(r.tool_invocations), n + 1));
    Score::ratio(sum as f64, n as f64)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
    pub tn: u64,
}

impl Confusion {
    pub fn from_records(records: &[PredictionRecord]) -> Confusion {
        let mut c = Confusion::default();
        for r in records {
            match (r.truth, r.predicted) {
                (Label::Vul, Label::Vul) => c.tp += 1,
                (Label::Ben, Label::Vul) => c.fp += 1,
                (Label::Vul, Label::Ben) => c.fn_ += 1,
                (Label::Ben, Label::Ben) => c.tn += 1,
            }
        }
        c
    }
}

/// Accuracy over the records of one version.
pub fn version_accuracy(records: &[PredictionRecord], version: Label) -> Score {
    let (correct, n) = records
        .iter()
        .filter(|r| r.version == version)
        .fold((0u64, 0u64), |(c, n), r| (c + u64::from(r.predicted == r.truth), n + 1));
    Score::ratio(correct as f64, n as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeCounts {
    pub correct: u64,
    pub pairwise_vulnerable: u64,
    pub pairwise_benign: u64,
    pub pairwise_reversed: u64,
}

impl OutcomeCounts {
    pub fn from_outcomes(outcomes: &[PairOutcome]) -> OutcomeCounts {
        let count = |o: PairOutcome| outcomes.iter().filter(|&&x| x == o).count() as u64;
        OutcomeCounts {
            correct: count(PairOutcome::Correct),
            pairwise_vulnerable: count(PairOutcome::PairwiseVulnerable),
            pairwise_benign: count(PairOutcome::PairwiseBenign),
            pairwise_reversed: count(PairOutcome::PairwiseReversed),
        }
    }

    pub fn total(&self) -> u64 {
        self.correct + self.pairwise_vulnerable + self.pairwise_benign + self.pairwise_reversed
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub pairs: u64,
    pub f1: Score,
    pub precision: Score,
    pub recall: Score,
    pub pacc: Score,
    pub outcome_counts: OutcomeCounts,
    /// Samples with only one evaluated version; excluded from every metric.
    pub unpaired: Vec<String>,
    pub cla: Score,
    pub tir: Score,
    pub tool_histogram: BTreeMap<u32, u64>,
    pub mean_tool_invocations_vul: Score,
    pub mean_tool_invocations_ben: Score,
    pub fallback_count: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scan: Option<DetectionMetrics>,
}

/// Join vulnerable and benign records per sample and compute every pairwise
/// metric. The result does not depend on record order.
pub fn evaluate_records(records: &[PredictionRecord]) -> MetricsReport {
    evaluate_records_with(records, &CweMatch::Exact)
}

pub fn evaluate_records_with(records: &[PredictionRecord], matcher: &CweMatch) -> MetricsReport {
    let mut by_sample: BTreeMap<&str, (Option<&PredictionRecord>, Option<&PredictionRecord>)> = BTreeMap::new();
    for r in records {
        let slot = by_sample.entry(r.sample_id.as_str()).or_default();
        match r.version {
            Label::Vul => slot.0 = Some(r),
            Label::Ben => slot.1 = Some(r),
        }
    }
    let mut paired = Vec::new();
    let mut outcomes = Vec::new();
    let mut unpaired = Vec::new();
    for (id, slot) in by_sample {
        match slot {
            (Some(v), Some(b)) => {
                outcomes.push(classify_pair(v.predicted, b.predicted));
                paired.push(v.clone());
                paired.push(b.clone());
            }
            _ => unpaired.push(String::from(id)),
        }
    }
    let confusion = Confusion::from_records(&paired);
    MetricsReport {
        pairs: outcomes.len() as u64,
        f1: f1(confusion.tp, confusion.fp, confusion.fn_),
        precision: precision(confusion.tp, confusion.fp),
        recall: recall(confusion.tp, confusion.fn_),
        pacc: match pacc(&outcomes) {
            Ok(value) => Score {
                value,
                degenerate: false,
            },
            Err(_) => Score::ratio(0.0, 0.0),
        },
        outcome_counts: OutcomeCounts::from_outcomes(&outcomes),
        unpaired,
        cla: cla_with(&paired, matcher),
        tir: match tir(&paired) {
            Ok(value) => Score {
                value,
                degenerate: false,
            },
            Err(_) => Score::ratio(0.0, 0.0),
        },
        tool_histogram: tool_histogram(&paired),
        mean_tool_invocations_vul: mean_tool_invocations(&paired, Label::Vul),
        mean_tool_invocations_ben: mean_tool_invocations(&paired, Label::Ben),
        fallback_count: paired.iter().filter(|r| r.fallback_flag).count() as u64,
        scan: None,
    }
}
