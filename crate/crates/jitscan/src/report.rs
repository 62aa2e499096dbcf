//! Text renderings of run evaluations.

use std::fmt::Write;

use crate::harness::RunEvaluation;

fn pct(value: f64) -> String {
    format!("{:.2}", value * 100.0)
}

/// Fixed-width table with one row per run and F1 / pAcc in percent.
pub fn render_table(runs: &[RunEvaluation]) -> String {
    let width = runs
        .iter()
        .map(|r| r.method.chars().count())
        .chain(std::iter::once("Method".len()))
        .max()
        .unwrap_or(6);
    let mut out = String::new();
    let _ = writeln!(out, "{:<width$}  {:>7}  {:>7}  {:>5}", "Method", "F1", "pAcc", "Pairs");
    let _ = writeln!(
        out,
        "{}  {}  {}  {}",
        "-".repeat(width),
        "-".repeat(7),
        "-".repeat(7),
        "-".repeat(5)
    );
    for r in runs {
        let _ = writeln!(
            out,
            "{:<width$}  {:>7}  {:>7}  {:>5}",
            r.method,
            pct(r.report.f1.value),
            pct(r.report.pacc.value),
            r.report.pairs
        );
    }
    out
}

/// `method,tool_invocations,count` rows of the tool-invocation histograms.
pub fn histogram_csv(runs: &[RunEvaluation]) -> String {
    let mut out = String::from("method,tool_invocations,count\n");
    for r in runs {
        let method = if r.method.contains([',', '"']) {
            format!("\"{}\"", r.method.replace('"', "\"\""))
        } else {
            r.method.clone()
        };
        for (n, count) in &r.report.tool_histogram {
            let _ = writeln!(out, "{method},{n},{count}");
        }
    }
    out
}
