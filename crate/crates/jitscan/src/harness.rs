//! Benchmark runs: every sample is analyzed once in its vulnerable version
//! (on the introducing snapshot) and once in its benign version (on the
//! fixing snapshot).
//!
//! Output directory layout:
//!
//! ```text
//! records.jsonl                 prediction records in sample order, vul before ben
//! aborts.jsonl                  versions that produced no record, with the reason
//! transcripts/<id>.<vul|ben>.txt
//! run.json                      configuration, its hash and the toolkit version
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use jitscan_core::agent::PromptTemplates;
use jitscan_core::agent::Transcript;
use jitscan_core::agent::{Detector, DetectorConfig, DetectorKind};
use jitscan_core::evaluation::{evaluate_records_with, CweMatch, MetricsReport, PredictionRecord};
use jitscan_core::history::normalize_body;
use jitscan_core::retrieval::PoolMode;
use jitscan_core::Label;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::backends::{BackendPool, BackendSpec};
use crate::cache::GraphCache;
use crate::error::{io_at, Error, Result};
use crate::jsonl::{read_jsonl, write_jsonl};
use crate::samples::{LoadedSample, SampleSet};
use crate::scan::ScanReport;
use crate::script::version_key;
use crate::store::SnapshotStore;
use crate::templates;

pub const TOOLKIT_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub detector: DetectorConfig,
    pub parallelism: usize,
    pub output: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AbortEntry {
    pub sample_id: String,
    pub version: Label,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub toolkit_version: String,
    pub config_hash: String,
    pub detector: DetectorKind,
    pub strategy: String,
    pub k: usize,
    pub pool: PoolMode,
    pub max_iterations: u32,
    pub temperature: f64,
    pub backend: serde_json::Value,
    pub templates_sha256: String,
    pub samples_sha256: String,
    pub samples: usize,
    pub records: usize,
    pub aborts: usize,
}

impl RunManifest {
    /// Label used in report tables, e.g. "ReAct Agent w/ CoT".
    pub fn method(&self) -> String {
        let strategy: jitscan_core::agent::Strategy =
            self.strategy.parse().unwrap_or(jitscan_core::agent::Strategy::VANILLA);
        format!("{} {}", self.detector.display_name(), strategy.display_name())
    }
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub manifest: RunManifest,
    pub records: Vec<PredictionRecord>,
    pub aborts: Vec<AbortEntry>,
}

fn samples_digest(samples: &[LoadedSample]) -> String {
    let mut h = Sha256::new();
    for s in samples {
        h.update(serde_json::to_string(&s.line).expect("serializable sample").as_bytes());
        for body in [&s.f_vul, &s.f_ben] {
            h.update([0]);
            h.update(body.as_bytes());
        }
        h.update([0]);
    }
    hex::encode(h.finalize())
}

enum VersionOutcome {
    Record(PredictionRecord),
    Abort(AbortEntry),
}

struct Context<'a> {
    store: &'a dyn SnapshotStore,
    cache: &'a GraphCache,
    detector: Detector<'a>,
    backends: &'a BackendPool<'a>,
    transcripts: &'a Path,
}

impl Context<'_> {
    fn run_version(&self, sample: &LoadedSample, version: Label) -> Result<VersionOutcome> {
        let line = &sample.line;
        let abort = |reason: String| {
            log::warn!("{} ({version}): {reason}", line.sample_id);
            Ok(VersionOutcome::Abort(AbortEntry {
                sample_id: line.sample_id.clone(),
                version,
                reason,
            }))
        };
        let graph = match self.cache.graph(self.store, sample.snapshot_ref(version)) {
            Ok(g) => g,
            Err(e) => return abort(format!("snapshot {}: {e}", sample.snapshot_ref(version))),
        };
        let expected = normalize_body(sample.body(version));
        let mut named = graph
            .functions()
            .iter()
            .filter(|f| f.file == line.file && f.name == line.function_name)
            .peekable();
        if named.peek().is_none() {
            return abort(format!(
                "function {}:{} not found in snapshot {}",
                line.file,
                line.function_name,
                sample.snapshot_ref(version)
            ));
        }
        let Some(target) = named.find(|f| normalize_body(&f.body) == expected) else {
            return abort(format!(
                "function {}:{} in snapshot {} does not match the sample body",
                line.file,
                line.function_name,
                sample.snapshot_ref(version)
            ));
        };
        let mut backend = self.backends.backend(&version_key(&line.sample_id, version));
        let transcript: Transcript = self.detector.run(&mut *backend, &graph, target);
        let path = self
            .transcripts
            .join(format!("{}.{}.txt", line.sample_id, version.as_str()));
        fs::write(&path, transcript.render()).map_err(io_at(&path))?;
        if let Some(reason) = transcript.abort_reason() {
            return abort(reason.to_string());
        }
        let verdict = transcript.verdict().expect("finished transcripts carry a verdict");
        Ok(VersionOutcome::Record(PredictionRecord {
            sample_id: line.sample_id.clone(),
            version,
            truth: version,
            predicted: verdict.label,
            predicted_cwe: verdict.cwe.as_ref().map(|c| c.as_str().to_string()),
            truth_cwe: line.cwe_id.clone(),
            tool_invocations: transcript.tool_invocations,
            fallback_flag: transcript.fallback().is_some(),
        }))
    }
}

/// Run the configured detector over both versions of every sample and
/// persist the artifact into `config.output`. Per-version failures are
/// logged to the abort list; only configuration problems fail the run.
pub fn run_benchmark(
    set: &SampleSet,
    store: &dyn SnapshotStore,
    prompt_templates: &PromptTemplates,
    backend: &BackendSpec,
    config: &RunConfig,
) -> Result<RunSummary> {
    if config.parallelism == 0 {
        return Err(Error::Config("parallelism must be at least 1".into()));
    }
    let backends = BackendPool::new(backend);
    if config.parallelism > 1 && !backends.allows_parallel() {
        return Err(Error::Config(
            "an unkeyed script is consumed in order and cannot be replayed in parallel; key it per sample or use --parallelism 1".into(),
        ));
    }
    let transcripts = config.output.join("transcripts");
    if transcripts.exists() {
        fs::remove_dir_all(&transcripts).map_err(io_at(&transcripts))?;
    }
    fs::create_dir_all(&transcripts).map_err(io_at(&transcripts))?;

    let cache = GraphCache::new();
    let ctx = Context {
        store,
        cache: &cache,
        detector: Detector::new(config.detector, prompt_templates),
        backends: &backends,
        transcripts: &transcripts,
    };
    let per_sample = |s: &LoadedSample| -> Result<[VersionOutcome; 2]> {
        Ok([ctx.run_version(s, Label::Vul)?, ctx.run_version(s, Label::Ben)?])
    };
    let outcomes: Vec<[VersionOutcome; 2]> = if config.parallelism == 1 {
        set.samples.iter().map(per_sample).collect::<Result<_>>()?
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.parallelism)
            .build()
            .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
        pool.install(|| set.samples.par_iter().map(per_sample).collect::<Result<_>>())?
    };

    let mut records = Vec::new();
    let mut aborts = Vec::new();
    for outcome in outcomes.into_iter().flatten() {
        match outcome {
            VersionOutcome::Record(r) => records.push(r),
            VersionOutcome::Abort(a) => aborts.push(a),
        }
    }
    write_jsonl(&config.output.join("records.jsonl"), &records)?;
    write_jsonl(&config.output.join("aborts.jsonl"), &aborts)?;

    let d = &config.detector;
    let templates_sha256 = templates::digest(prompt_templates);
    let samples_sha256 = samples_digest(&set.samples);
    let hashed = json!({
        "detector": d.kind,
        "strategy": d.strategy.as_str(),
        "k": d.k,
        "pool": d.pool,
        "max_iterations": d.max_iterations,
        "temperature": d.decoding.temperature,
        "backend": backend.descriptor(),
        "templates_sha256": templates_sha256,
        "samples_sha256": samples_sha256,
        "toolkit_version": TOOLKIT_VERSION,
    });
    let config_hash = hex::encode(Sha256::digest(hashed.to_string().as_bytes()));
    let manifest = RunManifest {
        toolkit_version: TOOLKIT_VERSION.into(),
        config_hash,
        detector: d.kind,
        strategy: d.strategy.as_str().into(),
        k: d.k,
        pool: d.pool,
        max_iterations: d.max_iterations,
        temperature: d.decoding.temperature,
        backend: backend.descriptor(),
        templates_sha256,
        samples_sha256,
        samples: set.samples.len(),
        records: records.len(),
        aborts: aborts.len(),
    };
    let run_json = config.output.join("run.json");
    let text = serde_json::to_string_pretty(&manifest).expect("serializable manifest") + "\n";
    fs::write(&run_json, text).map_err(io_at(&run_json))?;
    log::info!(
        "{} samples: {} records, {} aborts",
        set.samples.len(),
        records.len(),
        aborts.len()
    );
    Ok(RunSummary {
        manifest,
        records,
        aborts,
    })
}

/// Metrics of one output directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunEvaluation {
    pub run: String,
    pub method: String,
    pub aborted_versions: usize,
    pub report: MetricsReport,
}

/// Evaluate a run directory. Benchmark records are paired per sample; a
/// `scan.json` written by a scan adds the detection metrics.
pub fn evaluate_run(dir: &Path) -> Result<RunEvaluation> {
    evaluate_run_with(dir, &CweMatch::Exact)
}

/// Like [`evaluate_run`] with a CWE matching rule for benchmark records.
/// Scan CLA was fixed when the scan ran and is always exact.
pub fn evaluate_run_with(dir: &Path, matcher: &CweMatch) -> Result<RunEvaluation> {
    let records_path = dir.join("records.jsonl");
    let scan_path = dir.join("scan.json");
    if !records_path.exists() && !scan_path.exists() {
        return Err(Error::Config(format!(
            "{}: neither records.jsonl nor scan.json found",
            dir.display()
        )));
    }
    let records: Vec<PredictionRecord> = if records_path.exists() {
        read_jsonl(&records_path)?
    } else {
        Vec::new()
    };
    let aborts_path = dir.join("aborts.jsonl");
    let aborted_versions = if aborts_path.exists() {
        read_jsonl::<AbortEntry>(&aborts_path)?.len()
    } else {
        0
    };
    let mut report = evaluate_records_with(&records, matcher);
    let run_path = dir.join("run.json");
    let mut method = dir
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| dir.display().to_string());
    if run_path.exists() {
        let text = fs::read_to_string(&run_path).map_err(io_at(&run_path))?;
        let manifest: RunManifest = serde_json::from_str(&text).map_err(|e| Error::Parse {
            path: run_path.clone(),
            line: e.line(),
            message: e.to_string(),
        })?;
        method = manifest.method();
    }
    if scan_path.exists() {
        let text = fs::read_to_string(&scan_path).map_err(io_at(&scan_path))?;
        let scan: ScanReport = serde_json::from_str(&text).map_err(|e| Error::Parse {
            path: scan_path.clone(),
            line: e.line(),
            message: e.to_string(),
        })?;
        report.scan = scan.metrics;
        if records.is_empty() {
            report.cla = scan.cla;
            report.tir = scan.tir;
            method = scan.method;
        }
    }
    Ok(RunEvaluation {
        run: dir.display().to_string(),
        method,
        aborted_versions,
        report,
    })
}
