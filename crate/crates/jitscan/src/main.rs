use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use jitscan_core::agent::{dispatch_tool, Detector, DetectorConfig, DetectorKind, Strategy, Tool, ToolCall};
use jitscan_core::code_graph::{CallGraph, GraphDocument};
use jitscan_core::evaluation::CweMatch;
use jitscan_core::history::{build_pairwise_sample, HistoryProvider, ManifestEntry, PairBuildReport, Rejection};
use jitscan_core::retrieval::{top_k_dependencies, PoolMode, DEFAULT_K};
use rayon::prelude::*;

use jitscan::backends::{BackendPool, BackendSpec};
use jitscan::cache::GraphCache;
use jitscan::gateway::GatewayConfig;
use jitscan::git::GitHistory;
use jitscan::harness::{evaluate_run_with, run_benchmark, RunConfig};
use jitscan::history_dir::DirHistory;
use jitscan::jsonl::{read_jsonl, write_jsonl};
use jitscan::report::{histogram_csv, render_table};
use jitscan::samples::{read_sample_set, write_sample_set, SourceKind, SourceSpec};
use jitscan::scan::{scan_snapshot, KnownVulnerability};
use jitscan::script::Script;
use jitscan::snapshot::load_snapshot;
use jitscan::templates;

#[derive(Parser)]
#[command(
    name = "jitscan",
    version,
    about = "Just-in-time vulnerability detection benchmark toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build or query call graphs.
    #[command(subcommand)]
    Graph(GraphCommand),
    /// Build pairwise samples from a manifest.
    #[command(subcommand)]
    Pair(PairCommand),
    /// Run a detector over a sample set.
    Run(RunArgs),
    /// Compute metrics for one or more output directories.
    Eval(EvalArgs),
    /// Run a detector over every function of a snapshot.
    Scan(ScanArgs),
}

#[derive(Subcommand)]
enum GraphCommand {
    /// Extract the call graph of a snapshot directory.
    Build {
        snapshot: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Query a graph the way the agent tools do.
    Query(QueryArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum QueryKind {
    Callers,
    Callees,
    Def,
    Deps,
}

#[derive(Args)]
struct QueryArgs {
    kind: QueryKind,
    name: String,
    /// Pick the definition containing this line when the name is ambiguous.
    #[arg(long)]
    line: Option<u32>,
    /// Number of dependencies for `deps`.
    #[arg(short, default_value_t = DEFAULT_K)]
    k: usize,
    #[arg(long)]
    per_relation: bool,
    /// Serialized graph; bodies are re-sliced from --snapshot when given.
    #[arg(long)]
    graph: Option<PathBuf>,
    #[arg(long)]
    snapshot: Option<PathBuf>,
}

#[derive(Subcommand)]
enum PairCommand {
    Build {
        #[arg(long)]
        manifest: PathBuf,
        /// Directory-per-commit histories, or git checkouts with --git.
        #[arg(long)]
        history_root: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long)]
        git: bool,
    },
}

#[derive(Args)]
struct DetectorArgs {
    #[arg(long, value_parser = parse_detector)]
    detector: DetectorKind,
    #[arg(long, default_value = "vanilla", value_parser = parse_strategy)]
    strategy: Strategy,
    /// JSONL script of completions to replay.
    #[arg(long, conflicts_with = "gateway")]
    script: Option<PathBuf>,
    /// Use the HTTP gateway from JITSCAN_MODEL_URL / JITSCAN_MODEL_KEY.
    #[arg(long)]
    gateway: bool,
    #[arg(long, default_value_t = jitscan_core::agent::DEFAULT_MAX_ITERATIONS)]
    max_iterations: u32,
    #[arg(short, default_value_t = DEFAULT_K)]
    k: usize,
    /// Rank callers and callees separately, k each.
    #[arg(long)]
    per_relation: bool,
    #[arg(long, default_value_t = 0.0)]
    temperature: f64,
    /// Directory with template overrides.
    #[arg(long)]
    templates: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    detector: DetectorArgs,
    #[arg(long)]
    samples: PathBuf,
    #[arg(short, long)]
    output: PathBuf,
    #[arg(long, default_value_t = 1)]
    parallelism: usize,
    /// Where snapshot locators resolve, overriding the sample set's source.json.
    #[arg(long)]
    snapshot_root: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Table,
    Json,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(required = true)]
    runs: Vec<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    format: Format,
    #[arg(long)]
    histogram_csv: Option<PathBuf>,
    /// JSON object mapping CWE ids to their parents; a prediction then also
    /// counts when it is an ancestor or descendant of the truth.
    #[arg(long)]
    cwe_parents: Option<PathBuf>,
}

#[derive(Args)]
struct ScanArgs {
    snapshot: PathBuf,
    #[arg(long)]
    known: PathBuf,
    #[command(flatten)]
    detector: DetectorArgs,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

fn parse_detector(s: &str) -> Result<DetectorKind, String> {
    s.parse()
}

fn parse_strategy(s: &str) -> Result<Strategy, String> {
    s.parse()
}

impl DetectorArgs {
    fn config(&self) -> DetectorConfig {
        let mut c = DetectorConfig::new(self.detector, self.strategy);
        c.k = self.k;
        c.max_iterations = self.max_iterations;
        c.pool = if self.per_relation {
            PoolMode::PerRelation
        } else {
            PoolMode::Pooled
        };
        c.decoding.temperature = self.temperature;
        c
    }

    fn backend(&self) -> Result<BackendSpec> {
        match (&self.script, self.gateway) {
            (Some(path), false) => {
                let (script, digest) = Script::load(path)?;
                Ok(BackendSpec::Scripted { script, digest })
            }
            (None, true) => Ok(BackendSpec::Gateway(GatewayConfig::from_env()?)),
            _ => bail!("choose a backend with --script <file> or --gateway"),
        }
    }

    fn templates(&self) -> Result<jitscan_core::agent::PromptTemplates> {
        Ok(match &self.templates {
            Some(dir) => templates::load_dir(dir)?,
            None => templates::builtin(),
        })
    }
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn graph_build(snapshot: &Path, output: &Path) -> Result<()> {
    let files = load_snapshot(snapshot)?;
    let graph = GraphCache::new().graph_of(&files);
    for d in graph.diagnostics() {
        log::warn!("{}:{}: {}", d.file, d.line, d.message);
    }
    write_json(output, &graph.to_document())?;
    eprintln!(
        "{} functions, {} call sites, {} diagnostics",
        graph.functions().len(),
        graph.edges().len(),
        graph.diagnostics().len()
    );
    Ok(())
}

fn load_graph(args: &QueryArgs) -> Result<CallGraph> {
    let files = args.snapshot.as_deref().map(load_snapshot).transpose()?;
    match (&args.graph, files) {
        (Some(path), files) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let doc: GraphDocument =
                serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
            Ok(CallGraph::from_document(doc, files.as_deref())?)
        }
        (None, Some(files)) => Ok((*GraphCache::new().graph_of(&files)).clone()),
        (None, None) => bail!("pass --graph and/or --snapshot"),
    }
}

fn graph_query(args: &QueryArgs) -> Result<()> {
    let graph = load_graph(args)?;
    if matches!(args.kind, QueryKind::Def | QueryKind::Deps) && args.snapshot.is_none() {
        bail!("serialized graphs carry no bodies; pass --snapshot as well");
    }
    let tool = match args.kind {
        QueryKind::Callers => Tool::GetCallers,
        QueryKind::Callees => Tool::GetCallees,
        QueryKind::Def => Tool::GetDefinition,
        QueryKind::Deps => {
            let id = graph.resolve(&args.name, args.line)?;
            let pool = if args.per_relation {
                PoolMode::PerRelation
            } else {
                PoolMode::Pooled
            };
            for d in top_k_dependencies(&graph, graph.function(id), args.k, pool) {
                println!(
                    "{:.6}\t{}\t{}\t{}:{}-{}",
                    d.score,
                    d.relation.as_str(),
                    d.function.name,
                    d.function.file,
                    d.function.start_line,
                    d.function.end_line
                );
            }
            return Ok(());
        }
    };
    println!(
        "{}",
        dispatch_tool(&graph, &ToolCall::new(tool, args.name.clone(), args.line))
    );
    Ok(())
}

fn build_pairs<P: HistoryProvider + Sync>(entries: &[ManifestEntry], provider: &P) -> PairBuildReport {
    let results: Vec<_> = entries.par_iter().map(|e| build_pairwise_sample(e, provider)).collect();
    let mut report = PairBuildReport::default();
    for (index, (entry, result)) in entries.iter().zip(results).enumerate() {
        match result {
            Ok(s) => report.samples.push(s),
            Err(reason) => {
                log::warn!("{}: rejected: {reason}", entry.cve_id);
                report.rejections.push(Rejection {
                    index,
                    cve_id: entry.cve_id.clone(),
                    reason,
                })
            }
        }
    }
    report
}

fn pair_build(manifest: &Path, history_root: &Path, output: &Path, git: bool) -> Result<()> {
    let entries: Vec<ManifestEntry> = read_jsonl(manifest)?;
    let root = fs::canonicalize(history_root).with_context(|| format!("history root {}", history_root.display()))?;
    let (report, kind) = if git {
        (build_pairs(&entries, &GitHistory::new(&root)), SourceKind::Git)
    } else {
        (build_pairs(&entries, &DirHistory::new(&root)), SourceKind::Dir)
    };
    write_sample_set(output, &report, &SourceSpec { kind, root })?;
    eprintln!(
        "{} entries: {} samples, {} rejected",
        entries.len(),
        report.samples.len(),
        report.rejections.len()
    );
    Ok(())
}

fn run(args: &RunArgs) -> Result<()> {
    let set = read_sample_set(&args.samples)?;
    let source = match (&args.snapshot_root, &set.source) {
        (Some(root), src) => SourceSpec {
            kind: src.as_ref().map_or(SourceKind::Dir, |s| s.kind),
            root: root.clone(),
        },
        (None, Some(src)) => src.clone(),
        (None, None) => bail!("{} has no source.json; pass --snapshot-root", args.samples.display()),
    };
    let store = source.store();
    let templates = args.detector.templates()?;
    let backend = args.detector.backend()?;
    fs::create_dir_all(&args.output).with_context(|| format!("creating {}", args.output.display()))?;
    let config = RunConfig {
        detector: args.detector.config(),
        parallelism: args.parallelism,
        output: args.output.clone(),
    };
    let summary = run_benchmark(&set, store.as_ref(), &templates, &backend, &config)?;
    eprintln!(
        "{} samples: {} records, {} aborts (config {})",
        summary.manifest.samples,
        summary.manifest.records,
        summary.manifest.aborts,
        &summary.manifest.config_hash[..12]
    );
    Ok(())
}

fn eval(args: &EvalArgs) -> Result<()> {
    let matcher = match &args.cwe_parents {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let parents: BTreeMap<String, String> =
                serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
            CweMatch::Hierarchical(parents)
        }
        None => CweMatch::Exact,
    };
    let runs = args
        .runs
        .iter()
        .map(|dir| evaluate_run_with(dir, &matcher))
        .collect::<Result<Vec<_>, _>>()?;
    match args.format {
        Format::Table => print!("{}", render_table(&runs)),
        Format::Json => println!("{}", serde_json::to_string_pretty(&runs)?),
    }
    if let Some(path) = &args.histogram_csv {
        fs::write(path, histogram_csv(&runs)).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn scan(args: &ScanArgs) -> Result<()> {
    let files = load_snapshot(&args.snapshot)?;
    let graph = GraphCache::new().graph_of(&files);
    let known: Vec<KnownVulnerability> = read_jsonl(&args.known)?;
    let templates = args.detector.templates()?;
    let backend = args.detector.backend()?;
    let pool = BackendPool::new(&backend);
    let detector = Detector::new(args.detector.config(), &templates);
    let (report, transcripts) = scan_snapshot(&graph, &detector, &pool, &known);
    for k in &report.unmatched_known {
        log::warn!(
            "known vulnerability {}:{} is not a function of the snapshot",
            k.file,
            k.function_name
        );
    }
    match &args.output {
        Some(out) => {
            let dir = out.join("transcripts");
            fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
            for (key, t) in &transcripts {
                let name: String = key
                    .chars()
                    .map(|c| {
                        if c.is_ascii_alphanumeric() || matches!(c, '.' | '-' | '_') {
                            c
                        } else {
                            '_'
                        }
                    })
                    .collect();
                fs::write(dir.join(format!("{name}.txt")), t.render())?;
            }
            write_jsonl(&out.join("functions.jsonl"), &report.functions)?;
            write_json(&out.join("scan.json"), &report)?;
        }
        None => println!("{}", serde_json::to_string_pretty(&report)?),
    }
    let r = &report.result;
    eprintln!(
        "{} functions, {} marked, {}/{} known detected",
        r.total_functions, r.marked, r.detected_known, r.total_known
    );
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Graph(GraphCommand::Build { snapshot, output }) => graph_build(snapshot, output),
        Command::Graph(GraphCommand::Query(q)) => graph_query(q),
        Command::Pair(PairCommand::Build {
            manifest,
            history_root,
            output,
            git,
        }) => pair_build(manifest, history_root, output, *git),
        Command::Run(args) => run(args),
        Command::Eval(args) => eval(args),
        Command::Scan(args) => scan(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
