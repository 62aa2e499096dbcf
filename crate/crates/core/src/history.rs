//! Pairwise sample construction from commit history.
//!
//! A fixing commit is expected to modify exactly one function. Its body
//! before the fix is the vulnerable version, its body after the fix the
//! benign one. The vulnerability-introducing commit is found by walking the
//! first-parent chain backward from the fix until the commit where the
//! function last changed into its vulnerable body.
//!
//! Function identity across commits is the pair `(file path, function name)`
//! and body equality is equality of [`normalize_body`] output.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::code_graph::{extract_functions, ExtractError, FunctionDef, SourceFile};
use crate::lexer;

/// Strip comments, collapse every whitespace run to one space and trim.
pub fn normalize_body(text: &str) -> String {
    let stripped = lexer::strip_comments(text);
    let mut out = String::with_capacity(stripped.len());
    for word in stripped.split_ascii_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(word);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommitRef {
    pub id: String,
    pub parent: Option<String>,
    /// Locator of the full repository state at this commit.
    pub snapshot_ref: String,
    #[serde(default)]
    pub message: String,
}

/// A commit and its first-parent ancestors, child before parent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HistoryView {
    commits: Vec<CommitRef>,
}

impl HistoryView {
    /// Checks that the chain is nonempty, that each commit's parent is the
    /// next entry, and that no id repeats.
    pub fn new(commits: Vec<CommitRef>) -> Result<Self, HistoryError> {
        if commits.is_empty() {
            return Err(HistoryError::EmptyHistory);
        }
        let mut seen = alloc::collections::BTreeSet::new();
        for (i, c) in commits.iter().enumerate() {
            if !seen.insert(c.id.as_str()) {
                return Err(HistoryError::CyclicHistory(c.id.clone()));
            }
            let expected = commits.get(i + 1).map(|p| p.id.as_str());
            if c.parent.as_deref() != expected {
                return Err(HistoryError::BrokenChain {
                    commit: c.id.clone(),
                    parent: c.parent.clone(),
                });
            }
        }
        Ok(HistoryView { commits })
    }

    pub fn head(&self) -> &CommitRef {
        &self.commits[0]
    }

    pub fn commits(&self) -> &[CommitRef] {
        &self.commits
    }

    /// The view starting at this commit's parent.
    pub fn parent_view(&self) -> Option<HistoryView> {
        (self.commits.len() > 1).then(|| HistoryView {
            commits: self.commits[1..].to_vec(),
        })
    }

    /// Whether `ancestor` appears strictly after `descendant` in the chain.
    pub fn is_ancestor(&self, ancestor: &str, descendant: &str) -> bool {
        let pos = |id: &str| self.commits.iter().position(|c| c.id == id);
        matches!((pos(ancestor), pos(descendant)), (Some(a), Some(d)) if a > d)
    }
}

/// Access to commit chains and snapshots of repositories.
pub trait HistoryProvider {
    /// First-parent chain of `repo` starting at `head`.
    fn history(&self, repo: &str, head: &str) -> Result<HistoryView, HistoryError>;

    /// Every source file of the repository at `commit`.
    fn snapshot(&self, repo: &str, commit: &CommitRef) -> Result<Vec<SourceFile>, HistoryError>;

    /// One file of the repository at `commit`, or `None` if it does not exist.
    fn file(&self, repo: &str, commit: &CommitRef, path: &str) -> Result<Option<SourceFile>, HistoryError> {
        Ok(self.snapshot(repo, commit)?.into_iter().find(|f| f.path == path))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum HistoryError {
    #[error("no function changed between the two snapshots")]
    NoFunctionChanged,
    #[error("more than one function changed: {}", .0.iter().map(|(f, n)| format!("{f}:{n}")).collect::<Vec<_>>().join(", "))]
    MultipleFunctionsChanged(Vec<(String, String)>),
    #[error("{file}:{name} has several definitions in one snapshot")]
    AmbiguousTarget { file: String, name: String },
    #[error("target function {file}:{name} is missing at {commit}")]
    TargetMissingAtHead { commit: String, file: String, name: String },
    #[error("target function at {commit} does not match the vulnerable body")]
    HeadMismatch { commit: String },
    #[error("fixing commit {0} has no parent")]
    NoParent(String),
    #[error("commit {commit} does not list the expected parent (has {parent:?})")]
    BrokenChain { commit: String, parent: Option<String> },
    #[error("commit {0} appears twice in the history")]
    CyclicHistory(String),
    #[error("empty history")]
    EmptyHistory,
    #[error("unknown commit {0}")]
    UnknownCommit(String),
    #[error("{0}")]
    Extract(#[from] ExtractError),
    #[error("history provider: {0}")]
    Provider(String),
}

impl HistoryError {
    /// Short stable identifier for rejection logs.
    pub fn kind(&self) -> &'static str {
        match self {
            HistoryError::NoFunctionChanged => "no_function_changed",
            HistoryError::MultipleFunctionsChanged(_) => "multiple_functions_changed",
            HistoryError::AmbiguousTarget { .. } => "ambiguous_target",
            HistoryError::TargetMissingAtHead { .. } => "target_missing_at_head",
            HistoryError::HeadMismatch { .. } => "head_mismatch",
            HistoryError::NoParent(_) => "no_parent",
            HistoryError::BrokenChain { .. } => "broken_chain",
            HistoryError::CyclicHistory(_) => "cyclic_history",
            HistoryError::EmptyHistory => "empty_history",
            HistoryError::UnknownCommit(_) => "unknown_commit",
            HistoryError::Extract(_) => "unbalanced_braces",
            HistoryError::Provider(_) => "provider_error",
        }
    }
}

type FunctionKey = (String, String);

fn normalized_functions(
    snapshot: &[SourceFile],
    file_hint: Option<&str>,
) -> Result<BTreeMap<FunctionKey, Vec<String>>, HistoryError> {
    let mut out: BTreeMap<FunctionKey, Vec<String>> = BTreeMap::new();
    for file in snapshot {
        if file_hint.is_some_and(|hint| hint != file.path) {
            continue;
        }
        for f in extract_functions(file)? {
            out.entry((f.file, f.name)).or_default().push(normalize_body(&f.body));
        }
    }
    Ok(out)
}

/// The unique `(file, function name)` whose normalized body differs between
/// the snapshots. Functions present on only one side do not count. A
/// `file_hint` restricts the comparison to that file.
pub fn locate_modified_function(
    before: &[SourceFile],
    after: &[SourceFile],
    file_hint: Option<&str>,
) -> Result<(String, String), HistoryError> {
    let old = normalized_functions(before, file_hint)?;
    let new = normalized_functions(after, file_hint)?;
    let mut changed: Vec<FunctionKey> = old
        .iter()
        .filter_map(|(key, bodies)| match new.get(key) {
            Some(other) if other != bodies => Some(key.clone()),
            _ => None,
        })
        .collect();
    match changed.len() {
        0 => Err(HistoryError::NoFunctionChanged),
        1 => {
            let key = changed.pop().unwrap_or_default();
            if old[&key].len() > 1 || new[&key].len() > 1 {
                return Err(HistoryError::AmbiguousTarget {
                    file: key.0,
                    name: key.1,
                });
            }
            Ok(key)
        }
        _ => Err(HistoryError::MultipleFunctionsChanged(changed)),
    }
}

/// First definition of `name` in `file`, by start line.
pub fn find_function(file: &SourceFile, name: &str) -> Result<Option<FunctionDef>, HistoryError> {
    Ok(extract_functions(file)?.into_iter().find(|f| f.name == name))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntroProvenance {
    /// The function changed into the vulnerable body at this commit.
    Modified,
    /// The body already matched at the root commit, which has no parent.
    RootCommit,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntroTrace {
    pub commit: CommitRef,
    pub provenance: IntroProvenance,
}

/// Walk from `history.head()` toward the root and return the most recent
/// commit whose target body equals `f_vul_normalized` while its parent's
/// body differs or is absent.
pub fn trace_vul_intro<P: HistoryProvider + ?Sized>(
    provider: &P,
    repo: &str,
    history: &HistoryView,
    target: (&str, &str),
    f_vul_normalized: &str,
) -> Result<IntroTrace, HistoryError> {
    let (path, name) = target;
    let body_at = |commit: &CommitRef| -> Result<Option<String>, HistoryError> {
        Ok(match provider.file(repo, commit, path)? {
            Some(file) => find_function(&file, name)?.map(|f| normalize_body(&f.body)),
            None => None,
        })
    };
    let commits = history.commits();
    match body_at(&commits[0])? {
        None => {
            return Err(HistoryError::TargetMissingAtHead {
                commit: commits[0].id.clone(),
                file: path.into(),
                name: name.into(),
            })
        }
        Some(body) if body != f_vul_normalized => {
            return Err(HistoryError::HeadMismatch {
                commit: commits[0].id.clone(),
            })
        }
        Some(_) => {}
    }
    // every commit visited so far carries the vulnerable body
    for (i, commit) in commits.iter().enumerate() {
        let Some(parent) = commits.get(i + 1) else {
            return Ok(IntroTrace {
                commit: commit.clone(),
                provenance: IntroProvenance::RootCommit,
            });
        };
        if body_at(parent)?.as_deref() != Some(f_vul_normalized) {
            return Ok(IntroTrace {
                commit: commit.clone(),
                provenance: IntroProvenance::Modified,
            });
        }
    }
    unreachable!("history views are nonempty")
}

/// One CVE entry of the input manifest.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub cve_id: String,
    pub cwe_id: String,
    pub repo: String,
    pub vul_fix_commit: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub file_hint: Option<String>,
}

/// A function body in verbatim and normalized form.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BodyPair {
    pub verbatim: String,
    pub normalized: String,
}

impl BodyPair {
    pub fn new(verbatim: impl Into<String>) -> Self {
        let verbatim = verbatim.into();
        let normalized = normalize_body(&verbatim);
        BodyPair { verbatim, normalized }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairwiseSample {
    pub sample_id: String,
    pub cve_id: String,
    pub cwe_id: String,
    pub repo: String,
    pub file: String,
    pub function_name: String,
    pub f_vul: BodyPair,
    pub f_ben: BodyPair,
    pub vul_intro: CommitRef,
    pub vul_fix: CommitRef,
    pub intro_provenance: IntroProvenance,
}

impl PairwiseSample {
    pub fn r_intro(&self) -> &str {
        &self.vul_intro.snapshot_ref
    }

    pub fn r_fix(&self) -> &str {
        &self.vul_fix.snapshot_ref
    }
}

/// Identifier of the sample built from a manifest entry.
pub fn sample_id(entry: &ManifestEntry) -> String {
    let short: String = entry.vul_fix_commit.chars().take(12).collect();
    let mut id = format!("{}_{}", entry.cve_id, short);
    id.retain(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'));
    id
}

pub fn build_pairwise_sample<P: HistoryProvider + ?Sized>(
    entry: &ManifestEntry,
    provider: &P,
) -> Result<PairwiseSample, HistoryError> {
    let history = provider.history(&entry.repo, &entry.vul_fix_commit)?;
    let fix = history.head().clone();
    let before_view = history
        .parent_view()
        .ok_or_else(|| HistoryError::NoParent(fix.id.clone()))?;
    let parent = before_view.head().clone();
    let before = provider.snapshot(&entry.repo, &parent)?;
    let after = provider.snapshot(&entry.repo, &fix)?;
    let (file, name) = locate_modified_function(&before, &after, entry.file_hint.as_deref())?;
    let body_in = |snapshot: &[SourceFile], commit: &CommitRef| -> Result<FunctionDef, HistoryError> {
        let missing = || HistoryError::TargetMissingAtHead {
            commit: commit.id.clone(),
            file: file.clone(),
            name: name.clone(),
        };
        let source = snapshot.iter().find(|f| f.path == file).ok_or_else(missing)?;
        find_function(source, &name)?.ok_or_else(missing)
    };
    let f_vul = BodyPair::new(body_in(&before, &parent)?.body);
    let f_ben = BodyPair::new(body_in(&after, &fix)?.body);
    let intro = trace_vul_intro(provider, &entry.repo, &before_view, (&file, &name), &f_vul.normalized)?;
    Ok(PairwiseSample {
        sample_id: sample_id(entry),
        cve_id: entry.cve_id.clone(),
        cwe_id: entry.cwe_id.clone(),
        repo: entry.repo.clone(),
        file,
        function_name: name,
        f_vul,
        f_ben,
        vul_intro: intro.commit,
        vul_fix: fix,
        intro_provenance: intro.provenance,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rejection {
    /// Position of the entry in the manifest.
    pub index: usize,
    pub cve_id: String,
    pub reason: HistoryError,
}

#[derive(Debug, Clone, Default)]
pub struct PairBuildReport {
    pub samples: Vec<PairwiseSample>,
    pub rejections: Vec<Rejection>,
}

/// Build samples for every manifest entry. Each entry ends up either in
/// `samples` or in `rejections`, never both.
pub fn build_pairwise_samples<P: HistoryProvider + ?Sized>(entries: &[ManifestEntry], provider: &P) -> PairBuildReport {
    let mut report = PairBuildReport::default();
    for (index, entry) in entries.iter().enumerate() {
        match build_pairwise_sample(entry, provider) {
            Ok(sample) => report.samples.push(sample),
            Err(reason) => report.rejections.push(Rejection {
                index,
                cve_id: entry.cve_id.clone(),
                reason,
            }),
        }
    }
    report
}

/// In-memory provider, mostly for tests and synthetic histories. Each
/// repository is a list of commits, newest first, with full file sets.
#[derive(Debug, Clone, Default)]
pub struct MemoryHistory {
    repos: BTreeMap<String, Vec<(CommitRef, Vec<SourceFile>)>>,
}

impl MemoryHistory {
    pub fn new() -> Self {
        Self::default()
    }

    /// Append `commit` as the child of the previously pushed commit.
    pub fn push(&mut self, repo: &str, id: &str, files: Vec<SourceFile>) {
        let chain = self.repos.entry(repo.to_string()).or_default();
        let parent = chain.last().map(|(c, _)| c.id.clone());
        chain.push((
            CommitRef {
                id: id.into(),
                parent,
                snapshot_ref: format!("{repo}@{id}"),
                message: String::new(),
            },
            files,
        ));
    }
}

impl HistoryProvider for MemoryHistory {
    fn history(&self, repo: &str, head: &str) -> Result<HistoryView, HistoryError> {
        let chain = self
            .repos
            .get(repo)
            .ok_or_else(|| HistoryError::Provider(format!("unknown repository {repo}")))?;
        let pos = chain
            .iter()
            .position(|(c, _)| c.id == head)
            .ok_or_else(|| HistoryError::UnknownCommit(head.into()))?;
        HistoryView::new(chain[..=pos].iter().rev().map(|(c, _)| c.clone()).collect())
    }

    fn snapshot(&self, repo: &str, commit: &CommitRef) -> Result<Vec<SourceFile>, HistoryError> {
        self.repos
            .get(repo)
            .and_then(|chain| chain.iter().find(|(c, _)| c.id == commit.id))
            .map(|(_, files)| files.clone())
            .ok_or_else(|| HistoryError::UnknownCommit(commit.id.clone()))
    }
}
