//! On-disk sample sets.
//!
//! ```text
//! samples.jsonl          one line per accepted sample
//! bodies/<id>.vul.txt    verbatim vulnerable body
//! bodies/<id>.ben.txt    verbatim benign body
//! rejections.jsonl       one line per rejected manifest entry
//! source.json            where the snapshot locators resolve
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use jitscan_core::history::{IntroProvenance, PairBuildReport, PairwiseSample, Rejection};
use jitscan_core::Label;
use serde::{Deserialize, Serialize};

use crate::error::{io_at, Error, Result};
use crate::git::GitHistory;
use crate::history_dir::DirHistory;
use crate::jsonl::{read_jsonl, write_jsonl};
use crate::store::SnapshotStore;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleLine {
    pub sample_id: String,
    pub cve_id: String,
    pub cwe_id: String,
    pub repo: String,
    pub file: String,
    pub function_name: String,
    pub vul_intro_commit: String,
    pub vul_fix_commit: String,
    pub r_intro: String,
    pub r_fix: String,
    pub intro_provenance: IntroProvenance,
}

impl SampleLine {
    pub fn from_sample(s: &PairwiseSample) -> Self {
        SampleLine {
            sample_id: s.sample_id.clone(),
            cve_id: s.cve_id.clone(),
            cwe_id: s.cwe_id.clone(),
            repo: s.repo.clone(),
            file: s.file.clone(),
            function_name: s.function_name.clone(),
            vul_intro_commit: s.vul_intro.id.clone(),
            vul_fix_commit: s.vul_fix.id.clone(),
            r_intro: s.r_intro().into(),
            r_fix: s.r_fix().into(),
            intro_provenance: s.intro_provenance,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RejectionLine {
    pub index: usize,
    pub cve_id: String,
    pub reason: String,
    pub detail: String,
}

impl From<&Rejection> for RejectionLine {
    fn from(r: &Rejection) -> Self {
        RejectionLine {
            index: r.index,
            cve_id: r.cve_id.clone(),
            reason: r.reason.kind().into(),
            detail: r.reason.to_string(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SourceKind {
    Dir,
    Git,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceSpec {
    pub kind: SourceKind,
    pub root: PathBuf,
}

impl SourceSpec {
    pub fn store(&self) -> Box<dyn SnapshotStore> {
        match self.kind {
            SourceKind::Dir => Box::new(DirHistory::new(&self.root)),
            SourceKind::Git => Box::new(GitHistory::new(&self.root)),
        }
    }
}

/// A sample with its version bodies loaded.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LoadedSample {
    pub line: SampleLine,
    pub f_vul: String,
    pub f_ben: String,
}

impl LoadedSample {
    pub fn body(&self, version: Label) -> &str {
        match version {
            Label::Vul => &self.f_vul,
            Label::Ben => &self.f_ben,
        }
    }

    pub fn snapshot_ref(&self, version: Label) -> &str {
        match version {
            Label::Vul => &self.line.r_intro,
            Label::Ben => &self.line.r_fix,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SampleSet {
    pub dir: PathBuf,
    pub source: Option<SourceSpec>,
    pub samples: Vec<LoadedSample>,
}

fn body_path(dir: &Path, id: &str, version: Label) -> PathBuf {
    dir.join("bodies").join(format!("{id}.{}.txt", version.as_str()))
}

/// Write the accepted samples, their bodies, the rejections and the source
/// description into `dir`.
pub fn write_sample_set(dir: &Path, report: &PairBuildReport, source: &SourceSpec) -> Result<()> {
    let bodies = dir.join("bodies");
    fs::create_dir_all(&bodies).map_err(io_at(&bodies))?;
    let lines: Vec<SampleLine> = report.samples.iter().map(SampleLine::from_sample).collect();
    for s in &report.samples {
        for (version, body) in [(Label::Vul, &s.f_vul.verbatim), (Label::Ben, &s.f_ben.verbatim)] {
            let p = body_path(dir, &s.sample_id, version);
            fs::write(&p, body).map_err(io_at(&p))?;
        }
    }
    write_jsonl(&dir.join("samples.jsonl"), &lines)?;
    let rejections: Vec<RejectionLine> = report.rejections.iter().map(RejectionLine::from).collect();
    write_jsonl(&dir.join("rejections.jsonl"), &rejections)?;
    let source_path = dir.join("source.json");
    let text = serde_json::to_string_pretty(source).expect("serializable source") + "\n";
    fs::write(&source_path, text).map_err(io_at(&source_path))
}

/// Load a sample set written by [`write_sample_set`]. `source.json` is
/// optional; without it the caller has to say where snapshots live.
pub fn read_sample_set(dir: &Path) -> Result<SampleSet> {
    let lines: Vec<SampleLine> = read_jsonl(&dir.join("samples.jsonl"))?;
    let mut seen = std::collections::BTreeSet::new();
    let mut samples = Vec::with_capacity(lines.len());
    for line in lines {
        if !seen.insert(line.sample_id.clone()) {
            return Err(Error::Config(format!("duplicate sample id {}", line.sample_id)));
        }
        let read = |v| {
            let p = body_path(dir, &line.sample_id, v);
            fs::read_to_string(&p).map_err(io_at(&p))
        };
        let (f_vul, f_ben) = (read(Label::Vul)?, read(Label::Ben)?);
        samples.push(LoadedSample { line, f_vul, f_ben });
    }
    let source_path = dir.join("source.json");
    let source = if source_path.exists() {
        let text = fs::read_to_string(&source_path).map_err(io_at(&source_path))?;
        Some(serde_json::from_str(&text).map_err(|e| Error::Parse {
            path: source_path.clone(),
            line: e.line(),
            message: e.to_string(),
        })?)
    } else {
        None
    };
    Ok(SampleSet {
        dir: dir.to_path_buf(),
        source,
        samples,
    })
}
