//! Lexical ranking of a function's callers and callees by Jaccard
//! similarity of identifier token sets.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::code_graph::{CallGraph, FunctionDef, FunctionId};
use crate::lexer::{self, is_ident_char};

/// Distinct identifier-like tokens of a body, case-sensitive.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TokenSet(BTreeSet<String>);

impl TokenSet {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, token: &str) -> bool {
        self.0.contains(token)
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(String::as_str)
    }
}

impl<S: Into<String>> FromIterator<S> for TokenSet {
    fn from_iter<T: IntoIterator<Item = S>>(iter: T) -> Self {
        TokenSet(iter.into_iter().map(Into::into).collect())
    }
}

/// Split a body on non-identifier characters after masking comments and
/// literals. Keywords are kept.
pub fn tokenize(body: &str) -> TokenSet {
    let masked = lexer::mask_non_code(body);
    masked
        .split(|c: char| !(c.is_ascii() && is_ident_char(c as u8)))
        .filter(|t| !t.is_empty())
        .collect()
}

/// `|a ∩ b| / |a ∪ b|`, with two empty sets counted as identical.
pub fn jaccard(a: &TokenSet, b: &TokenSet) -> f64 {
    let inter = a.0.intersection(&b.0).count();
    let union = a.len() + b.len() - inter;
    if union == 0 {
        1.0
    } else {
        inter as f64 / union as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Relation {
    Caller,
    Callee,
}

impl Relation {
    pub fn as_str(self) -> &'static str {
        match self {
            Relation::Caller => "caller",
            Relation::Callee => "callee",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankedDependency {
    pub function: FunctionDef,
    pub relation: Relation,
    pub score: f64,
}

/// How the `k` slots are shared between callers and callees.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PoolMode {
    /// One ranked list of size `k` over callers and callees together.
    #[default]
    Pooled,
    /// Up to `k` callers followed by up to `k` callees.
    PerRelation,
}

pub const DEFAULT_K: usize = 5;

fn rank_order(a: &RankedDependency, b: &RankedDependency) -> Ordering {
    b.score
        .total_cmp(&a.score)
        .then_with(|| a.function.name.cmp(&b.function.name))
        .then_with(|| a.function.file.cmp(&b.function.file))
        .then_with(|| a.function.start_line.cmp(&b.function.start_line))
}

/// The `k` most similar resolved callers and callees of `target`, ordered by
/// score descending, then name, file and start line ascending. The target
/// itself is never returned. A function that is both caller and callee is
/// ranked once, as a caller.
pub fn top_k_dependencies(graph: &CallGraph, target: &FunctionDef, k: usize, mode: PoolMode) -> Vec<RankedDependency> {
    let Some(target_id) = graph.id_of(target) else {
        return Vec::new();
    };
    let target_tokens = tokenize(&target.body);
    let callers = graph.resolved_callers(target_id);
    let callees: Vec<FunctionId> = graph
        .resolved_callees(target_id)
        .into_iter()
        .filter(|id| !callers.contains(id))
        .collect();
    let score = |ids: &[FunctionId], relation: Relation| -> Vec<RankedDependency> {
        let mut ranked: Vec<RankedDependency> = ids
            .iter()
            .filter(|&&id| id != target_id)
            .map(|&id| {
                let function = graph.function(id).clone();
                let score = jaccard(&target_tokens, &tokenize(&function.body));
                RankedDependency {
                    function,
                    relation,
                    score,
                }
            })
            .collect();
        ranked.sort_by(rank_order);
        ranked
    };
    match mode {
        PoolMode::Pooled => {
            let mut all = score(&callers, Relation::Caller);
            all.extend(score(&callees, Relation::Callee));
            all.sort_by(rank_order);
            all.truncate(k);
            all
        }
        PoolMode::PerRelation => {
            let mut out = score(&callers, Relation::Caller);
            out.truncate(k);
            let mut rest = score(&callees, Relation::Callee);
            rest.truncate(k);
            out.extend(rest);
            out
        }
    }
}
