//! Per-person results, top-k ranking and report serialization.

use std::cmp::Ordering;
use std::collections::{BTreeSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{LabeledGraph, NodeIx};
use crate::inv_sim::{InvSimOutcome, RelevantSet};
use crate::query::{Category, QueryGraph};

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("top-k must be at least 1")]
    ZeroK,
    #[error("unknown report format {0:?}; expected json or tsv")]
    UnknownFormat(String),
    #[error("unknown rank key {0:?}; expected size or jaccard")]
    UnknownRankKey(String),
    #[error("report line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Anchor {
    pub query: String,
    pub data: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Subgraph {
    pub nodes: Vec<String>,
    pub edges: Vec<(String, String)>,
}

/// One ranked result: a query-focus match and what it brings with it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PersonMatch {
    pub anchor: Anchor,
    /// Anchor is in the dual-simulation relation and its relevant set covers
    /// every query node within the hop bound.
    pub full_match: bool,
    pub has_red_flag: bool,
    pub relevant_size: usize,
    pub jaccard: f64,
    pub matched_query_nodes: Vec<String>,
    /// Nodes and edges of all witness walks.
    pub subgraph: Subgraph,
}

/// Exact node-coverage Jaccard ratio.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Jaccard {
    pub intersection: usize,
    pub union: usize,
}

impl Jaccard {
    pub fn value(self) -> f64 {
        if self.union == 0 {
            0.0
        } else {
            self.intersection as f64 / self.union as f64
        }
    }
}

impl PartialOrd for Jaccard {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Jaccard {
    fn cmp(&self, other: &Self) -> Ordering {
        // a/b vs c/d with 0/0 treated as 0
        let lhs = self.intersection as u128 * other.union.max(1) as u128;
        let rhs = other.intersection as u128 * self.union.max(1) as u128;
        lhs.cmp(&rhs)
    }
}

/// `|matched ∩ V_Q| / |matched ∪ V_Q|`.
pub fn jaccard_similarity<S: AsRef<str>>(matched_query_nodes: &[S], q: &QueryGraph) -> Jaccard {
    let matched: BTreeSet<&str> = matched_query_nodes.iter().map(AsRef::as_ref).collect();
    if matched.is_empty() {
        return Jaccard {
            intersection: 0,
            union: q.node_count(),
        };
    }
    let intersection = matched
        .iter()
        .filter(|id| q.graph().node_index(id).is_some())
        .count();
    Jaccard {
        intersection,
        union: matched.len() + q.node_count() - intersection,
    }
}

/// Query nodes other than `focus` reachable from it in `1..=hop_bound` steps.
fn reachable_within(q: &QueryGraph, focus: NodeIx, hop_bound: usize) -> BTreeSet<NodeIx> {
    let qg = q.graph();
    let mut depth = vec![usize::MAX; qg.node_count()];
    depth[focus.index()] = 0;
    let mut queue = VecDeque::from([focus]);
    let mut out = BTreeSet::new();
    while let Some(u) = queue.pop_front() {
        let d = depth[u.index()];
        if d == hop_bound {
            continue;
        }
        for &w in qg.successors(u) {
            if depth[w.index()] == usize::MAX {
                depth[w.index()] = d + 1;
                out.insert(w);
                queue.push_back(w);
            }
        }
    }
    out.remove(&focus);
    out
}

fn person_match(q: &QueryGraph, g: &LabeledGraph, outcome: &InvSimOutcome, r: &RelevantSet) -> PersonMatch {
    let qg = q.graph();
    let in_relation: Vec<(&(NodeIx, NodeIx), _)> = r
        .members
        .iter()
        .filter(|(&(u, v), _)| outcome.relation.contains(u, v))
        .collect();
    let has_red_flag = in_relation
        .iter()
        .any(|(&(u, _), _)| q.category(u) == Category::RedFlag);
    let mut matched: BTreeSet<NodeIx> = in_relation.iter().map(|(&(u, _), _)| u).collect();
    let covers = reachable_within(q, r.focus, outcome.hop_bound).is_subset(&matched);
    matched.insert(r.focus);
    let matched_query_nodes: Vec<String> = matched.iter().map(|&u| qg.node_id(u).to_string()).collect();

    let mut nodes = BTreeSet::from([r.anchor]);
    let mut edges = BTreeSet::new();
    for (_, witness) in &in_relation {
        nodes.extend(witness.data_path.iter().copied());
        edges.extend(witness.data_path.windows(2).map(|w| (w[0], w[1])));
    }
    let subgraph = Subgraph {
        nodes: nodes.iter().map(|&v| g.node_id(v).to_string()).collect(),
        edges: edges
            .iter()
            .map(|&(s, d)| (g.node_id(s).to_string(), g.node_id(d).to_string()))
            .collect(),
    };
    let jaccard = jaccard_similarity(&matched_query_nodes, q).value();
    PersonMatch {
        anchor: Anchor {
            query: qg.node_id(r.focus).to_string(),
            data: g.node_id(r.anchor).to_string(),
        },
        full_match: covers && outcome.dual.contains(r.focus, r.anchor),
        has_red_flag,
        relevant_size: in_relation.len(),
        jaccard,
        matched_query_nodes,
        subgraph,
    }
}

/// One [`PersonMatch`] per surviving anchor, in anchor order.
pub fn group_results(q: &QueryGraph, g: &LabeledGraph, outcome: &InvSimOutcome) -> Vec<PersonMatch> {
    outcome
        .anchors
        .iter()
        .map(|r| person_match(q, g, outcome, r))
        .collect()
}

/// Secondary rank key applied after red-flag presence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RankKey {
    #[default]
    RelevantSize,
    Jaccard,
}

impl FromStr for RankKey {
    type Err = ReportError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "size" => Ok(RankKey::RelevantSize),
            "jaccard" => Ok(RankKey::Jaccard),
            other => Err(ReportError::UnknownRankKey(other.to_string())),
        }
    }
}

/// Red flags first, then the secondary key descending, then anchor ascending.
pub fn rank_order(a: &PersonMatch, b: &PersonMatch, key: RankKey) -> Ordering {
    let secondary = match key {
        RankKey::RelevantSize => b.relevant_size.cmp(&a.relevant_size),
        RankKey::Jaccard => b.jaccard.total_cmp(&a.jaccard),
    };
    b.has_red_flag
        .cmp(&a.has_red_flag)
        .then(secondary)
        .then_with(|| a.anchor.data.cmp(&b.anchor.data))
        .then_with(|| a.anchor.query.cmp(&b.anchor.query))
}

pub fn rank_top_k(mut matches: Vec<PersonMatch>, k: usize, key: RankKey) -> Result<Vec<PersonMatch>, ReportError> {
    if k == 0 {
        return Err(ReportError::ZeroK);
    }
    matches.sort_by(|a, b| rank_order(a, b, key));
    matches.truncate(k);
    Ok(matches)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReportFormat {
    #[default]
    Json,
    Tsv,
}

impl FromStr for ReportFormat {
    type Err = ReportError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "json" => Ok(ReportFormat::Json),
            "tsv" => Ok(ReportFormat::Tsv),
            other => Err(ReportError::UnknownFormat(other.to_string())),
        }
    }
}

impl fmt::Display for ReportFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ReportFormat::Json => "json",
            ReportFormat::Tsv => "tsv",
        })
    }
}

pub const TSV_HEADER: &str =
    "anchor\tfull_match\thas_red_flag\trelevant_size\tjaccard\tmatched_query_nodes\tanchor_query";

pub fn serialize_report(ranked: &[PersonMatch], format: ReportFormat) -> Result<Vec<u8>, ReportError> {
    match format {
        ReportFormat::Json => {
            let mut out = serde_json::to_vec_pretty(ranked)?;
            out.push(b'\n');
            Ok(out)
        }
        ReportFormat::Tsv => {
            let mut out = String::from(TSV_HEADER);
            out.push('\n');
            for m in ranked {
                out.push_str(&format!(
                    "{}\t{}\t{}\t{}\t{:?}\t{}\t{}\n",
                    m.anchor.data,
                    m.full_match,
                    m.has_red_flag,
                    m.relevant_size,
                    m.jaccard,
                    m.matched_query_nodes.join(","),
                    m.anchor.query,
                ));
            }
            Ok(out.into_bytes())
        }
    }
}

pub fn parse_json_report(text: &str) -> Result<Vec<PersonMatch>, ReportError> {
    Ok(serde_json::from_str(text)?)
}

/// Scalar columns of one TSV report row.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub anchor: Anchor,
    pub full_match: bool,
    pub has_red_flag: bool,
    pub relevant_size: usize,
    pub jaccard: f64,
    pub matched_query_nodes: Vec<String>,
}

impl From<&PersonMatch> for ReportRow {
    fn from(m: &PersonMatch) -> Self {
        Self {
            anchor: m.anchor.clone(),
            full_match: m.full_match,
            has_red_flag: m.has_red_flag,
            relevant_size: m.relevant_size,
            jaccard: m.jaccard,
            matched_query_nodes: m.matched_query_nodes.clone(),
        }
    }
}

pub fn parse_tsv_report(text: &str) -> Result<Vec<ReportRow>, ReportError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header == TSV_HEADER => {}
        _ => {
            return Err(ReportError::Parse {
                line: 1,
                message: "missing report header".into(),
            })
        }
    }
    lines
        .filter(|(_, l)| !l.is_empty())
        .map(|(i, line)| {
            let line_no = i + 1;
            let bad = |message: String| ReportError::Parse { line: line_no, message };
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() != 7 {
                return Err(bad(format!("expected 7 columns, found {}", cols.len())));
            }
            let flag = |s: &str| s.parse::<bool>().map_err(|e| bad(format!("{s:?}: {e}")));
            Ok(ReportRow {
                anchor: Anchor {
                    query: cols[6].to_string(),
                    data: cols[0].to_string(),
                },
                full_match: flag(cols[1])?,
                has_red_flag: flag(cols[2])?,
                relevant_size: cols[3].parse().map_err(|e| bad(format!("{:?}: {e}", cols[3])))?,
                jaccard: cols[4].parse().map_err(|e| bad(format!("{:?}: {e}", cols[4])))?,
                matched_query_nodes: if cols[5].is_empty() {
                    Vec::new()
                } else {
                    cols[5].split(',').map(str::to_string).collect()
                },
            })
        })
        .collect()
}
