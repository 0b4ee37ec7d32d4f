//! Investigative simulation: relevant sets, innocuous-match pruning and
//! partial-match completion on top of the dual-simulation relation.
//!
//! A relevant set is defined structurally. For an anchor `(u, v)` it holds
//! every pair `(u', v')` such that some directed query walk `u -> .. -> u'` of
//! length `d` in `1..=hop_bound` is mirrored by a directed data walk
//! `v -> .. -> v'` of the same length with equal labels position by position.
//! Membership does not depend on the dual-simulation relation, which is what
//! lets persons with only some indicators surface as partial matches.

use std::collections::hash_map::Entry;
use std::collections::{BTreeMap, HashMap, HashSet};

use rayon::prelude::*;
use thiserror::Error;

use crate::dual_sim::dual_refine;
use crate::graph::{LabelIx, LabeledGraph, NodeIx};
use crate::query::{validate_query, Category, Mode, QueryGraph, ValidationReport};
use crate::relation::MatchRelation;

pub const DEFAULT_HOP_BOUND: usize = 2;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MatchError {
    #[error("query node {0} is not a QF node")]
    NotQueryFocus(String),
    #[error("query node {query} is labeled {query_label:?} but data node {data} is labeled {data_label:?}")]
    LabelMismatch {
        query: String,
        query_label: String,
        data: String,
        data_label: String,
    },
    #[error("hop bound must be at least 1")]
    ZeroHopBound,
    #[error("query is not valid for investigative matching:\n{0}")]
    InvalidQuery(ValidationReport),
}

/// Mirrored query and data walks from the anchor to a member, anchor included.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Witness {
    pub data_path: Vec<NodeIx>,
    pub query_path: Vec<NodeIx>,
}

impl Witness {
    pub fn len(&self) -> usize {
        self.data_path.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `(query node, data node)` pairs along the walk, anchor first.
    pub fn pairs(&self) -> impl Iterator<Item = (NodeIx, NodeIx)> + '_ {
        self.query_path.iter().copied().zip(self.data_path.iter().copied())
    }
}

/// Matched descendants of an anchor `(focus, anchor)` within the hop bound.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelevantSet {
    /// Query-focus node `u`.
    pub focus: NodeIx,
    /// Data node `v` matched to `u`.
    pub anchor: NodeIx,
    /// Members keyed by `(u', v')`, each with its shortest witness; among
    /// equal-length witnesses the smallest data walk, then query walk, wins.
    pub members: BTreeMap<(NodeIx, NodeIx), Witness>,
}

impl RelevantSet {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// At least one member matches an IND or RF query node.
    pub fn has_indicator(&self, q: &QueryGraph) -> bool {
        self.members.keys().any(|&(u, _)| q.category(u).is_indicator())
    }

    pub fn has_red_flag(&self, q: &QueryGraph) -> bool {
        self.members
            .keys()
            .any(|&(u, _)| q.category(u) == Category::RedFlag)
    }
}

/// Precomputed query-to-data label mapping shared by all anchors of a run.
struct Explorer<'a> {
    q: &'a QueryGraph,
    g: &'a LabeledGraph,
    data_label: Vec<Option<LabelIx>>,
    hop_bound: usize,
}

impl<'a> Explorer<'a> {
    fn new(q: &'a QueryGraph, g: &'a LabeledGraph, hop_bound: usize) -> Self {
        let qg = q.graph();
        let data_label = qg.nodes().map(|u| g.find_label(qg.label(u))).collect();
        Self {
            q,
            g,
            data_label,
            hop_bound,
        }
    }

    /// Layered search over the product of query and data walks.
    ///
    /// A state `(u', v')` first reached at depth `d` has shortest mirrored walk
    /// length `d`, and every prefix of such a walk is itself shortest, so the
    /// best witness of a state extends the best witness of one of its
    /// predecessors in the previous layer.
    fn explore(&self, focus: NodeIx, anchor: NodeIx) -> RelevantSet {
        let qg = self.q.graph();
        let mut members = BTreeMap::new();
        let mut seen: HashSet<(NodeIx, NodeIx)> = HashSet::from([(focus, anchor)]);
        let mut frontier: Vec<((NodeIx, NodeIx), Witness)> = vec![(
            (focus, anchor),
            Witness {
                data_path: vec![anchor],
                query_path: vec![focus],
            },
        )];
        for _ in 0..self.hop_bound {
            let mut next: HashMap<(NodeIx, NodeIx), Witness> = HashMap::new();
            for ((qu, dv), witness) in &frontier {
                for &qn in qg.successors(*qu) {
                    let Some(want) = self.data_label[qn.index()] else {
                        continue;
                    };
                    for &dn in self.g.successors(*dv) {
                        if self.g.label_ix(dn) != want || seen.contains(&(qn, dn)) {
                            continue;
                        }
                        match next.entry((qn, dn)) {
                            Entry::Vacant(slot) => {
                                slot.insert(extend(witness, qn, dn));
                            }
                            Entry::Occupied(mut slot) => {
                                let incumbent = slot.get();
                                let depth = witness.data_path.len();
                                let smaller = (&witness.data_path[..], &witness.query_path[..])
                                    < (&incumbent.data_path[..depth], &incumbent.query_path[..depth]);
                                if smaller {
                                    slot.insert(extend(witness, qn, dn));
                                }
                            }
                        }
                    }
                }
            }
            if next.is_empty() {
                break;
            }
            frontier = next.into_iter().collect();
            for (state, witness) in &frontier {
                seen.insert(*state);
                if state.0 != focus {
                    members.insert(*state, witness.clone());
                }
            }
        }
        RelevantSet {
            focus,
            anchor,
            members,
        }
    }
}

fn extend(witness: &Witness, qn: NodeIx, dn: NodeIx) -> Witness {
    let mut data_path = Vec::with_capacity(witness.data_path.len() + 1);
    data_path.extend_from_slice(&witness.data_path);
    data_path.push(dn);
    let mut query_path = Vec::with_capacity(witness.query_path.len() + 1);
    query_path.extend_from_slice(&witness.query_path);
    query_path.push(qn);
    Witness {
        data_path,
        query_path,
    }
}

/// Relevant set of data node `anchor` with respect to query-focus node `focus`.
pub fn relevant_set(
    q: &QueryGraph,
    g: &LabeledGraph,
    focus: NodeIx,
    anchor: NodeIx,
    hop_bound: usize,
) -> Result<RelevantSet, MatchError> {
    if hop_bound == 0 {
        return Err(MatchError::ZeroHopBound);
    }
    let qg = q.graph();
    if q.category(focus) != Category::QueryFocus {
        return Err(MatchError::NotQueryFocus(qg.node_id(focus).to_string()));
    }
    if qg.label(focus) != g.label(anchor) {
        return Err(MatchError::LabelMismatch {
            query: qg.node_id(focus).to_string(),
            query_label: qg.label(focus).to_string(),
            data: g.node_id(anchor).to_string(),
            data_label: g.label(anchor).to_string(),
        });
    }
    Ok(Explorer::new(q, g, hop_bound).explore(focus, anchor))
}

/// Keeps the anchors whose relevant set holds at least one IND or RF member.
///
/// Every decision is taken before anything is removed, so the outcome for one
/// anchor never depends on another anchor or on input order.
pub fn prune_innocuous(q: &QueryGraph, candidates: Vec<RelevantSet>) -> Vec<RelevantSet> {
    let keep: Vec<bool> = candidates.iter().map(|r| r.has_indicator(q)).collect();
    candidates
        .into_iter()
        .zip(keep)
        .filter_map(|(r, k)| k.then_some(r))
        .collect()
}

/// Adds every surviving anchor, its relevant-set members and the pairs along
/// each member's witness walk to `s_d`.
pub fn complete_partial(q: &QueryGraph, survivors: &[RelevantSet], s_d: &MatchRelation) -> MatchRelation {
    let mut added = vec![Vec::new(); q.node_count()];
    for r in survivors {
        added[r.focus.index()].push(r.anchor);
        for witness in r.members.values() {
            for (u, v) in witness.pairs() {
                added[u.index()].push(v);
            }
        }
    }
    s_d.union(&MatchRelation::from_sets(added))
}

/// Result of [`investigative_match`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InvSimOutcome {
    pub hop_bound: usize,
    /// Dual-simulation relation the extension started from.
    pub dual: MatchRelation,
    /// Investigative-simulation relation.
    pub relation: MatchRelation,
    /// Surviving anchors ordered by `(focus, anchor)`.
    pub anchors: Vec<RelevantSet>,
    /// Number of anchors examined before pruning.
    pub candidates: usize,
}

/// Runs the full pipeline: dual simulation, relevant sets for every data node
/// labeled like a QF node, pruning, then completion.
pub fn investigative_match(q: &QueryGraph, g: &LabeledGraph, hop_bound: usize) -> Result<InvSimOutcome, MatchError> {
    if hop_bound == 0 {
        return Err(MatchError::ZeroHopBound);
    }
    let report = validate_query(q, Mode::Investigative);
    if !report.is_ok() {
        return Err(MatchError::InvalidQuery(report));
    }
    let dual = dual_refine(q, g);
    let qg = q.graph();
    let anchors: Vec<(NodeIx, NodeIx)> = q
        .focus_nodes()
        .flat_map(|u| g.nodes_with_label(qg.label(u)).iter().map(move |&v| (u, v)))
        .collect();
    let explorer = Explorer::new(q, g, hop_bound);
    let candidates: Vec<RelevantSet> = anchors
        .par_iter()
        .map(|&(u, v)| explorer.explore(u, v))
        .collect();
    let examined = candidates.len();
    let survivors = prune_innocuous(q, candidates);
    let relation = complete_partial(q, &survivors, &dual);
    Ok(InvSimOutcome {
        hop_bound,
        dual,
        relation,
        anchors: survivors,
        candidates: examined,
    })
}
