use std::collections::BTreeSet;

use crate::graph::{LabeledGraph, NodeIx};
use crate::query::QueryGraph;

/// A set of `(query node, data node)` pairs, stored as one sorted candidate
/// list per query node.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct MatchRelation {
    sim: Vec<Vec<NodeIx>>,
}

impl MatchRelation {
    /// Relation with every candidate set empty.
    pub fn empty(query_nodes: usize) -> Self {
        Self {
            sim: vec![Vec::new(); query_nodes],
        }
    }

    /// Builds a relation from per-query-node lists; lists are sorted and deduplicated.
    pub fn from_sets(mut sim: Vec<Vec<NodeIx>>) -> Self {
        for s in &mut sim {
            s.sort_unstable();
            s.dedup();
        }
        Self { sim }
    }

    pub fn from_pairs<I>(query_nodes: usize, pairs: I) -> Self
    where
        I: IntoIterator<Item = (NodeIx, NodeIx)>,
    {
        let mut sim = vec![Vec::new(); query_nodes];
        for (u, v) in pairs {
            sim[u.index()].push(v);
        }
        Self::from_sets(sim)
    }

    pub fn query_nodes(&self) -> usize {
        self.sim.len()
    }

    /// Candidates of query node `u`, ascending.
    pub fn sim(&self, u: NodeIx) -> &[NodeIx] {
        &self.sim[u.index()]
    }

    pub fn contains(&self, u: NodeIx, v: NodeIx) -> bool {
        self.sim[u.index()].binary_search(&v).is_ok()
    }

    /// Number of pairs.
    pub fn len(&self) -> usize {
        self.sim.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.sim.iter().all(Vec::is_empty)
    }

    pub fn pairs(&self) -> impl Iterator<Item = (NodeIx, NodeIx)> + '_ {
        self.sim
            .iter()
            .enumerate()
            .flat_map(|(u, vs)| vs.iter().map(move |&v| (NodeIx(u as u32), v)))
    }

    /// Set union; both relations must range over the same query.
    pub fn union(&self, other: &MatchRelation) -> MatchRelation {
        assert_eq!(self.sim.len(), other.sim.len(), "relations over different queries");
        let sim = self
            .sim
            .iter()
            .zip(&other.sim)
            .map(|(a, b)| merge_sorted(a, b))
            .collect();
        MatchRelation { sim }
    }

    pub fn is_subset_of(&self, other: &MatchRelation) -> bool {
        self.pairs().all(|(u, v)| other.contains(u, v))
    }

    /// Every pair joins nodes with equal labels.
    pub fn is_label_preserving(&self, q: &QueryGraph, g: &LabeledGraph) -> bool {
        self.pairs()
            .all(|(u, v)| q.graph().label(u) == g.label(v))
    }

    /// Pairs rendered as `(query id, data id)` strings.
    pub fn to_named(&self, q: &QueryGraph, g: &LabeledGraph) -> BTreeSet<(String, String)> {
        self.pairs()
            .map(|(u, v)| (q.graph().node_id(u).to_string(), g.node_id(v).to_string()))
            .collect()
    }
}

fn merge_sorted(a: &[NodeIx], b: &[NodeIx]) -> Vec<NodeIx> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => {
                out.push(a[i]);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push(b[j]);
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                out.push(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}
