//! Labeled directed graphs with adjacency and label indexes.
//!
//! Node identifiers are interned in lexicographic order, so comparing two
//! [`NodeIx`] values (or sequences of them) gives the same answer as comparing
//! the underlying string ids. Downstream tie-breaks rely on this.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use thiserror::Error;

/// Dense index of a node inside one [`LabeledGraph`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeIx(pub u32);

impl NodeIx {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Dense index of a node label inside one [`LabeledGraph`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LabelIx(pub u32);

impl LabelIx {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("empty node id")]
    EmptyNodeId,
    #[error("node {id} has an empty label")]
    EmptyLabel { id: String },
    #[error("node {id} declared with conflicting labels {first:?} and {second:?}")]
    ConflictingLabel {
        id: String,
        first: String,
        second: String,
    },
    #[error("edge {src} -> {dst}: unknown endpoint {missing}")]
    UnknownEndpoint {
        src: String,
        dst: String,
        missing: String,
    },
    #[error("edge {src} -> {dst} has an empty label")]
    EmptyEdgeLabel { src: String, dst: String },
    #[error("edge {src} -> {dst} declared with conflicting labels {first:?} and {second:?}")]
    ConflictingEdgeLabel {
        src: String,
        dst: String,
        first: String,
        second: String,
    },
    #[error("graph exceeds {} nodes", u32::MAX)]
    TooLarge,
}

/// Node record as accepted by [`LabeledGraph::build`]: `(id, label)`.
pub type NodeRecord = (String, String);

/// Edge record as accepted by [`LabeledGraph::build`]: `(src, dst, edge label)`.
pub type EdgeRecord = (String, String, Option<String>);

/// Immutable directed graph with one class label per node.
///
/// Parallel edges are collapsed; self-loops are kept. Edge labels are stored
/// but no matching operation looks at them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledGraph {
    ids: Vec<String>,
    node_labels: Vec<LabelIx>,
    label_names: Vec<String>,
    label_members: Vec<Vec<NodeIx>>,
    out_offsets: Vec<usize>,
    out_targets: Vec<NodeIx>,
    in_offsets: Vec<usize>,
    in_sources: Vec<NodeIx>,
    edge_labels: BTreeMap<(NodeIx, NodeIx), String>,
}

impl Default for LabeledGraph {
    fn default() -> Self {
        Self::build(Vec::new(), Vec::new()).expect("empty graph is valid")
    }
}

impl LabeledGraph {
    /// Builds a graph from node and edge records.
    ///
    /// Records may arrive in any order; the result only depends on the sets
    /// they describe. A node listed twice with the same label is accepted.
    pub fn build<N, E>(nodes: N, edges: E) -> Result<Self, GraphError>
    where
        N: IntoIterator<Item = NodeRecord>,
        E: IntoIterator<Item = EdgeRecord>,
    {
        let mut declared: BTreeMap<String, String> = BTreeMap::new();
        for (id, label) in nodes {
            if id.is_empty() {
                return Err(GraphError::EmptyNodeId);
            }
            if label.is_empty() {
                return Err(GraphError::EmptyLabel { id });
            }
            match declared.get(&id) {
                Some(existing) if *existing != label => {
                    return Err(GraphError::ConflictingLabel {
                        first: existing.clone(),
                        second: label,
                        id,
                    });
                }
                Some(_) => {}
                None => {
                    declared.insert(id, label);
                }
            }
        }
        if declared.len() > u32::MAX as usize {
            return Err(GraphError::TooLarge);
        }

        let label_set: BTreeSet<&str> = declared.values().map(String::as_str).collect();
        let label_names: Vec<String> = label_set.iter().map(|s| s.to_string()).collect();
        let label_lookup: HashMap<&str, LabelIx> = label_set
            .iter()
            .enumerate()
            .map(|(i, s)| (*s, LabelIx(i as u32)))
            .collect();

        let mut ids = Vec::with_capacity(declared.len());
        let mut node_labels = Vec::with_capacity(declared.len());
        let mut label_members = vec![Vec::new(); label_names.len()];
        for (i, (id, label)) in declared.iter().enumerate() {
            let lix = label_lookup[label.as_str()];
            ids.push(id.clone());
            node_labels.push(lix);
            label_members[lix.index()].push(NodeIx(i as u32));
        }
        drop(label_lookup);
        drop(declared);

        let lookup: HashMap<&str, NodeIx> = ids
            .iter()
            .enumerate()
            .map(|(i, s)| (s.as_str(), NodeIx(i as u32)))
            .collect();

        let mut pairs: Vec<(NodeIx, NodeIx)> = Vec::new();
        let mut edge_labels: BTreeMap<(NodeIx, NodeIx), String> = BTreeMap::new();
        for (src, dst, label) in edges {
            let s = lookup.get(src.as_str()).copied();
            let d = lookup.get(dst.as_str()).copied();
            let (s, d) = match (s, d) {
                (Some(s), Some(d)) => (s, d),
                (None, _) => {
                    return Err(GraphError::UnknownEndpoint {
                        missing: src.clone(),
                        src,
                        dst,
                    })
                }
                (_, None) => {
                    return Err(GraphError::UnknownEndpoint {
                        missing: dst.clone(),
                        src,
                        dst,
                    })
                }
            };
            pairs.push((s, d));
            if let Some(label) = label {
                if label.is_empty() {
                    return Err(GraphError::EmptyEdgeLabel { src, dst });
                }
                match edge_labels.get(&(s, d)) {
                    Some(existing) if *existing != label => {
                        return Err(GraphError::ConflictingEdgeLabel {
                            first: existing.clone(),
                            second: label,
                            src,
                            dst,
                        });
                    }
                    Some(_) => {}
                    None => {
                        edge_labels.insert((s, d), label);
                    }
                }
            }
        }
        drop(lookup);

        pairs.sort_unstable();
        pairs.dedup();
        let n = ids.len();
        let (out_offsets, out_targets) = csr(n, pairs.iter().map(|&(s, d)| (s, d)));
        let mut reversed: Vec<(NodeIx, NodeIx)> = pairs.iter().map(|&(s, d)| (d, s)).collect();
        drop(pairs);
        reversed.sort_unstable();
        let (in_offsets, in_sources) = csr(n, reversed.into_iter());

        Ok(Self {
            ids,
            node_labels,
            label_names,
            label_members,
            out_offsets,
            out_targets,
            in_offsets,
            in_sources,
            edge_labels,
        })
    }

    pub fn node_count(&self) -> usize {
        self.ids.len()
    }

    pub fn edge_count(&self) -> usize {
        self.out_targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn nodes(&self) -> impl ExactSizeIterator<Item = NodeIx> + '_ {
        (0..self.ids.len() as u32).map(NodeIx)
    }

    /// Looks up a node by its string id.
    pub fn node_index(&self, id: &str) -> Option<NodeIx> {
        self.ids
            .binary_search_by(|probe| probe.as_str().cmp(id))
            .ok()
            .map(|i| NodeIx(i as u32))
    }

    pub fn node_id(&self, node: NodeIx) -> &str {
        &self.ids[node.index()]
    }

    pub fn label_ix(&self, node: NodeIx) -> LabelIx {
        self.node_labels[node.index()]
    }

    pub fn label(&self, node: NodeIx) -> &str {
        &self.label_names[self.node_labels[node.index()].index()]
    }

    /// All distinct node labels in ascending order.
    pub fn labels(&self) -> &[String] {
        &self.label_names
    }

    pub fn label_name(&self, label: LabelIx) -> &str {
        &self.label_names[label.index()]
    }

    pub fn find_label(&self, label: &str) -> Option<LabelIx> {
        self.label_names
            .binary_search_by(|probe| probe.as_str().cmp(label))
            .ok()
            .map(|i| LabelIx(i as u32))
    }

    /// Nodes carrying `label`, ascending. Empty when the label is unknown.
    pub fn nodes_with_label(&self, label: &str) -> &[NodeIx] {
        match self.find_label(label) {
            Some(l) => &self.label_members[l.index()],
            None => &[],
        }
    }

    pub fn label_members(&self, label: LabelIx) -> &[NodeIx] {
        &self.label_members[label.index()]
    }

    /// Successors of `node`, ascending.
    pub fn successors(&self, node: NodeIx) -> &[NodeIx] {
        let i = node.index();
        &self.out_targets[self.out_offsets[i]..self.out_offsets[i + 1]]
    }

    /// Predecessors of `node`, ascending.
    pub fn predecessors(&self, node: NodeIx) -> &[NodeIx] {
        let i = node.index();
        &self.in_sources[self.in_offsets[i]..self.in_offsets[i + 1]]
    }

    pub fn has_edge(&self, src: NodeIx, dst: NodeIx) -> bool {
        self.successors(src).binary_search(&dst).is_ok()
    }

    /// All edges in `(src, dst)` ascending order.
    pub fn edges(&self) -> impl Iterator<Item = (NodeIx, NodeIx)> + '_ {
        self.nodes()
            .flat_map(move |s| self.successors(s).iter().map(move |&d| (s, d)))
    }

    pub fn edge_label(&self, src: NodeIx, dst: NodeIx) -> Option<&str> {
        self.edge_labels.get(&(src, dst)).map(String::as_str)
    }

    /// Recomputes every index from the node and edge sets and reports whether
    /// the stored indexes match.
    pub fn indexes_consistent(&self) -> bool {
        let n = self.ids.len();
        if self.node_labels.len() != n || self.out_offsets.len() != n + 1 {
            return false;
        }
        let mut members = vec![Vec::new(); self.label_names.len()];
        for v in self.nodes() {
            members[self.label_ix(v).index()].push(v);
        }
        if members != self.label_members {
            return false;
        }
        let mut pairs: Vec<(NodeIx, NodeIx)> = self.edges().collect();
        pairs.sort_unstable();
        pairs.dedup();
        if pairs.len() != self.edge_count() {
            return false;
        }
        let (oo, ot) = csr(n, pairs.iter().copied());
        let mut rev: Vec<(NodeIx, NodeIx)> = pairs.iter().map(|&(s, d)| (d, s)).collect();
        rev.sort_unstable();
        let (io, is) = csr(n, rev.into_iter());
        oo == self.out_offsets && ot == self.out_targets && io == self.in_offsets && is == self.in_sources
    }

    /// Node records in id order, suitable for re-building the graph.
    pub fn node_records(&self) -> impl Iterator<Item = (&str, &str)> + '_ {
        self.nodes().map(move |v| (self.node_id(v), self.label(v)))
    }

    /// Edge records in id order, suitable for re-building the graph.
    pub fn edge_records(&self) -> impl Iterator<Item = (&str, &str, Option<&str>)> + '_ {
        self.edges()
            .map(move |(s, d)| (self.node_id(s), self.node_id(d), self.edge_label(s, d)))
    }
}

/// Compressed adjacency from `(row, col)` pairs sorted by row then col.
fn csr<I>(n: usize, sorted: I) -> (Vec<usize>, Vec<NodeIx>)
where
    I: Iterator<Item = (NodeIx, NodeIx)>,
{
    let mut offsets = vec![0usize; n + 1];
    let mut cols = Vec::new();
    for (row, col) in sorted {
        offsets[row.index() + 1] += 1;
        cols.push(col);
    }
    for i in 0..n {
        offsets[i + 1] += offsets[i];
    }
    (offsets, cols)
}

impl fmt::Display for LabeledGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "LabeledGraph({} nodes, {} edges, {} labels)",
            self.node_count(),
            self.edge_count(),
            self.label_names.len()
        )
    }
}
