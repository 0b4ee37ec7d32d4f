//! Brute-force reference implementations and a synthetic graph generator.
//!
//! Nothing here calls into the matching engine. The oracles work on string ids
//! over their own adjacency maps so that agreement with the engine is
//! evidence rather than tautology.

mod generate;
mod random;

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rand::seq::IndexedRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::graph::LabeledGraph;
use crate::inv_sim::RelevantSet;
use crate::query::{Category, QueryGraph};

pub use generate::{
    generate_graph, FocusSpec, GenError, GenSpec, GroundTruth, LayerSpec, LayeredSpec, LinkSpec, NamedNode, PlantedSpec,
    SchemaElement, TruthAnchor,
};
pub use random::{random_instance, InstanceShape};

pub const MAX_QUERY_NODES: usize = 8;
pub const MAX_DATA_NODES: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("oracle guard: query has {found} nodes, limit is {limit}")]
    QueryTooLarge { found: usize, limit: usize },
    #[error("oracle guard: data graph has {found} nodes, limit is {limit}")]
    GraphTooLarge { found: usize, limit: usize },
}

/// `(query id, data id)` pairs.
pub type NamedRelation = BTreeSet<(String, String)>;

/// String-keyed copy of a graph with its own adjacency.
struct Plain {
    label: HashMap<String, String>,
    out: BTreeMap<String, Vec<String>>,
    edges: Vec<(String, String)>,
}

impl Plain {
    fn of(g: &LabeledGraph) -> Self {
        let mut label = HashMap::new();
        let mut out: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for (id, l) in g.node_records() {
            label.insert(id.to_string(), l.to_string());
            out.insert(id.to_string(), Vec::new());
        }
        let mut edges = Vec::new();
        for (s, d, _) in g.edge_records() {
            out.get_mut(s).expect("edge source is a node").push(d.to_string());
            edges.push((s.to_string(), d.to_string()));
        }
        Self { label, out, edges }
    }

    fn ids(&self) -> impl Iterator<Item = &String> {
        self.out.keys()
    }

    /// Every walk of exactly `len` edges starting at `from`, as node sequences.
    fn walks(&self, from: &str, len: usize) -> Vec<Vec<String>> {
        let mut walks = vec![vec![from.to_string()]];
        for _ in 0..len {
            let mut longer = Vec::new();
            for w in &walks {
                let last = w.last().expect("walk is non-empty");
                for next in &self.out[last] {
                    let mut x = w.clone();
                    x.push(next.clone());
                    longer.push(x);
                }
            }
            walks = longer;
        }
        walks
    }
}

fn guard(q: &QueryGraph, g: Option<&LabeledGraph>) -> Result<(), OracleError> {
    if q.node_count() > MAX_QUERY_NODES {
        return Err(OracleError::QueryTooLarge {
            found: q.node_count(),
            limit: MAX_QUERY_NODES,
        });
    }
    if let Some(g) = g {
        if g.node_count() > MAX_DATA_NODES {
            return Err(OracleError::GraphTooLarge {
                found: g.node_count(),
                limit: MAX_DATA_NODES,
            });
        }
    }
    Ok(())
}

/// Dual simulation by deleting one violating pair at a time.
pub fn naive_dual_sim(q: &QueryGraph, g: &LabeledGraph) -> Result<NamedRelation, OracleError> {
    naive_dual_sim_seeded(q, g, 0)
}

/// As [`naive_dual_sim`], picking which violating pair to delete from a
/// seeded random order. The result does not depend on the seed.
pub fn naive_dual_sim_seeded(q: &QueryGraph, g: &LabeledGraph, seed: u64) -> Result<NamedRelation, OracleError> {
    guard(q, Some(g))?;
    let qp = Plain::of(q.graph());
    let gp = Plain::of(g);
    let mut rel: NamedRelation = BTreeSet::new();
    for u in qp.ids() {
        for v in gp.ids() {
            if qp.label[u] == gp.label[v] {
                rel.insert((u.clone(), v.clone()));
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let violating: Vec<(String, String)> = rel
            .iter()
            .filter(|(u, v)| {
                let child_fail = qp.edges.iter().filter(|(a, _)| a == u).any(|(_, uc)| {
                    !gp.edges
                        .iter()
                        .any(|(a, vc)| a == v && rel.contains(&(uc.clone(), vc.clone())))
                });
                let parent_fail = qp.edges.iter().filter(|(_, b)| b == u).any(|(up, _)| {
                    !gp.edges
                        .iter()
                        .any(|(vp, b)| b == v && rel.contains(&(up.clone(), vp.clone())))
                });
                child_fail || parent_fail
            })
            .cloned()
            .collect();
        match violating.choose(&mut rng) {
            Some(pair) => {
                rel.remove(pair);
            }
            None => break,
        }
    }
    let all_matched = qp.ids().all(|u| rel.iter().any(|(x, _)| x == u));
    if !all_matched {
        rel.clear();
    }
    Ok(rel)
}

/// Shortest mirrored walks from an anchor to one relevant-set member.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleMember {
    pub query_path: Vec<String>,
    pub data_path: Vec<String>,
}

/// An anchor with its relevant set, in string ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleSurvivor {
    pub focus: String,
    pub anchor: String,
    pub members: BTreeMap<(String, String), OracleMember>,
    pub has_red_flag: bool,
}

impl OracleSurvivor {
    pub fn relevant_size(&self) -> usize {
        self.members.len()
    }

    /// Converts an engine relevant set into the oracle's representation.
    pub fn from_engine(q: &QueryGraph, g: &LabeledGraph, r: &RelevantSet) -> Self {
        let qg = q.graph();
        let members = r
            .members
            .iter()
            .map(|(&(u, v), w)| {
                (
                    (qg.node_id(u).to_string(), g.node_id(v).to_string()),
                    OracleMember {
                        query_path: w.query_path.iter().map(|&x| qg.node_id(x).to_string()).collect(),
                        data_path: w.data_path.iter().map(|&x| g.node_id(x).to_string()).collect(),
                    },
                )
            })
            .collect();
        Self {
            focus: qg.node_id(r.focus).to_string(),
            anchor: g.node_id(r.anchor).to_string(),
            members,
            has_red_flag: r.has_red_flag(q),
        }
    }
}

/// Exhaustive relevant-set search within the oracle size guard.
pub fn exhaustive_partial_search(q: &QueryGraph, g: &LabeledGraph, hop_bound: usize) -> Result<Vec<OracleSurvivor>, OracleError> {
    guard(q, Some(g))?;
    Ok(exhaustive(q, g, hop_bound))
}

/// Exhaustive relevant-set search with no data-graph size guard.
pub fn exhaustive_partial_search_unbounded(
    q: &QueryGraph,
    g: &LabeledGraph,
    hop_bound: usize,
) -> Result<Vec<OracleSurvivor>, OracleError> {
    guard(q, None)?;
    Ok(exhaustive(q, g, hop_bound))
}

/// For every QF-labeled data node: enumerate every data walk and every query
/// walk of each length up to the hop bound, keep label-mirrored pairs, and
/// apply the survive-iff-IND/RF rule.
fn exhaustive(q: &QueryGraph, g: &LabeledGraph, hop_bound: usize) -> Vec<OracleSurvivor> {
    let qp = Plain::of(q.graph());
    let gp = Plain::of(g);
    let category: HashMap<String, Category> = q
        .graph()
        .nodes()
        .map(|u| (q.graph().node_id(u).to_string(), q.category(u)))
        .collect();
    let mut focus: Vec<&String> = qp.ids().filter(|u| category[*u] == Category::QueryFocus).collect();
    focus.sort();

    let mut out = Vec::new();
    for u in focus {
        for v in gp.ids().filter(|v| gp.label[*v] == qp.label[u]) {
            let mut members: BTreeMap<(String, String), OracleMember> = BTreeMap::new();
            for len in 1..=hop_bound {
                let qwalks = qp.walks(u, len);
                let dwalks = gp.walks(v, len);
                for qw in &qwalks {
                    let end_q = qw.last().expect("non-empty");
                    if end_q == u {
                        continue;
                    }
                    for dw in &dwalks {
                        let mirrored = qw.iter().zip(dw).all(|(a, b)| qp.label[a] == gp.label[b]);
                        if !mirrored {
                            continue;
                        }
                        let key = (end_q.clone(), dw.last().expect("non-empty").clone());
                        let better = match members.get(&key) {
                            None => true,
                            Some(m) => {
                                (m.data_path.len(), &m.data_path, &m.query_path) > (dw.len(), dw, qw)
                            }
                        };
                        if better {
                            members.insert(
                                key,
                                OracleMember {
                                    query_path: qw.clone(),
                                    data_path: dw.clone(),
                                },
                            );
                        }
                    }
                }
            }
            let survives = members.keys().any(|(x, _)| {
                matches!(category[x], Category::Indicator | Category::RedFlag)
            });
            if survives {
                let has_red_flag = members.keys().any(|(x, _)| category[x] == Category::RedFlag);
                out.push(OracleSurvivor {
                    focus: u.clone(),
                    anchor: v.clone(),
                    members,
                    has_red_flag,
                });
            }
        }
    }
    out
}

/// Ranks oracle survivors: red flag first, then relevant-set size descending,
/// then anchor id ascending. Returns `(anchor, relevant size)` for the top `k`.
pub fn oracle_top_k(survivors: &[OracleSurvivor], k: usize) -> Vec<(String, usize)> {
    let mut keyed: Vec<(bool, usize, &str, &str)> = survivors
        .iter()
        .map(|s| (s.has_red_flag, s.relevant_size(), s.anchor.as_str(), s.focus.as_str()))
        .collect();
    keyed.sort_by(|a, b| b.0.cmp(&a.0).then(b.1.cmp(&a.1)).then(a.2.cmp(b.2)).then(a.3.cmp(b.3)));
    keyed
        .into_iter()
        .take(k)
        .map(|(_, size, anchor, _)| (anchor.to_string(), size))
        .collect()
}
