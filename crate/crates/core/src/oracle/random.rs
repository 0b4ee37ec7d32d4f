use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::graph::{EdgeRecord, LabeledGraph, NodeRecord};
use crate::query::{Category, QueryGraph};

/// Shape of a seeded random `(query, data graph)` instance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InstanceShape {
    pub max_query_nodes: usize,
    pub max_data_nodes: usize,
    /// Size of the shared label alphabet.
    pub labels: usize,
    /// Expected out-degree of data nodes.
    pub data_degree: f64,
    /// Give the query a QF node and at least one IND/RF node.
    pub investigative: bool,
}

impl Default for InstanceShape {
    fn default() -> Self {
        Self {
            max_query_nodes: 6,
            max_data_nodes: 30,
            labels: 3,
            data_degree: 2.0,
            investigative: false,
        }
    }
}

/// Weakly connected random query and random data graph over a small label
/// alphabet. Self-loops, cycles and repeated labels all occur.
pub fn random_instance(seed: u64, shape: InstanceShape) -> (QueryGraph, LabeledGraph) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let label = |i: usize| format!("L{i}");
    let min_q = if shape.investigative { 2 } else { 1 };
    let nq = rng.random_range(min_q..=shape.max_query_nodes.max(min_q));

    let mut q_edges: Vec<(String, String)> = Vec::new();
    for i in 1..nq {
        let j = rng.random_range(0..i);
        let (a, b) = if rng.random_bool(0.7) { (j, i) } else { (i, j) };
        q_edges.push((format!("q{a}"), format!("q{b}")));
    }
    let extra = rng.random_range(0..=nq / 2 + 1);
    for _ in 0..extra {
        let a = rng.random_range(0..nq);
        let b = rng.random_range(0..nq);
        q_edges.push((format!("q{a}"), format!("q{b}")));
    }
    let mut categories: Vec<Category> = (0..nq)
        .map(|i| {
            if i == 0 && shape.investigative {
                return Category::QueryFocus;
            }
            match rng.random_range(0..10) {
                0 => Category::QueryFocus,
                1..=3 => Category::Innocuous,
                4..=6 => Category::Indicator,
                7 => Category::RedFlag,
                _ => Category::NoCategory,
            }
        })
        .collect();
    if shape.investigative && !categories.iter().any(|c| c.is_indicator()) {
        let i = rng.random_range(1..nq);
        categories[i] = if rng.random_bool(0.5) {
            Category::Indicator
        } else {
            Category::RedFlag
        };
    }
    let q_nodes: Vec<(String, String, Category)> = (0..nq)
        .map(|i| (format!("q{i}"), label(rng.random_range(0..shape.labels)), categories[i]))
        .collect();
    let q = QueryGraph::from_records(q_nodes, q_edges).expect("random query is well formed");

    let ng = rng.random_range(1..=shape.max_data_nodes.max(1));
    let g_nodes: Vec<NodeRecord> = (0..ng)
        .map(|i| (format!("v{i:02}"), label(rng.random_range(0..shape.labels))))
        .collect();
    let p = (shape.data_degree / ng as f64).min(1.0);
    let mut g_edges: Vec<EdgeRecord> = Vec::new();
    for a in 0..ng {
        for b in 0..ng {
            if rng.random_bool(p) {
                g_edges.push((format!("v{a:02}"), format!("v{b:02}"), None));
            }
        }
    }
    let g = LabeledGraph::build(g_nodes, g_edges).expect("random graph is well formed");
    (q, g)
}
