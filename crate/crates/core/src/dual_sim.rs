//! Maximum dual-simulation relation by candidate refinement.

use std::collections::VecDeque;

use rayon::prelude::*;

use crate::graph::{LabeledGraph, NodeIx};
use crate::query::QueryGraph;
use crate::relation::MatchRelation;

/// Candidate lists above this size are filtered in parallel.
const PAR_FILTER_THRESHOLD: usize = 4096;

/// Every data node whose label equals the query node's label.
pub fn initial_candidates(q: &QueryGraph, g: &LabeledGraph) -> MatchRelation {
    let qg = q.graph();
    let sim = qg
        .nodes()
        .map(|u| g.nodes_with_label(qg.label(u)).to_vec())
        .collect();
    MatchRelation::from_sets(sim)
}

/// Computes the maximum dual-simulation relation of `q` in `g`.
///
/// Starting from [`initial_candidates`], a data node `v` is dropped from
/// `sim(u)` when some query edge `u -> u'` has no data edge `v -> v'` with
/// `v'` in `sim(u')`, or some query edge `u' -> u` has no data edge `v' -> v`
/// with `v'` in `sim(u')`. If any candidate set empties the whole relation is
/// empty.
pub fn dual_refine(q: &QueryGraph, g: &LabeledGraph) -> MatchRelation {
    let qg = q.graph();
    let nq = qg.node_count();
    let initial = initial_candidates(q, g);
    let mut sim: Vec<Vec<NodeIx>> = qg.nodes().map(|u| initial.sim(u).to_vec()).collect();
    if sim.iter().any(Vec::is_empty) {
        return MatchRelation::empty(nq);
    }
    let mut member: Vec<Vec<bool>> = sim
        .iter()
        .map(|vs| {
            let mut m = vec![false; g.node_count()];
            for v in vs {
                m[v.index()] = true;
            }
            m
        })
        .collect();

    // Each queued query node needs its own candidates re-checked against all
    // of its query neighbours.
    let mut queue: VecDeque<NodeIx> = qg.nodes().collect();
    let mut queued = vec![true; nq];
    while let Some(u) = queue.pop_front() {
        queued[u.index()] = false;
        let children = qg.successors(u);
        let parents = qg.predecessors(u);
        let supported = |v: &NodeIx| {
            children.iter().all(|c| {
                let m = &member[c.index()];
                g.successors(*v).iter().any(|w| m[w.index()])
            }) && parents.iter().all(|p| {
                let m = &member[p.index()];
                g.predecessors(*v).iter().any(|w| m[w.index()])
            })
        };
        let current = &sim[u.index()];
        let kept: Vec<NodeIx> = if current.len() >= PAR_FILTER_THRESHOLD {
            current.par_iter().copied().filter(|v| supported(v)).collect()
        } else {
            current.iter().copied().filter(|v| supported(v)).collect()
        };
        if kept.len() == current.len() {
            continue;
        }
        if kept.is_empty() {
            return MatchRelation::empty(nq);
        }
        let mut next = kept.iter().peekable();
        let mask = &mut member[u.index()];
        for v in current {
            if next.peek() == Some(&v) {
                next.next();
            } else {
                mask[v.index()] = false;
            }
        }
        sim[u.index()] = kept;
        // Neighbours of u lost support; a self-loop re-queues u itself.
        for &w in qg.successors(u).iter().chain(qg.predecessors(u)) {
            if !queued[w.index()] {
                queued[w.index()] = true;
                queue.push_back(w);
            }
        }
    }
    MatchRelation::from_sets(sim)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::query::Category;

    fn graph(nodes: &[(&str, &str)], edges: &[(&str, &str)]) -> LabeledGraph {
        LabeledGraph::build(
            nodes.iter().map(|(i, l)| (i.to_string(), l.to_string())),
            edges.iter().map(|(s, d)| (s.to_string(), d.to_string(), None)),
        )
        .unwrap()
    }

    fn query(nodes: &[(&str, &str)], edges: &[(&str, &str)]) -> QueryGraph {
        QueryGraph::from_records(
            nodes
                .iter()
                .map(|(i, l)| (i.to_string(), l.to_string(), Category::NoCategory)),
            edges.iter().map(|(s, d)| (s.to_string(), d.to_string())),
        )
        .unwrap()
    }

    #[test]
    fn single_node_query_keeps_all_label_matches() {
        let g = graph(&[("p1", "person"), ("p2", "person"), ("x", "other")], &[("p1", "x")]);
        let q = query(&[("A", "person")], &[]);
        let r = dual_refine(&q, &g);
        assert_eq!(r, initial_candidates(&q, &g));
        assert_eq!(r.len(), 2);
    }

    #[test]
    fn absent_label_gives_empty_relation() {
        let g = graph(&[("p1", "person"), ("x", "other")], &[("p1", "x")]);
        let q = query(&[("A", "person"), ("B", "missing")], &[("A", "B")]);
        assert!(initial_candidates(&q, &g).sim(NodeIx(1)).is_empty());
        assert!(dual_refine(&q, &g).is_empty());
    }

    #[test]
    fn parent_condition_is_enforced() {
        // b2 has the right label but no person parent.
        let g = graph(
            &[("p", "person"), ("b1", "acct"), ("b2", "acct")],
            &[("p", "b1")],
        );
        let q = query(&[("A", "person"), ("B", "acct")], &[("A", "B")]);
        let r = dual_refine(&q, &g);
        assert_eq!(
            r.to_named(&q, &g).into_iter().collect::<Vec<_>>(),
            vec![("A".into(), "p".into()), ("B".into(), "b1".into())]
        );
    }

    #[test]
    fn cycle_query_needs_cycle_support() {
        let q = query(&[("X", "n")], &[("X", "X")]);
        let chain = graph(&[("a", "n"), ("b", "n")], &[("a", "b")]);
        assert!(dual_refine(&q, &chain).is_empty());
        let cyc = graph(&[("a", "n"), ("b", "n"), ("c", "n")], &[("a", "b"), ("b", "a"), ("b", "c")]);
        // c has a parent but no child in the relation
        let r = dual_refine(&q, &cyc);
        assert_eq!(r.len(), 2);
    }
}
