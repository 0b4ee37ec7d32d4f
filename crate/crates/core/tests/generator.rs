use std::collections::BTreeSet;
use std::path::PathBuf;

use invsim_core::ingest::{write_edges, write_nodes};
use invsim_core::oracle::{
    exhaustive_partial_search_unbounded, generate_graph, oracle_top_k, GenSpec, OracleSurvivor, PlantedSpec,
};
use invsim_core::report::{group_results, rank_top_k, RankKey};
use invsim_core::{investigative_match, LabeledGraph, QueryGraph};

fn spec(name: &str) -> PlantedSpec {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/gen").join(name);
    match serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap() {
        GenSpec::Planted(p) => p,
        GenSpec::Layered(_) => panic!("{name} is not a planted spec"),
    }
}

/// Anchor, relevant pairs, red flag.
type Survivor = (String, Vec<(String, String)>, bool);

fn serialized(g: &LabeledGraph) -> Vec<u8> {
    let mut buf = Vec::new();
    write_nodes(g, &mut buf).unwrap();
    write_edges(g, &mut buf).unwrap();
    buf
}

/// Ground truth, exhaustive search and the engine all agree on survivors and
/// relevant sets.
fn check_truth(p: &PlantedSpec) -> (QueryGraph, LabeledGraph, Vec<OracleSurvivor>) {
    let (g, truth) = generate_graph(&GenSpec::Planted(p.clone())).unwrap();
    let q = p.query().unwrap();
    let oracle = exhaustive_partial_search_unbounded(&q, &g, truth.hop_bound).unwrap();

    let expected: Vec<Survivor> = truth
        .survivors()
        .map(|a| (a.anchor.clone(), a.relevant.clone(), a.has_red_flag))
        .collect();
    let found: Vec<Survivor> = oracle
        .iter()
        .map(|s| (s.anchor.clone(), s.members.keys().cloned().collect(), s.has_red_flag))
        .collect();
    assert_eq!(found, expected);

    let outcome = investigative_match(&q, &g, truth.hop_bound).unwrap();
    let engine: Vec<OracleSurvivor> = outcome
        .anchors
        .iter()
        .map(|r| OracleSurvivor::from_engine(&q, &g, r))
        .collect();
    assert_eq!(engine, oracle);

    let full: BTreeSet<String> = truth.anchors.iter().filter(|a| a.full_match).map(|a| a.anchor.clone()).collect();
    let reported: BTreeSet<String> = group_results(&q, &g, &outcome)
        .into_iter()
        .filter(|m| m.full_match)
        .map(|m| m.anchor.data)
        .collect();
    assert_eq!(reported, full);
    (q, g, oracle)
}

#[test]
fn planted_hve_matches_ground_truth() {
    let p = spec("planted-hve.json");
    assert_eq!(p.persons, 4);
    check_truth(&p);
}

#[test]
fn three_planted_full_matches() {
    let mut p = spec("planted-hve.json");
    p.persons = 40;
    p.planted_full = 3;
    for seed in 0..10 {
        p.seed = seed;
        let (_, truth) = generate_graph(&GenSpec::Planted(p.clone())).unwrap();
        assert_eq!(truth.anchors.iter().filter(|a| a.full_match).count(), 3);
        check_truth(&p);
    }
}

#[test]
fn top_k_instance_agrees_with_exhaustive_ranking() {
    let p = spec("planted-topk.json");
    let (q, g, oracle) = check_truth(&p);
    let partial = oracle.len() - 3;
    assert!(partial >= 50, "only {partial} partial matches");
    let sizes: BTreeSet<usize> = oracle.iter().map(OracleSurvivor::relevant_size).collect();
    assert!(sizes.len() >= 3);

    let outcome = investigative_match(&q, &g, 2).unwrap();
    let top = rank_top_k(group_results(&q, &g, &outcome), 20, RankKey::RelevantSize).unwrap();
    let engine: Vec<(String, usize)> = top.iter().map(|m| (m.anchor.data.clone(), m.relevant_size)).collect();
    assert_eq!(engine, oracle_top_k(&oracle, 20));
}

#[test]
fn generation_is_byte_deterministic() {
    for name in ["planted-hve.json", "planted-topk.json"] {
        let p = GenSpec::Planted(spec(name));
        let (a, ta) = generate_graph(&p).unwrap();
        let (b, tb) = generate_graph(&p).unwrap();
        assert_eq!(serialized(&a), serialized(&b));
        assert_eq!(serde_json::to_string(&ta).unwrap(), serde_json::to_string(&tb).unwrap());
    }
}

#[test]
fn no_persons_no_graph() {
    let mut p = spec("planted-hve.json");
    p.persons = 0;
    p.planted_full = 0;
    let (g, truth) = generate_graph(&GenSpec::Planted(p)).unwrap();
    assert!(g.is_empty() && truth.anchors.is_empty());
    assert!(serialized(&g).is_empty());
}
