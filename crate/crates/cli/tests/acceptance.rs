//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::collections::BTreeSet;
use std::fs::{self, File};
use std::panic::{self, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use invsim_core::ingest::load_graph;
use invsim_core::oracle::{
    exhaustive_partial_search, exhaustive_partial_search_unbounded, generate_graph, naive_dual_sim_seeded,
    oracle_top_k, random_instance, GenSpec, InstanceShape, OracleSurvivor, PlantedSpec,
};
use invsim_core::report::{parse_json_report, rank_order, rank_top_k, Anchor, Subgraph};
use invsim_core::{
    dual_refine, investigative_match, InvSimOutcome, LabeledGraph, MatchRelation, PersonMatch, QueryGraph,
    RankKey,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn fixture(rel: &str) -> String {
    root().join(rel).to_str().unwrap().to_string()
}

struct Run {
    code: i32,
    stdout: Vec<u8>,
    stderr: String,
    wall: Duration,
    /// Peak resident set size of the child, in bytes.
    peak_rss: u64,
}

/// Runs the binary and collects its exit status and resource usage.
fn invsim(args: &[&str]) -> Run {
    let dir = tempfile::tempdir().unwrap();
    let (out_path, err_path) = (dir.path().join("out"), dir.path().join("err"));
    let start = Instant::now();
    #[allow(clippy::zombie_processes)] // reaped by wait4 below
    let child = Command::new(env!("CARGO_BIN_EXE_invsim"))
        .args(args)
        .stdin(Stdio::null())
        .stdout(File::create(&out_path).unwrap())
        .stderr(File::create(&err_path).unwrap())
        .spawn()
        .unwrap();
    let mut status = 0;
    // SAFETY: rusage is plain data and the pid is our own unreaped child.
    let mut usage: libc::rusage = unsafe { std::mem::zeroed() };
    let reaped = unsafe { libc::wait4(child.id() as libc::pid_t, &mut status, 0, &mut usage) };
    let wall = start.elapsed();
    assert_eq!(reaped, child.id() as libc::pid_t, "wait4 failed");
    let code = if libc::WIFEXITED(status) {
        libc::WEXITSTATUS(status)
    } else {
        -1
    };
    Run {
        code,
        stdout: fs::read(&out_path).unwrap(),
        stderr: fs::read_to_string(&err_path).unwrap(),
        wall,
        peak_rss: usage.ru_maxrss as u64 * 1024,
    }
}

fn checked(args: &[&str]) -> Run {
    let run = invsim(args);
    assert_eq!(run.code, 0, "invsim {args:?} failed:\n{}", run.stderr);
    run
}

fn match_args<'a>(nodes: &'a str, edges: &'a str, query: &'a str, extra: &[&'a str]) -> Vec<&'a str> {
    let mut v = vec!["match", "--graph-nodes", nodes, "--graph-edges", edges, "--query", query];
    v.extend_from_slice(extra);
    v
}

type Verdict = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

/// Criterion 8 collects byte-equality of repeated runs from 1, 6 and 7.
#[derive(Default)]
struct Determinism {
    checks: Vec<(&'static str, bool)>,
}

fn motivating_example(det: &mut Determinism) -> Verdict {
    let (n, e, q) = (
        fixture("fixtures/hve-toy/nodes.tsv"),
        fixture("fixtures/hve-toy/edges.tsv"),
        fixture("fixtures/hve-toy/query.json"),
    );
    let args = match_args(&n, &e, &q, &[]);
    let first = checked(&args);
    let report = parse_json_report(std::str::from_utf8(&first.stdout).unwrap()).map_err(|e| e.to_string())?;
    let summary: Vec<(&str, bool, bool)> = report
        .iter()
        .map(|m| (m.anchor.data.as_str(), m.full_match, m.has_red_flag))
        .collect();
    ensure(
        summary == [("P3", true, true), ("P1", false, false), ("P4", false, false)],
        || format!("ranked anchors {summary:?}"),
    )?;
    let person2 = ["P2", "B2", "G2"];
    for m in &report {
        ensure(m.subgraph.nodes.iter().all(|v| !person2.contains(&v.as_str())), || {
            format!("{} subgraph holds a Person 2 node", m.anchor.data)
        })?;
    }
    let g = load_graph(Path::new(&n), Path::new(&e)).map_err(|e| e.to_string())?;
    let qg = invsim_core::ingest::load_query(Path::new(&q)).map_err(|e| e.to_string())?;
    let outcome = investigative_match(&qg, &g, 2).map_err(|e| e.to_string())?;
    let leaked: Vec<(String, String)> = outcome
        .relation
        .to_named(&qg, &g)
        .into_iter()
        .filter(|(_, v)| person2.contains(&v.as_str()))
        .collect();
    ensure(leaked.is_empty(), || format!("result relation holds {leaked:?}"))?;
    ensure(first.wall < Duration::from_secs(1), || format!("took {:?}", first.wall))?;

    let second = checked(&args);
    det.checks.push(("motivating example", first.stdout == second.stdout));
    Ok(format!("P3 (full, RF), P1, P4 in {:.0?}; no Person 2 pairs", first.wall))
}

/// Label preservation and the forward/backward edge conditions.
fn dual_sound(q: &QueryGraph, g: &LabeledGraph, r: &MatchRelation) -> bool {
    let qg = q.graph();
    r.is_label_preserving(q, g)
        && r.pairs().all(|(u, v)| {
            qg.successors(u)
                .iter()
                .all(|&uc| g.successors(v).iter().any(|&vc| r.contains(uc, vc)))
                && qg
                    .predecessors(u)
                    .iter()
                    .all(|&up| g.predecessors(v).iter().any(|&vp| r.contains(up, vp)))
        })
}

/// Violated investigative invariants, as messages.
fn inv_violations(q: &QueryGraph, g: &LabeledGraph, o: &InvSimOutcome) -> Vec<String> {
    let mut bad = Vec::new();
    if !o.relation.is_label_preserving(q, g) {
        bad.push("relation is not label preserving".into());
    }
    if !o.dual.is_subset_of(&o.relation) {
        bad.push("dual relation not contained in result".into());
    }
    if !o.relation.is_empty() && !o.relation.pairs().any(|(u, _)| q.category(u).is_indicator()) {
        bad.push("non-empty result without an IND/RF pair".into());
    }
    for r in &o.anchors {
        let backed = r
            .members
            .keys()
            .any(|&(u, v)| q.category(u).is_indicator() && o.relation.contains(u, v));
        if !backed {
            bad.push(format!("survivor {} has no IND/RF member", g.node_id(r.anchor)));
        }
        if !o.relation.contains(r.focus, r.anchor) {
            bad.push(format!("survivor {} missing from result", g.node_id(r.anchor)));
        }
    }
    bad
}

#[derive(Default)]
struct InvariantTally {
    instances: usize,
    violations: Vec<String>,
}

fn dual_oracle(tally: &mut InvariantTally) -> Verdict {
    let start = Instant::now();
    let mut disagreements = Vec::new();
    for seed in 0..1000u64 {
        let (q, g) = random_instance(seed, InstanceShape::default());
        let fast = dual_refine(&q, &g);
        let slow = naive_dual_sim_seeded(&q, &g, seed ^ 0x5eed).map_err(|e| e.to_string())?;
        if fast.to_named(&q, &g) != slow {
            disagreements.push(seed);
        }
        tally.instances += 1;
        if !dual_sound(&q, &g, &fast) {
            tally.violations.push(format!("dual seed {seed}: unsound relation"));
        }
    }
    let elapsed = start.elapsed();
    ensure(disagreements.is_empty(), || format!("disagree on seeds {disagreements:?}"))?;
    ensure(elapsed < Duration::from_secs(60), || format!("took {elapsed:?}"))?;
    Ok(format!("1000 instances, 0 disagreements, {elapsed:.1?}"))
}

fn planted_instance(i: u64) -> PlantedSpec {
    let text = fs::read_to_string(root().join("fixtures/gen/planted-hve.json")).unwrap();
    let GenSpec::Planted(mut p) = serde_json::from_str(&text).unwrap() else {
        panic!("planted-hve.json is not a planted spec");
    };
    p.seed = 1000 + i;
    p.persons = 1 + (i as usize % 6);
    p.planted_full = (i as usize / 6) % (p.persons + 1);
    p
}

fn inv_oracle(tally: &mut InvariantTally) -> Verdict {
    let shape = InstanceShape {
        investigative: true,
        ..InstanceShape::default()
    };
    let mut disagreements = Vec::new();
    for seed in 0..500u64 {
        let (q, g) = random_instance(50_000 + seed, shape);
        let outcome = investigative_match(&q, &g, 2).map_err(|e| format!("seed {seed}: {e}"))?;
        let engine: Vec<OracleSurvivor> = outcome
            .anchors
            .iter()
            .map(|r| OracleSurvivor::from_engine(&q, &g, r))
            .collect();
        if engine != exhaustive_partial_search(&q, &g, 2).map_err(|e| e.to_string())? {
            disagreements.push(format!("random {seed}"));
        }
        tally.instances += 1;
        tally
            .violations
            .extend(inv_violations(&q, &g, &outcome).into_iter().map(|v| format!("random {seed}: {v}")));
    }
    for i in 0..100u64 {
        let p = planted_instance(i);
        let (g, truth) = generate_graph(&GenSpec::Planted(p.clone())).map_err(|e| e.to_string())?;
        let q = p.query().map_err(|e| e.to_string())?;
        let outcome = investigative_match(&q, &g, truth.hop_bound).map_err(|e| e.to_string())?;
        let engine: Vec<OracleSurvivor> = outcome
            .anchors
            .iter()
            .map(|r| OracleSurvivor::from_engine(&q, &g, r))
            .collect();
        let oracle = exhaustive_partial_search_unbounded(&q, &g, truth.hop_bound).map_err(|e| e.to_string())?;
        let expected: Vec<(String, Vec<(String, String)>)> =
            truth.survivors().map(|a| (a.anchor.clone(), a.relevant.clone())).collect();
        let found: Vec<(String, Vec<(String, String)>)> = oracle
            .iter()
            .map(|s| (s.anchor.clone(), s.members.keys().cloned().collect()))
            .collect();
        if engine != oracle || found != expected {
            disagreements.push(format!("planted {i}"));
        }
        tally.instances += 1;
        tally
            .violations
            .extend(inv_violations(&q, &g, &outcome).into_iter().map(|v| format!("planted {i}: {v}")));
    }
    ensure(disagreements.is_empty(), || format!("disagreements: {disagreements:?}"))?;
    Ok("500 random + 100 planted instances, 0 disagreements".into())
}

fn invariants(tally: &InvariantTally) -> Verdict {
    ensure(tally.instances == 1600, || format!("only {} instances ran", tally.instances))?;
    ensure(tally.violations.is_empty(), || {
        format!("{} violations, first: {}", tally.violations.len(), tally.violations[0])
    })?;
    Ok(format!("{} instances, 0 violations", tally.instances))
}

fn random_matches(rng: &mut ChaCha8Rng) -> Vec<PersonMatch> {
    let n = rng.random_range(0..40);
    let ids: BTreeSet<u32> = (0..n).map(|_| rng.random_range(0..500)).collect();
    ids.into_iter()
        .map(|id| {
            let matched = rng.random_range(1..=8usize);
            PersonMatch {
                anchor: Anchor {
                    query: "A".into(),
                    data: format!("u{id:03}"),
                },
                full_match: rng.random_bool(0.1),
                has_red_flag: rng.random_bool(0.3),
                relevant_size: rng.random_range(0..12),
                jaccard: matched as f64 / 8.0,
                matched_query_nodes: (0..matched).map(|i| format!("q{i}")).collect(),
                subgraph: Subgraph::default(),
            }
        })
        .collect()
}

fn ranking() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let lists = 1000;
    for i in 0..lists {
        let list = random_matches(&mut rng);
        for key in [RankKey::RelevantSize, RankKey::Jaccard] {
            let ranked = rank_top_k(list.clone(), usize::MAX, key).map_err(|e| e.to_string())?;
            for w in ranked.windows(2) {
                ensure(w[0].has_red_flag >= w[1].has_red_flag, || format!("list {i}: non-RF ranked above RF"))?;
                if key == RankKey::RelevantSize && w[0].has_red_flag == w[1].has_red_flag {
                    ensure(w[0].relevant_size >= w[1].relevant_size, || {
                        format!("list {i}: relevant_size increases within a class")
                    })?;
                }
                ensure(rank_order(&w[0], &w[1], key).is_lt(), || format!("list {i}: order is not strict"))?;
            }
            let mut shuffled = list.clone();
            shuffled.shuffle(&mut rng);
            let k = rng.random_range(1..=list.len().max(1));
            let again = rank_top_k(shuffled, k, key).map_err(|e| e.to_string())?;
            ensure(again[..] == ranked[..k.min(ranked.len())], || {
                format!("list {i}: top-{k} depends on input order")
            })?;
        }
    }
    Ok(format!("{lists} randomized lists, both rank keys"))
}

fn top_k(det: &mut Determinism) -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    checked(&["gen", "--spec", &fixture("fixtures/gen/planted-topk.json"), "--out-dir", out]);
    let (n, e, q) = (format!("{out}/nodes.tsv"), format!("{out}/edges.tsv"), format!("{out}/query.json"));
    let args = match_args(&n, &e, &q, &["--top-k", "20"]);
    let first = checked(&args);
    let report = parse_json_report(std::str::from_utf8(&first.stdout).unwrap()).map_err(|e| e.to_string())?;
    let engine: Vec<(String, usize)> = report.iter().map(|m| (m.anchor.data.clone(), m.relevant_size)).collect();

    let g = load_graph(Path::new(&n), Path::new(&e)).map_err(|e| e.to_string())?;
    let qg = invsim_core::ingest::load_query(Path::new(&q)).map_err(|e| e.to_string())?;
    let oracle = exhaustive_partial_search_unbounded(&qg, &g, 2).map_err(|e| e.to_string())?;
    let full = report.iter().filter(|m| m.full_match).count();
    let partial = oracle.len() - full.min(oracle.len());
    let sizes: BTreeSet<usize> = oracle.iter().map(OracleSurvivor::relevant_size).collect();
    ensure(partial >= 50, || format!("only {partial} partial matches"))?;
    ensure(sizes.len() > 1, || "relevant sizes do not vary".into())?;
    let expected = oracle_top_k(&oracle, 20);
    ensure(engine == expected, || format!("engine {engine:?}\noracle {expected:?}"))?;

    let second = checked(&args);
    det.checks.push(("top-k", first.stdout == second.stdout));

    let blog = root().join("fixtures/blogcatalog");
    let note = if blog.join("nodes.tsv").exists() && blog.join("edges.tsv").exists() {
        let (bn, be, bq) = (
            fixture("fixtures/blogcatalog/nodes.tsv"),
            fixture("fixtures/blogcatalog/edges.tsv"),
            fixture("fixtures/blogcatalog/query.json"),
        );
        let g = load_graph(Path::new(&bn), Path::new(&be)).map_err(|e| e.to_string())?;
        ensure((g.node_count(), g.edge_count()) == (471_267, 4_098_290), || {
            format!("BlogCatalog has {} nodes, {} edges", g.node_count(), g.edge_count())
        })?;
        let run = checked(&match_args(&bn, &be, &bq, &["--top-k", "20"]));
        let report = parse_json_report(std::str::from_utf8(&run.stdout).unwrap()).map_err(|e| e.to_string())?;
        let top = report.first().map(|m| (m.anchor.data.as_str(), m.relevant_size));
        ensure(top == Some(("u65530", 5)), || format!("BlogCatalog top result {top:?}"))?;
        "BlogCatalog top anchor u65530 (5)"
    } else {
        "BlogCatalog dataset absent, that sub-check skipped"
    };
    Ok(format!(
        "{} survivors ({partial} partial), top-20 identical; {note}",
        oracle.len()
    ))
}

const GIB: u64 = 1 << 30;

fn scale(det: &mut Determinism) -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    checked(&["gen", "--spec", &fixture("fixtures/gen/blogcatalog-scale.json"), "--out-dir", out]);
    let (n, e) = (format!("{out}/nodes.tsv"), format!("{out}/edges.tsv"));

    let stats = checked(&["stats", "--graph-nodes", &n, "--graph-edges", &e, "--format", "json"]);
    let v: serde_json::Value = serde_json::from_slice(&stats.stdout).map_err(|e| e.to_string())?;
    ensure(
        v["nodes"].as_u64() == Some(471_267) && v["edges"].as_u64() == Some(4_098_290),
        || format!("graph has {} nodes, {} edges", v["nodes"], v["edges"]),
    )?;
    for (label, count) in [("person", 88_781), ("userid", 80_949), ("weblog", 127_227)] {
        ensure(v["nodes_by_label"][label].as_u64() == Some(count), || {
            format!("{label} count {}", v["nodes_by_label"][label])
        })?;
    }

    let q = fixture("fixtures/blogcatalog/query.json");
    let one = checked(&match_args(&n, &e, &q, &["--threads", "1"]));
    ensure(one.wall < Duration::from_secs(120), || format!("single-threaded run took {:?}", one.wall))?;
    ensure(one.peak_rss < 8 * GIB, || format!("peak RSS {} bytes", one.peak_rss))?;
    ensure(!one.stdout.starts_with(b"[]"), || "empty report".into())?;
    for threads in ["4", "8"] {
        let run = checked(&match_args(&n, &e, &q, &["--threads", threads]));
        ensure(run.stdout == one.stdout, || format!("--threads {threads} output differs"))?;
    }
    let again = checked(&match_args(&n, &e, &q, &["--threads", "1"]));
    det.checks.push(("scale", again.stdout == one.stdout));
    Ok(format!(
        "471267 nodes, 4098290 edges; {:.1?} at 1 thread, peak RSS {} MiB; 1/4/8 threads identical",
        one.wall,
        one.peak_rss >> 20
    ))
}

fn determinism(det: &Determinism) -> Verdict {
    ensure(det.checks.len() == 3, || {
        format!("only {} of 3 repeatable runs completed", det.checks.len())
    })?;
    let differing: Vec<&str> = det.checks.iter().filter(|(_, same)| !same).map(|(n, _)| *n).collect();
    ensure(differing.is_empty(), || format!("output differs between runs: {differing:?}"))?;
    Ok("criteria 1, 6, 7 byte-identical across two runs".into())
}

fn guarded(f: impl FnOnce() -> Verdict) -> Verdict {
    panic::catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
        let msg = p
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_default();
        Err(format!("panicked: {msg}"))
    })
}

fn main() {
    // Keep the listing readable when a criterion panics.
    panic::set_hook(Box::new(|_| {}));
    let mut det = Determinism::default();
    let mut tally = InvariantTally::default();
    let results = [
        ("motivating example", guarded(|| motivating_example(&mut det))),
        ("dual-sim oracle equivalence", guarded(|| dual_oracle(&mut tally))),
        ("investigative oracle equivalence", guarded(|| inv_oracle(&mut tally))),
        ("match invariants", guarded(|| invariants(&tally))),
        ("ranking invariants", guarded(ranking)),
        ("top-k correspondence", guarded(|| top_k(&mut det))),
        ("scale benchmark", guarded(|| scale(&mut det))),
        ("determinism", guarded(|| determinism(&det))),
    ];
    let mut failed = 0;
    for (i, (name, verdict)) in results.iter().enumerate() {
        match verdict {
            Ok(detail) => println!("criterion {} {name}: PASS ({detail})", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {} {name}: FAIL ({why})", i + 1);
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
    println!("all 8 criteria passed");
}
