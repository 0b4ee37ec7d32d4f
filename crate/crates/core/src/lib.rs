//! Graph pattern matching for investigative search.
//!
//! The engine computes the maximum dual-simulation relation of a query in a
//! data graph, then extends it with partial matches rooted at query-focus
//! nodes: every person-like node whose nearby activity mirrors part of the
//! query, provided that part contains an indicator. Results are grouped per
//! person and ranked red-flag first.
//!
//! ```no_run
//! use std::path::Path;
//! use invsim_core::{ingest, inv_sim, report};
//!
//! let g = ingest::load_graph(Path::new("nodes.tsv"), Path::new("edges.tsv")).unwrap();
//! let q = ingest::load_query(Path::new("query.json")).unwrap();
//! let outcome = inv_sim::investigative_match(&q, &g, inv_sim::DEFAULT_HOP_BOUND).unwrap();
//! let matches = report::group_results(&q, &g, &outcome);
//! let top = report::rank_top_k(matches, 20, report::RankKey::RelevantSize).unwrap();
//! ```

pub mod dual_sim;
pub mod graph;
pub mod ingest;
pub mod inv_sim;
pub mod oracle;
pub mod query;
pub mod relation;
pub mod report;

pub use dual_sim::{dual_refine, initial_candidates};
pub use graph::{GraphError, LabeledGraph, NodeIx};
pub use inv_sim::{investigative_match, InvSimOutcome, MatchError, RelevantSet, Witness};
pub use query::{validate_query, Category, Mode, QueryGraph, ValidationReport};
pub use relation::MatchRelation;
pub use report::{PersonMatch, RankKey, ReportFormat};
