//! Query patterns: labeled graphs whose nodes carry an investigation category.

use std::collections::{BTreeMap, VecDeque};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{EdgeRecord, GraphError, LabeledGraph, NodeIx, NodeRecord};

/// Investigation category of a query node.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Category {
    /// Query focus: the subjects of the search.
    #[serde(rename = "QF")]
    QueryFocus,
    /// Individually innocuous but related activity.
    #[serde(rename = "IIRA")]
    Innocuous,
    /// Indicator.
    #[serde(rename = "IND")]
    Indicator,
    /// Red flag indicator, singly sufficient for further investigation.
    #[serde(rename = "RF")]
    RedFlag,
    /// No category.
    #[serde(rename = "NC")]
    NoCategory,
}

impl Category {
    pub const ALL: [Category; 5] = [
        Category::QueryFocus,
        Category::Innocuous,
        Category::Indicator,
        Category::RedFlag,
        Category::NoCategory,
    ];

    pub fn code(self) -> &'static str {
        match self {
            Category::QueryFocus => "QF",
            Category::Innocuous => "IIRA",
            Category::Indicator => "IND",
            Category::RedFlag => "RF",
            Category::NoCategory => "NC",
        }
    }

    /// IND or RF: the categories that keep a partial match alive.
    pub fn is_indicator(self) -> bool {
        matches!(self, Category::Indicator | Category::RedFlag)
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown category {0:?}; allowed values are QF, IIRA, IND, RF, NC")]
pub struct UnknownCategory(pub String);

impl FromStr for Category {
    type Err = UnknownCategory;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Category::ALL
            .into_iter()
            .find(|c| c.code() == s)
            .ok_or_else(|| UnknownCategory(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QueryError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("query node {0} has no category")]
    MissingCategory(String),
    #[error("query node {id} declared with categories {first} and {second}")]
    ConflictingCategory {
        id: String,
        first: Category,
        second: Category,
    },
}

/// A query pattern. Every node has exactly one [`Category`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueryGraph {
    graph: LabeledGraph,
    categories: Vec<Category>,
}

impl QueryGraph {
    pub fn new(graph: LabeledGraph, categories: &BTreeMap<String, Category>) -> Result<Self, QueryError> {
        let categories = graph
            .nodes()
            .map(|u| {
                let id = graph.node_id(u);
                categories
                    .get(id)
                    .copied()
                    .ok_or_else(|| QueryError::MissingCategory(id.to_string()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self { graph, categories })
    }

    /// Builds a query from `(id, label, category)` records and `(src, dst)` edges.
    pub fn from_records<N, E>(nodes: N, edges: E) -> Result<Self, QueryError>
    where
        N: IntoIterator<Item = (String, String, Category)>,
        E: IntoIterator<Item = (String, String)>,
    {
        let mut categories = BTreeMap::new();
        let mut records: Vec<NodeRecord> = Vec::new();
        for (id, label, category) in nodes {
            if let Some(&first) = categories.get(&id) {
                if first != category {
                    return Err(QueryError::ConflictingCategory {
                        id,
                        first,
                        second: category,
                    });
                }
            }
            categories.insert(id.clone(), category);
            records.push((id, label));
        }
        let edges: Vec<EdgeRecord> = edges.into_iter().map(|(s, d)| (s, d, None)).collect();
        let graph = LabeledGraph::build(records, edges)?;
        Self::new(graph, &categories)
    }

    pub fn graph(&self) -> &LabeledGraph {
        &self.graph
    }

    pub fn category(&self, u: NodeIx) -> Category {
        self.categories[u.index()]
    }

    pub fn node_count(&self) -> usize {
        self.graph.node_count()
    }

    /// Query-focus nodes in id order.
    pub fn focus_nodes(&self) -> impl Iterator<Item = NodeIx> + '_ {
        self.graph
            .nodes()
            .filter(move |&u| self.category(u) == Category::QueryFocus)
    }

    /// Number of weakly connected components.
    pub fn weak_components(&self) -> usize {
        let n = self.graph.node_count();
        let mut seen = vec![false; n];
        let mut components = 0;
        for start in self.graph.nodes() {
            if seen[start.index()] {
                continue;
            }
            components += 1;
            seen[start.index()] = true;
            let mut queue = VecDeque::from([start]);
            while let Some(u) = queue.pop_front() {
                for &w in self.graph.successors(u).iter().chain(self.graph.predecessors(u)) {
                    if !seen[w.index()] {
                        seen[w.index()] = true;
                        queue.push_back(w);
                    }
                }
            }
        }
        components
    }

    /// Nodes reachable from `from` by a forward path of length >= 1.
    pub fn descendants(&self, from: NodeIx) -> Vec<bool> {
        let mut seen = vec![false; self.graph.node_count()];
        let mut queue = VecDeque::from([from]);
        while let Some(u) = queue.pop_front() {
            for &w in self.graph.successors(u) {
                if !seen[w.index()] {
                    seen[w.index()] = true;
                    queue.push_back(w);
                }
            }
        }
        seen
    }
}

/// Which matching semantics a query is validated for.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Dual,
    Investigative,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    EmptyQuery,
    NoQueryFocus,
    NoIndicator,
    Disconnected { components: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::EmptyQuery => f.write_str("empty query"),
            Violation::NoQueryFocus => f.write_str("no QF node"),
            Violation::NoIndicator => f.write_str("no IND/RF node"),
            Violation::Disconnected { components } => {
                write!(f, "query is not weakly connected ({components} components)")
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
    pub warnings: Vec<String>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_ok() {
            writeln!(f, "OK")?;
        }
        for v in &self.violations {
            writeln!(f, "violation: {v}")?;
        }
        for w in &self.warnings {
            writeln!(f, "warning: {w}")?;
        }
        Ok(())
    }
}

/// Checks the structural preconditions of a query for the given mode.
///
/// Every violation is listed. Indicators that no query-focus node reaches by
/// a forward path produce a warning: they can never enter a relevant set.
pub fn validate_query(q: &QueryGraph, mode: Mode) -> ValidationReport {
    let mut report = ValidationReport::default();
    if q.node_count() == 0 {
        report.violations.push(Violation::EmptyQuery);
        if mode == Mode::Investigative {
            report.violations.push(Violation::NoQueryFocus);
            report.violations.push(Violation::NoIndicator);
        }
        return report;
    }
    let components = q.weak_components();
    if components > 1 {
        let disconnected = Violation::Disconnected { components };
        match mode {
            Mode::Investigative => report.violations.push(disconnected),
            Mode::Dual => report.warnings.push(disconnected.to_string()),
        }
    }
    if mode == Mode::Dual {
        return report;
    }

    let focus: Vec<NodeIx> = q.focus_nodes().collect();
    let indicators: Vec<NodeIx> = q
        .graph()
        .nodes()
        .filter(|&u| q.category(u).is_indicator())
        .collect();
    if focus.is_empty() {
        report.violations.push(Violation::NoQueryFocus);
    }
    if indicators.is_empty() {
        report.violations.push(Violation::NoIndicator);
    }
    if !focus.is_empty() {
        let mut reached = vec![false; q.node_count()];
        for &f in &focus {
            for (i, r) in q.descendants(f).into_iter().enumerate() {
                reached[i] |= r;
            }
        }
        for &u in &indicators {
            if !reached[u.index()] {
                report.warnings.push(format!(
                    "{} node {} is not a descendant of any QF node and cannot enter a relevant set",
                    q.category(u),
                    q.graph().node_id(u)
                ));
            }
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    fn query(nodes: &[(&str, &str, Category)], edges: &[(&str, &str)]) -> QueryGraph {
        QueryGraph::from_records(
            nodes
                .iter()
                .map(|(i, l, c)| (i.to_string(), l.to_string(), *c)),
            edges.iter().map(|(s, d)| (s.to_string(), d.to_string())),
        )
        .unwrap()
    }

    fn hve_query() -> QueryGraph {
        use Category::*;
        query(
            &[
                ("A", "person", QueryFocus),
                ("B", "account", Innocuous),
                ("C", "radical-ngram", Indicator),
                ("D", "extremist-ngram", Indicator),
                ("E", "travel", Indicator),
                ("F", "training", RedFlag),
                ("G", "firearm", Innocuous),
            ],
            &[("A", "B"), ("B", "C"), ("B", "D"), ("A", "E"), ("E", "F"), ("A", "G")],
        )
    }

    #[test]
    fn category_codes_round_trip() {
        for c in Category::ALL {
            assert_eq!(c.code().parse::<Category>().unwrap(), c);
        }
        let err = "RED".parse::<Category>().unwrap_err();
        assert!(err.to_string().contains("QF, IIRA, IND, RF, NC"));
    }

    #[test]
    fn hve_query_is_valid_for_investigation() {
        let report = validate_query(&hve_query(), Mode::Investigative);
        assert!(report.is_ok(), "{report}");
        assert!(report.warnings.is_empty());
    }

    #[test]
    fn lone_focus_node_lacks_indicator() {
        let q = query(&[("A", "person", Category::QueryFocus)], &[]);
        let report = validate_query(&q, Mode::Investigative);
        assert_eq!(report.violations, vec![Violation::NoIndicator]);
        assert_eq!(report.violations[0].to_string(), "no IND/RF node");
    }

    #[test]
    fn empty_query_rejected_in_dual_mode() {
        let q = query(&[], &[]);
        let report = validate_query(&q, Mode::Dual);
        assert_eq!(report.violations, vec![Violation::EmptyQuery]);
        assert_eq!(report.violations[0].to_string(), "empty query");
    }

    #[test]
    fn disconnected_query_is_a_violation_only_in_investigative_mode() {
        use Category::*;
        let q = query(&[("A", "p", QueryFocus), ("B", "x", Indicator)], &[]);
        let inv = validate_query(&q, Mode::Investigative);
        assert_eq!(inv.violations, vec![Violation::Disconnected { components: 2 }]);
        let dual = validate_query(&q, Mode::Dual);
        assert!(dual.is_ok());
        assert_eq!(dual.warnings.len(), 1);
    }

    #[test]
    fn ancestor_indicator_warns() {
        use Category::*;
        let q = query(
            &[("A", "p", QueryFocus), ("I", "x", Indicator), ("R", "y", RedFlag)],
            &[("I", "A"), ("A", "R")],
        );
        let report = validate_query(&q, Mode::Investigative);
        assert!(report.is_ok());
        assert_eq!(report.warnings.len(), 1);
        assert!(report.warnings[0].contains("node I"));
    }

    #[test]
    fn missing_or_conflicting_category_rejected() {
        let g = LabeledGraph::build(vec![("A".to_string(), "p".to_string())], vec![]).unwrap();
        assert_eq!(
            QueryGraph::new(g, &BTreeMap::new()).unwrap_err(),
            QueryError::MissingCategory("A".into())
        );
        let err = QueryGraph::from_records(
            vec![
                ("A".to_string(), "p".to_string(), Category::QueryFocus),
                ("A".to_string(), "p".to_string(), Category::RedFlag),
            ],
            vec![],
        )
        .unwrap_err();
        assert!(matches!(err, QueryError::ConflictingCategory { .. }));
    }
}
