//! Text formats for graphs, queries and dataset statistics.
//!
//! Node files hold `id<TAB>label` lines and edge files `src<TAB>dst` lines with
//! an optional third edge-label column. Lines starting with `#` and blank lines
//! are skipped. Queries are JSON documents:
//!
//! ```json
//! {"nodes":[{"id":"A","label":"person","category":"QF"}],"edges":[["A","B"]]}
//! ```

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::Write as _;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{EdgeRecord, GraphError, LabeledGraph, NodeRecord};
use crate::query::{Category, QueryError, QueryGraph, UnknownCategory};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("{}:{line}: {message}", path.display())]
    Malformed {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("{}: {source}", path.display())]
    Graph { path: PathBuf, source: GraphError },
    #[error("{}: {source}", path.display())]
    Query { path: PathBuf, source: QueryError },
    #[error("{}: query node {node}: {source}", path.display())]
    Category {
        path: PathBuf,
        node: String,
        source: UnknownCategory,
    },
    #[error("{}: invalid query document: {source}", path.display())]
    Json {
        path: PathBuf,
        source: serde_json::Error,
    },
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> IngestError + '_ {
    move |source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Iterates over data lines as `(1-based line number, fields)`.
fn records<'a, R: BufRead + 'a>(reader: R, path: &'a Path) -> impl Iterator<Item = Result<(usize, Vec<String>), IngestError>> + 'a {
    reader.lines().enumerate().filter_map(move |(i, line)| match line {
        Err(e) => Some(Err(io_err(path)(e))),
        Ok(line) => {
            let line = line.strip_suffix('\r').unwrap_or(&line);
            if line.is_empty() || line.starts_with('#') {
                None
            } else {
                Some(Ok((i + 1, line.split('\t').map(str::to_string).collect())))
            }
        }
    })
}

/// Parses a node file. `path` is only used in error messages.
pub fn read_nodes<R: BufRead>(reader: R, path: &Path) -> Result<Vec<NodeRecord>, IngestError> {
    let mut out = Vec::new();
    for rec in records(reader, path) {
        let (line, mut fields) = rec?;
        let malformed = |message: String| IngestError::Malformed {
            path: path.to_path_buf(),
            line,
            message,
        };
        if fields.len() != 2 {
            return Err(malformed(format!("expected id<TAB>label, found {} fields", fields.len())));
        }
        let label = fields.pop().unwrap_or_default();
        let id = fields.pop().unwrap_or_default();
        if id.is_empty() || label.is_empty() {
            return Err(malformed("empty node id or label".into()));
        }
        out.push((id, label));
    }
    Ok(out)
}

/// Parses an edge file, checking endpoints against `known` ids when given.
pub fn read_edges<R: BufRead>(
    reader: R,
    path: &Path,
    known: Option<&HashSet<&str>>,
) -> Result<Vec<EdgeRecord>, IngestError> {
    let mut out = Vec::new();
    for rec in records(reader, path) {
        let (line, mut fields) = rec?;
        let malformed = |message: String| IngestError::Malformed {
            path: path.to_path_buf(),
            line,
            message,
        };
        let label = match fields.len() {
            2 => None,
            3 => fields.pop().filter(|l| !l.is_empty()),
            n => return Err(malformed(format!("expected src<TAB>dst[<TAB>label], found {n} fields"))),
        };
        let dst = fields.pop().unwrap_or_default();
        let src = fields.pop().unwrap_or_default();
        if let Some(known) = known {
            for end in [&src, &dst] {
                if !known.contains(end.as_str()) {
                    return Err(malformed(format!("unknown endpoint {end}")));
                }
            }
        }
        out.push((src, dst, label));
    }
    Ok(out)
}

fn open(path: &Path) -> Result<BufReader<File>, IngestError> {
    File::open(path).map(BufReader::new).map_err(io_err(path))
}

/// Loads a graph from a node file and an edge file.
pub fn load_graph(nodes_path: &Path, edges_path: &Path) -> Result<LabeledGraph, IngestError> {
    let nodes = read_nodes(open(nodes_path)?, nodes_path)?;
    let known: HashSet<&str> = nodes.iter().map(|(id, _)| id.as_str()).collect();
    let edges = read_edges(open(edges_path)?, edges_path, Some(&known))?;
    drop(known);
    LabeledGraph::build(nodes, edges).map_err(|source| IngestError::Graph {
        path: nodes_path.to_path_buf(),
        source,
    })
}

pub fn write_nodes<W: Write>(g: &LabeledGraph, mut w: W) -> io::Result<()> {
    for (id, label) in g.node_records() {
        writeln!(w, "{id}\t{label}")?;
    }
    w.flush()
}

pub fn write_edges<W: Write>(g: &LabeledGraph, mut w: W) -> io::Result<()> {
    for (src, dst, label) in g.edge_records() {
        match label {
            Some(label) => writeln!(w, "{src}\t{dst}\t{label}")?,
            None => writeln!(w, "{src}\t{dst}")?,
        }
    }
    w.flush()
}

pub fn save_graph(g: &LabeledGraph, nodes_path: &Path, edges_path: &Path) -> Result<(), IngestError> {
    let create = |p: &Path| File::create(p).map(BufWriter::new).map_err(io_err(p));
    write_nodes(g, create(nodes_path)?).map_err(io_err(nodes_path))?;
    write_edges(g, create(edges_path)?).map_err(io_err(edges_path))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct QueryNodeDoc {
    id: String,
    label: String,
    category: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct QueryDoc {
    nodes: Vec<QueryNodeDoc>,
    edges: Vec<(String, String)>,
}

/// Parses a query document. Does not validate it for any matching mode.
pub fn parse_query(text: &str, path: &Path) -> Result<QueryGraph, IngestError> {
    let doc: QueryDoc = serde_json::from_str(text).map_err(|source| IngestError::Json {
        path: path.to_path_buf(),
        source,
    })?;
    let query_err = |source: QueryError| IngestError::Query {
        path: path.to_path_buf(),
        source,
    };
    let nodes = doc
        .nodes
        .into_iter()
        .map(|n| {
            let category = n.category.parse::<Category>().map_err(|source| IngestError::Category {
                path: path.to_path_buf(),
                node: n.id.clone(),
                source,
            })?;
            Ok((n.id, n.label, category))
        })
        .collect::<Result<Vec<_>, IngestError>>()?;
    QueryGraph::from_records(nodes, doc.edges).map_err(query_err)
}

pub fn load_query(path: &Path) -> Result<QueryGraph, IngestError> {
    let mut text = String::new();
    open(path)?.read_to_string(&mut text).map_err(io_err(path))?;
    parse_query(&text, path)
}

/// Renders a query in the JSON query format.
pub fn query_to_json(q: &QueryGraph) -> String {
    let qg = q.graph();
    let doc = QueryDoc {
        nodes: qg
            .nodes()
            .map(|u| QueryNodeDoc {
                id: qg.node_id(u).to_string(),
                label: qg.label(u).to_string(),
                category: q.category(u).code().to_string(),
            })
            .collect(),
        edges: qg
            .edges()
            .map(|(s, d)| (qg.node_id(s).to_string(), qg.node_id(d).to_string()))
            .collect(),
    };
    let mut text = serde_json::to_string_pretty(&doc).expect("query document serializes");
    text.push('\n');
    text
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeTypeCount {
    pub source_label: String,
    pub target_label: String,
    pub count: usize,
}

/// Node and edge counts, overall and by label.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct GraphStats {
    pub nodes: usize,
    pub edges: usize,
    pub nodes_by_label: BTreeMap<String, usize>,
    pub edges_by_label_pair: Vec<EdgeTypeCount>,
}

pub fn compute_stats(g: &LabeledGraph) -> GraphStats {
    let nodes_by_label = g
        .labels()
        .iter()
        .map(|l| (l.clone(), g.nodes_with_label(l).len()))
        .collect();
    let mut pairs: BTreeMap<(crate::graph::LabelIx, crate::graph::LabelIx), usize> = BTreeMap::new();
    for (s, d) in g.edges() {
        *pairs.entry((g.label_ix(s), g.label_ix(d))).or_default() += 1;
    }
    let edges_by_label_pair = pairs
        .into_iter()
        .map(|((s, d), count)| EdgeTypeCount {
            source_label: g.label_name(s).to_string(),
            target_label: g.label_name(d).to_string(),
            count,
        })
        .collect();
    GraphStats {
        nodes: g.node_count(),
        edges: g.edge_count(),
        nodes_by_label,
        edges_by_label_pair,
    }
}

/// Aligned two-column table of the statistics.
pub fn render_stats_table(stats: &GraphStats) -> String {
    let mut rows: Vec<(String, String)> = vec![("Total nodes".into(), stats.nodes.to_string())];
    rows.extend(
        stats
            .nodes_by_label
            .iter()
            .map(|(l, c)| (format!("  nodes labeled {l}"), c.to_string())),
    );
    rows.push(("Total edges".into(), stats.edges.to_string()));
    rows.extend(stats.edges_by_label_pair.iter().map(|e| {
        (
            format!("  edges {} -> {}", e.source_label, e.target_label),
            e.count.to_string(),
        )
    }));
    let key_width = rows.iter().map(|(k, _)| k.chars().count()).max().unwrap_or(0);
    let value_width = rows.iter().map(|(_, v)| v.len()).max().unwrap_or(0);
    let mut out = String::new();
    for (k, v) in rows {
        let _ = writeln!(out, "{k:<key_width$}  {v:>value_width$}");
    }
    out
}

/// Raw BlogCatalog relation files for [`convert_blogcatalog`].
///
/// Each relation file holds two columns separated by a tab or a comma; `#`
/// comments and blank lines are skipped. `tags` maps tag ids to tag strings.
#[derive(Debug, Clone)]
pub struct BlogCatalogFiles {
    pub id_userid: PathBuf,
    pub userid_userid: PathBuf,
    pub userid_weblog: PathBuf,
    pub weblog_tag: PathBuf,
    pub tags: PathBuf,
}

fn read_pairs(path: &Path) -> Result<Vec<(String, String)>, IngestError> {
    let mut out = Vec::new();
    for (i, line) in open(path)?.lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let (a, b) = line
            .split_once('\t')
            .or_else(|| line.split_once(','))
            .ok_or_else(|| IngestError::Malformed {
                path: path.to_path_buf(),
                line: i + 1,
                message: "expected two columns".into(),
            })?;
        out.push((a.trim().to_string(), b.trim().to_string()));
    }
    Ok(out)
}

/// Converts raw BlogCatalog relations into the generic node and edge files.
///
/// Ids become `i<raw>` (label `person`), user ids `u<raw>` (label `userid`),
/// weblogs `w<raw>` (label `weblog`) and tags `C<raw>` labeled with their tag
/// string. Each distinct tag id is one node.
pub fn convert_blogcatalog(files: &BlogCatalogFiles, nodes_path: &Path, edges_path: &Path) -> Result<LabeledGraph, IngestError> {
    let tag_names: HashMap<String, String> = read_pairs(&files.tags)?.into_iter().collect();
    let mut nodes: Vec<NodeRecord> = Vec::new();
    let mut edges: Vec<EdgeRecord> = Vec::new();
    let mut relate = |path: &Path, from: (&str, &str), to: (&str, &str)| -> Result<(), IngestError> {
        for (a, b) in read_pairs(path)? {
            let src = format!("{}{a}", from.0);
            let dst = format!("{}{b}", to.0);
            let dst_label = if to.0 == "C" {
                tag_names.get(&b).cloned().ok_or_else(|| IngestError::Malformed {
                    path: files.tags.clone(),
                    line: 0,
                    message: format!("tag id {b} has no tag string"),
                })?
            } else {
                to.1.to_string()
            };
            nodes.push((src.clone(), from.1.to_string()));
            nodes.push((dst.clone(), dst_label));
            edges.push((src, dst, None));
        }
        Ok(())
    };
    relate(&files.id_userid, ("i", "person"), ("u", "userid"))?;
    relate(&files.userid_userid, ("u", "userid"), ("u", "userid"))?;
    relate(&files.userid_weblog, ("u", "userid"), ("w", "weblog"))?;
    relate(&files.weblog_tag, ("w", "weblog"), ("C", ""))?;
    let g = LabeledGraph::build(nodes, edges).map_err(|source| IngestError::Graph {
        path: files.id_userid.clone(),
        source,
    })?;
    save_graph(&g, nodes_path, edges_path)?;
    Ok(g)
}
