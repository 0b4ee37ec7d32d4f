use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Zipf};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{EdgeRecord, GraphError, LabeledGraph, NodeRecord};
use crate::query::{Category, QueryError, QueryGraph};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GenError {
    #[error("invalid generator spec: {0}")]
    Invalid(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Query(#[from] QueryError),
}

/// Generator input, read from JSON with a `"kind"` tag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GenSpec {
    /// Persons with private indicator trees; exact ground truth.
    Planted(PlantedSpec),
    /// Layered random graph with exact per-layer node and edge counts.
    Layered(LayeredSpec),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FocusSpec {
    /// Query node id.
    pub id: String,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemaElement {
    /// Query node id.
    pub id: String,
    pub label: String,
    pub category: Category,
    /// Parent element id; `None` hangs the element off the person.
    #[serde(default)]
    pub parent: Option<String>,
    /// Instances per parent instance, inclusive `[min, max]`, `min >= 1`.
    pub fanout: (usize, usize),
    /// Probability that a non-planted person has this element, given its parent.
    pub attach_prob: f64,
}

fn default_hop_bound() -> usize {
    2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedSpec {
    pub seed: u64,
    pub persons: usize,
    pub focus: FocusSpec,
    /// Optional NC parent of every person (e.g. an id owning a user id).
    #[serde(default)]
    pub owner: Option<FocusSpec>,
    pub schema: Vec<SchemaElement>,
    /// Persons that receive every schema element.
    pub planted_full: usize,
    /// Random person -> person edges per person.
    #[serde(default)]
    pub friend_rate: f64,
    /// Upper bound on `noise`-labeled children per person.
    #[serde(default)]
    pub noise_per_person: usize,
    /// Person-less element fragments per person.
    #[serde(default)]
    pub orphan_rate: f64,
    #[serde(default = "default_hop_bound")]
    pub hop_bound: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NamedNode {
    pub index: usize,
    #[serde(default)]
    pub id: Option<String>,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerSpec {
    pub name: String,
    pub id_prefix: String,
    /// Shared label; when absent each node gets `<name>-<index>`.
    #[serde(default)]
    pub label: Option<String>,
    pub count: usize,
    #[serde(default)]
    pub named: Vec<NamedNode>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkSpec {
    pub from: String,
    pub to: String,
    pub count: usize,
    /// Zipf exponent for target choice; uniform when absent.
    #[serde(default)]
    pub target_skew: Option<f64>,
    /// Give every target one incoming edge before sampling the rest.
    #[serde(default)]
    pub cover_targets: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayeredSpec {
    pub seed: u64,
    pub layers: Vec<LayerSpec>,
    pub links: Vec<LinkSpec>,
}

/// Expected outcome for one person.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TruthAnchor {
    pub focus: String,
    pub anchor: String,
    pub full_match: bool,
    pub survives: bool,
    pub has_red_flag: bool,
    /// Expected relevant set as `(query id, data id)` pairs, sorted.
    pub relevant: Vec<(String, String)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct GroundTruth {
    pub hop_bound: usize,
    pub anchors: Vec<TruthAnchor>,
}

impl GroundTruth {
    pub fn survivors(&self) -> impl Iterator<Item = &TruthAnchor> {
        self.anchors.iter().filter(|a| a.survives)
    }
}

pub fn generate_graph(spec: &GenSpec) -> Result<(LabeledGraph, GroundTruth), GenError> {
    match spec {
        GenSpec::Planted(p) => p.generate(),
        GenSpec::Layered(l) => Ok((l.generate()?, GroundTruth::default())),
    }
}

const NOISE_LABEL: &str = "noise";

fn padded(i: usize, total: usize) -> String {
    let width = total.saturating_sub(1).max(1).to_string().len();
    format!("{i:0width$}")
}

impl PlantedSpec {
    fn check(&self) -> Result<(), GenError> {
        let bad = |m: String| Err(GenError::Invalid(m));
        if self.schema.is_empty() {
            return bad("schema is empty".into());
        }
        if self.planted_full > self.persons {
            return bad(format!(
                "planted_full {} exceeds persons {}",
                self.planted_full, self.persons
            ));
        }
        if self.hop_bound == 0 {
            return bad("hop_bound must be at least 1".into());
        }
        for rate in [self.friend_rate, self.orphan_rate] {
            if !(rate.is_finite() && rate >= 0.0) {
                return bad(format!("rate {rate} must be a non-negative number"));
            }
        }
        let mut ids = HashSet::new();
        let mut labels = HashSet::from([NOISE_LABEL]);
        let roots = std::iter::once(&self.focus).chain(self.owner.as_ref());
        for root in roots {
            if !ids.insert(root.id.as_str()) || !labels.insert(root.label.as_str()) {
                return bad(format!("duplicate id or label at {}", root.id));
            }
        }
        for e in &self.schema {
            if let Some(p) = &e.parent {
                if !self.schema.iter().take_while(|x| x.id != e.id).any(|x| &x.id == p) {
                    return bad(format!("parent {p} of {} must be listed before it", e.id));
                }
            }
            if !ids.insert(e.id.as_str()) || !labels.insert(e.label.as_str()) {
                return bad(format!("duplicate id or label at {}", e.id));
            }
            if e.category == Category::QueryFocus {
                return bad(format!("schema element {} cannot be QF", e.id));
            }
            if e.fanout.0 == 0 || e.fanout.0 > e.fanout.1 {
                return bad(format!("fanout of {} must satisfy 1 <= min <= max", e.id));
            }
            if !(0.0..=1.0).contains(&e.attach_prob) {
                return bad(format!("attach_prob of {} must lie in [0, 1]", e.id));
            }
        }
        Ok(())
    }

    /// The query pattern implied by the schema.
    pub fn query(&self) -> Result<QueryGraph, GenError> {
        let mut nodes = vec![(self.focus.id.clone(), self.focus.label.clone(), Category::QueryFocus)];
        let mut edges = Vec::new();
        if let Some(o) = &self.owner {
            nodes.push((o.id.clone(), o.label.clone(), Category::NoCategory));
            edges.push((o.id.clone(), self.focus.id.clone()));
        }
        for e in &self.schema {
            nodes.push((e.id.clone(), e.label.clone(), e.category));
            edges.push((e.parent.clone().unwrap_or_else(|| self.focus.id.clone()), e.id.clone()));
        }
        Ok(QueryGraph::from_records(nodes, edges)?)
    }

    fn depth(&self, idx: usize) -> usize {
        let mut d = 1;
        let mut cur = &self.schema[idx];
        while let Some(p) = &cur.parent {
            cur = self.schema.iter().find(|x| &x.id == p).expect("checked parent");
            d += 1;
        }
        d
    }

    fn generate(&self) -> Result<(LabeledGraph, GroundTruth), GenError> {
        self.check()?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let n = self.schema.len();
        let parent_of: Vec<Option<usize>> = self
            .schema
            .iter()
            .map(|e| {
                e.parent
                    .as_ref()
                    .map(|p| self.schema.iter().position(|x| &x.id == p).expect("checked parent"))
            })
            .collect();
        let depth: Vec<usize> = (0..n).map(|i| self.depth(i)).collect();
        let planted: BTreeSet<usize> = sample(&mut rng, self.persons, self.planted_full).into_iter().collect();

        let mut nodes: Vec<NodeRecord> = Vec::new();
        let mut edges: Vec<EdgeRecord> = Vec::new();
        let mut truth = Vec::with_capacity(self.persons);
        let person_ids: Vec<String> = (0..self.persons)
            .map(|i| format!("{}{}", self.focus.id, padded(i, self.persons)))
            .collect();

        for (p, pid) in person_ids.iter().enumerate() {
            nodes.push((pid.clone(), self.focus.label.clone()));
            if let Some(o) = &self.owner {
                let oid = format!("{}{}", o.id, padded(p, self.persons));
                nodes.push((oid.clone(), o.label.clone()));
                edges.push((oid, pid.clone(), None));
            }
            let full = planted.contains(&p);
            let mut present: Vec<bool> = (0..n)
                .map(|i| full || rng.random_bool(self.schema[i].attach_prob))
                .collect();
            // Children of absent elements are absent.
            for i in 0..n {
                if let Some(par) = parent_of[i] {
                    present[i] &= present[par];
                }
            }
            if !full && present.iter().all(|&x| x) {
                let drop = rng.random_range(0..n);
                present[drop] = false;
                for i in 0..n {
                    if let Some(par) = parent_of[i] {
                        present[i] &= present[par];
                    }
                }
            }

            let mut instances: Vec<Vec<String>> = vec![Vec::new(); n];
            let mut relevant = Vec::new();
            for i in 0..n {
                if !present[i] {
                    continue;
                }
                let e = &self.schema[i];
                let parents: Vec<String> = match parent_of[i] {
                    Some(par) => instances[par].clone(),
                    None => vec![pid.clone()],
                };
                let mut k = 0;
                for parent in parents {
                    let copies = rng.random_range(e.fanout.0..=e.fanout.1);
                    for _ in 0..copies {
                        let id = format!("{}-{}-{k}", e.id, padded(p, self.persons));
                        k += 1;
                        nodes.push((id.clone(), e.label.clone()));
                        edges.push((parent.clone(), id.clone(), None));
                        if depth[i] <= self.hop_bound {
                            relevant.push((e.id.clone(), id.clone()));
                        }
                        instances[i].push(id);
                    }
                }
            }
            for k in 0..rng.random_range(0..=self.noise_per_person) {
                let id = format!("N-{}-{k}", padded(p, self.persons));
                nodes.push((id.clone(), NOISE_LABEL.to_string()));
                edges.push((pid.clone(), id, None));
            }
            relevant.sort();
            let category = |qid: &str| {
                self.schema
                    .iter()
                    .find(|e| e.id == qid)
                    .map(|e| e.category)
                    .expect("member of schema")
            };
            let survives = relevant.iter().any(|(q, _)| category(q).is_indicator());
            let has_red_flag = relevant.iter().any(|(q, _)| category(q) == Category::RedFlag);
            truth.push(TruthAnchor {
                focus: self.focus.id.clone(),
                anchor: pid.clone(),
                full_match: full,
                survives,
                has_red_flag,
                relevant,
            });
        }

        if self.persons > 1 {
            let friendships = (self.persons as f64 * self.friend_rate).round() as usize;
            let cap = self.persons * (self.persons - 1);
            let mut made = HashSet::new();
            while made.len() < friendships.min(cap) {
                let a = rng.random_range(0..self.persons);
                let b = rng.random_range(0..self.persons);
                if a != b && made.insert((a, b)) {
                    edges.push((person_ids[a].clone(), person_ids[b].clone(), None));
                }
            }
        }

        let orphans = (self.persons as f64 * self.orphan_rate).round() as usize;
        for o in 0..orphans {
            let i = rng.random_range(0..n);
            let e = &self.schema[i];
            let root = format!("O-{}-{}", padded(o, orphans), e.id);
            nodes.push((root.clone(), e.label.clone()));
            for (j, child) in self.schema.iter().enumerate() {
                if parent_of[j] == Some(i) {
                    let id = format!("{root}-{}", child.id);
                    nodes.push((id.clone(), child.label.clone()));
                    edges.push((root.clone(), id, None));
                }
            }
        }

        let g = LabeledGraph::build(nodes, edges)?;
        Ok((
            g,
            GroundTruth {
                hop_bound: self.hop_bound,
                anchors: truth,
            },
        ))
    }
}

impl LayeredSpec {
    fn check(&self) -> Result<HashMap<&str, usize>, GenError> {
        let bad = |m: String| Err(GenError::Invalid(m));
        let mut layer_of = HashMap::new();
        for (i, l) in self.layers.iter().enumerate() {
            if layer_of.insert(l.name.as_str(), i).is_some() {
                return bad(format!("duplicate layer {}", l.name));
            }
            if let Some(n) = l.named.iter().find(|n| n.index >= l.count) {
                return bad(format!("named node index {} outside layer {}", n.index, l.name));
            }
        }
        for link in &self.links {
            let (Some(&f), Some(&t)) = (layer_of.get(link.from.as_str()), layer_of.get(link.to.as_str())) else {
                return bad(format!("link {} -> {} names an unknown layer", link.from, link.to));
            };
            let (nf, nt) = (self.layers[f].count, self.layers[t].count);
            let possible = if f == t { nf * nt.saturating_sub(1) } else { nf * nt };
            if link.count > possible {
                return bad(format!(
                    "link {} -> {} asks for {} edges but only {possible} exist",
                    link.from, link.to, link.count
                ));
            }
            if link.cover_targets && (link.count < nt || (f == t && nt > 0 && nf < 2)) {
                return bad(format!("link {} -> {} cannot cover every target", link.from, link.to));
            }
            if let Some(s) = link.target_skew {
                if !(s.is_finite() && s > 0.0) {
                    return bad(format!("target_skew {s} must be positive"));
                }
            }
        }
        Ok(layer_of)
    }

    fn node_id(layer: &LayerSpec, i: usize) -> String {
        layer
            .named
            .iter()
            .find(|n| n.index == i)
            .and_then(|n| n.id.clone())
            .unwrap_or_else(|| format!("{}{}", layer.id_prefix, padded(i, layer.count)))
    }

    fn generate(&self) -> Result<LabeledGraph, GenError> {
        let layer_of = self.check()?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let ids: Vec<Vec<String>> = self
            .layers
            .iter()
            .map(|l| (0..l.count).map(|i| Self::node_id(l, i)).collect())
            .collect();
        let mut nodes: Vec<NodeRecord> = Vec::with_capacity(ids.iter().map(Vec::len).sum());
        for (l, layer_ids) in self.layers.iter().zip(&ids) {
            let named: BTreeMap<usize, &str> = l.named.iter().map(|n| (n.index, n.label.as_str())).collect();
            for (i, id) in layer_ids.iter().enumerate() {
                let label = match (named.get(&i), &l.label) {
                    (Some(n), _) => n.to_string(),
                    (None, Some(shared)) => shared.clone(),
                    (None, None) => format!("{}-{i}", l.name),
                };
                nodes.push((id.clone(), label));
            }
        }

        let mut edges: Vec<EdgeRecord> = Vec::with_capacity(self.links.iter().map(|l| l.count).sum());
        for link in &self.links {
            let (f, t) = (layer_of[link.from.as_str()], layer_of[link.to.as_str()]);
            let (nf, nt) = (self.layers[f].count, self.layers[t].count);
            let zipf = link
                .target_skew
                .map(|s| Zipf::new(nt as f64, s).map_err(|e| GenError::Invalid(e.to_string())))
                .transpose()?;
            let mut made: HashSet<u64> = HashSet::with_capacity(link.count);
            let mut add = |s: usize, d: usize, edges: &mut Vec<EdgeRecord>| {
                if (f == t && s == d) || !made.insert(((s as u64) << 32) | d as u64) {
                    return false;
                }
                edges.push((ids[f][s].clone(), ids[t][d].clone(), None));
                true
            };
            let mut placed = 0;
            if link.cover_targets {
                for d in 0..nt {
                    loop {
                        let s = rng.random_range(0..nf);
                        if add(s, d, &mut edges) {
                            break;
                        }
                    }
                }
                placed = nt;
            }
            while placed < link.count {
                let s = rng.random_range(0..nf);
                let d = match &zipf {
                    Some(z) => (z.sample(&mut rng) as usize).clamp(1, nt) - 1,
                    None => rng.random_range(0..nt),
                };
                if add(s, d, &mut edges) {
                    placed += 1;
                }
            }
        }
        Ok(LabeledGraph::build(nodes, edges)?)
    }
}
