//! Undirected graph and tour primitives shared by every other module.
//!
//! Graphs here are simple (no loops, no multi-edges) with dense integer
//! vertex ids. A (1,2)-TSP instance is specified by its weight-1 edge set;
//! a Graphic TSP instance is the graph itself, costed in the shortest-path
//! metric completion.

use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt::Write as _;
use thiserror::Error;

pub type VertexId = usize;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("tour is not a permutation of the vertex set")]
    InvalidTour,
    #[error("graph is disconnected; no shortest-path metric exists")]
    NoMetric,
    #[error("edge endpoint {0} is not a declared vertex")]
    UnknownVertex(VertexId),
    #[error("self-loop at vertex {0}")]
    SelfLoop(VertexId),
    #[error("duplicate edge {{{0}, {1}}}")]
    DuplicateEdge(VertexId, VertexId),
    #[error("instance too large for export: {0} vertices (limit {1})")]
    ExportTooLarge(usize, usize),
}

/// Simple undirected graph on vertices `0..n`, with optional per-vertex labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WeightedGraph {
    adj: Vec<BTreeSet<VertexId>>,
    labels: BTreeMap<VertexId, String>,
}

impl WeightedGraph {
    pub fn new(n: usize) -> Self {
        WeightedGraph {
            adj: vec![BTreeSet::new(); n],
            labels: BTreeMap::new(),
        }
    }

    pub fn add_vertex(&mut self) -> VertexId {
        self.adj.push(BTreeSet::new());
        self.adj.len() - 1
    }

    pub fn add_labeled_vertex(&mut self, label: impl Into<String>) -> VertexId {
        let v = self.add_vertex();
        self.labels.insert(v, label.into());
        v
    }

    pub fn set_label(&mut self, v: VertexId, label: impl Into<String>) {
        self.labels.insert(v, label.into());
    }

    pub fn label(&self, v: VertexId) -> Option<&str> {
        self.labels.get(&v).map(|s| s.as_str())
    }

    pub fn labels(&self) -> &BTreeMap<VertexId, String> {
        &self.labels
    }

    pub fn add_edge(&mut self, u: VertexId, v: VertexId) -> Result<(), GraphError> {
        if u >= self.adj.len() {
            return Err(GraphError::UnknownVertex(u));
        }
        if v >= self.adj.len() {
            return Err(GraphError::UnknownVertex(v));
        }
        if u == v {
            return Err(GraphError::SelfLoop(u));
        }
        if self.adj[u].contains(&v) {
            return Err(GraphError::DuplicateEdge(u.min(v), u.max(v)));
        }
        self.adj[u].insert(v);
        self.adj[v].insert(u);
        Ok(())
    }

    /// Removes an edge if present; returns whether it existed.
    pub fn remove_edge(&mut self, u: VertexId, v: VertexId) -> bool {
        let had = self.adj.get(u).is_some_and(|s| s.contains(&v));
        if had {
            self.adj[u].remove(&v);
            self.adj[v].remove(&u);
        }
        had
    }

    pub fn has_edge(&self, u: VertexId, v: VertexId) -> bool {
        self.adj.get(u).is_some_and(|s| s.contains(&v))
    }

    pub fn vertex_count(&self) -> usize {
        self.adj.len()
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(|s| s.len()).sum::<usize>() / 2
    }

    pub fn degree(&self, v: VertexId) -> usize {
        self.adj[v].len()
    }

    pub fn neighbors(&self, v: VertexId) -> impl Iterator<Item = VertexId> + '_ {
        self.adj[v].iter().copied()
    }

    /// Edges in canonical (min, max) order, lexicographically sorted.
    pub fn edges(&self) -> Vec<(VertexId, VertexId)> {
        let mut out = Vec::with_capacity(self.edge_count());
        for (u, nbrs) in self.adj.iter().enumerate() {
            for &v in nbrs.iter() {
                if u < v {
                    out.push((u, v));
                }
            }
        }
        out
    }

    pub fn is_connected(&self) -> bool {
        let n = self.vertex_count();
        if n == 0 {
            return true;
        }
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        let mut count = 1;
        while let Some(u) = queue.pop_front() {
            for &v in &self.adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    count += 1;
                    queue.push_back(v);
                }
            }
        }
        count == n
    }

    /// BFS distances from `from`; unreachable vertices are `None`.
    pub fn bfs_distances(&self, from: VertexId) -> Vec<Option<u32>> {
        let mut dist = vec![None; self.vertex_count()];
        dist[from] = Some(0);
        let mut queue = VecDeque::from([from]);
        while let Some(u) = queue.pop_front() {
            let du = dist[u].unwrap();
            for &v in &self.adj[u] {
                if dist[v].is_none() {
                    dist[v] = Some(du + 1);
                    queue.push_back(v);
                }
            }
        }
        dist
    }
}

/// A tour stored as an open sequence and interpreted cyclically; the wrap
/// pair is always charged.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tour {
    pub order: Vec<VertexId>,
}

impl Tour {
    pub fn new(order: Vec<VertexId>) -> Self {
        Tour { order }
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// True iff the order visits each of `0..n` exactly once.
    pub fn is_permutation_of(&self, n: usize) -> bool {
        if self.order.len() != n {
            return false;
        }
        let mut seen = vec![false; n];
        for &v in &self.order {
            if v >= n || seen[v] {
                return false;
            }
            seen[v] = true;
        }
        true
    }

    /// Cyclically consecutive pairs, including the wrap pair.
    pub fn pairs(&self) -> impl Iterator<Item = (VertexId, VertexId)> + '_ {
        let n = self.order.len();
        (0..n).map(move |i| (self.order[i], self.order[(i + 1) % n]))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DegreeProfile {
    pub max_degree: usize,
    pub is_regular: bool,
}

/// Cost of a tour under the (1,2) model: `cost = |V| + endpoints/2`, where
/// endpoints counts tour transitions that leave the weight-1 graph, a
/// double endpoint counting twice. Returns `(cost, endpoints)`.
pub fn tour_cost_12(g: &WeightedGraph, t: &Tour) -> Result<(u64, u64), GraphError> {
    if !t.is_permutation_of(g.vertex_count()) {
        return Err(GraphError::InvalidTour);
    }
    let hops = t.pairs().filter(|&(u, v)| !g.has_edge(u, v)).count() as u64;
    Ok((g.vertex_count() as u64 + hops, 2 * hops))
}

/// Cost of a tour in the shortest-path metric completion of `g`.
pub fn tour_cost_graphic(g: &WeightedGraph, t: &Tour) -> Result<u64, GraphError> {
    if !t.is_permutation_of(g.vertex_count()) {
        return Err(GraphError::InvalidTour);
    }
    let dist = metric_closure(g)?;
    Ok(t.pairs().map(|(u, v)| dist[u][v] as u64).sum())
}

/// All-pairs BFS distances. Errors if `g` is disconnected.
pub fn metric_closure(g: &WeightedGraph) -> Result<Vec<Vec<u32>>, GraphError> {
    let n = g.vertex_count();
    let mut out = Vec::with_capacity(n);
    for v in 0..n {
        let row = g.bfs_distances(v);
        let mut flat = Vec::with_capacity(n);
        for d in row {
            match d {
                Some(d) => flat.push(d),
                None => return Err(GraphError::NoMetric),
            }
        }
        out.push(flat);
    }
    Ok(out)
}

pub fn degree_profile(g: &WeightedGraph) -> DegreeProfile {
    let n = g.vertex_count();
    if n == 0 {
        return DegreeProfile {
            max_degree: 0,
            is_regular: true,
        };
    }
    let max_degree = (0..n).map(|v| g.degree(v)).max().unwrap();
    let is_regular = (0..n).all(|v| g.degree(v) == max_degree);
    DegreeProfile {
        max_degree,
        is_regular,
    }
}

/// JSON wire format: `{"n": int, "edges": [[u,v],...], "labels": {id: string}}`.
#[derive(Debug, Serialize, Deserialize)]
pub struct GraphJson {
    pub n: usize,
    pub edges: Vec<(VertexId, VertexId)>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub labels: BTreeMap<String, String>,
}

impl WeightedGraph {
    pub fn to_json(&self) -> GraphJson {
        GraphJson {
            n: self.vertex_count(),
            edges: self.edges(),
            labels: self
                .labels
                .iter()
                .map(|(k, v)| (k.to_string(), v.clone()))
                .collect(),
        }
    }

    pub fn from_json(j: &GraphJson) -> Result<Self, GraphError> {
        let mut g = WeightedGraph::new(j.n);
        for &(u, v) in &j.edges {
            g.add_edge(u, v)?;
        }
        for (k, v) in &j.labels {
            if let Ok(id) = k.parse::<usize>() {
                if id < j.n {
                    g.set_label(id, v.clone());
                }
            }
        }
        Ok(g)
    }

    /// DOT export for visual inspection. Vertices in `highlight` are drawn
    /// with a doublecircle shape (used for gadget ports).
    pub fn to_dot(&self, name: &str, highlight: &BTreeSet<VertexId>) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "graph {name} {{");
        for v in 0..self.vertex_count() {
            let mut attrs = Vec::new();
            if let Some(l) = self.label(v) {
                attrs.push(format!("label=\"{v}:{l}\""));
            }
            if highlight.contains(&v) {
                attrs.push("shape=doublecircle".to_string());
            }
            if attrs.is_empty() {
                let _ = writeln!(s, "  {v};");
            } else {
                let _ = writeln!(s, "  {v} [{}];", attrs.join(", "));
            }
        }
        for (u, v) in self.edges() {
            let _ = writeln!(s, "  {u} -- {v};");
        }
        s.push_str("}\n");
        s
    }

    /// TSPLIB EXPLICIT export (FULL_MATRIX of 1/2 weights) for (1,2)
    /// instances with at most `limit` vertices.
    pub fn to_tsplib(&self, name: &str, limit: usize) -> Result<String, GraphError> {
        let n = self.vertex_count();
        if n > limit {
            return Err(GraphError::ExportTooLarge(n, limit));
        }
        let mut s = String::new();
        let _ = writeln!(s, "NAME: {name}");
        let _ = writeln!(s, "TYPE: TSP");
        let _ = writeln!(s, "DIMENSION: {n}");
        let _ = writeln!(s, "EDGE_WEIGHT_TYPE: EXPLICIT");
        let _ = writeln!(s, "EDGE_WEIGHT_FORMAT: FULL_MATRIX");
        let _ = writeln!(s, "EDGE_WEIGHT_SECTION");
        for u in 0..n {
            let row: Vec<String> = (0..n)
                .map(|v| {
                    if u == v {
                        "0".to_string()
                    } else if self.has_edge(u, v) {
                        "1".to_string()
                    } else {
                        "2".to_string()
                    }
                })
                .collect();
            let _ = writeln!(s, "{}", row.join(" "));
        }
        s.push_str("EOF\n");
        Ok(s)
    }
}

/// Convenience constructors used throughout the tests.
pub fn path_graph(n: usize) -> WeightedGraph {
    let mut g = WeightedGraph::new(n);
    for i in 1..n {
        g.add_edge(i - 1, i).unwrap();
    }
    g
}

pub fn cycle_graph(n: usize) -> WeightedGraph {
    let mut g = path_graph(n);
    if n > 2 {
        g.add_edge(n - 1, 0).unwrap();
    }
    g
}

pub fn complete_graph(n: usize) -> WeightedGraph {
    let mut g = WeightedGraph::new(n);
    for u in 0..n {
        for v in u + 1..n {
            g.add_edge(u, v).unwrap();
        }
    }
    g
}

pub fn star_graph(leaves: usize) -> WeightedGraph {
    let mut g = WeightedGraph::new(leaves + 1);
    for l in 1..=leaves {
        g.add_edge(0, l).unwrap();
    }
    g
}
