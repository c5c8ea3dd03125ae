//! Immutable directed graph with dense node ids and an edge-list loader.
//!
//! Every other module works against this representation: nodes are dense
//! `0..n` indices, adjacency lists are sorted ascending, and the original
//! input labels are kept around for output.

use std::collections::HashMap;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use thiserror::Error;

/// Dense node index in `[0, n)`.
#[derive(Copy, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct NodeId(pub u32);

impl NodeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Directed link `src -> dst`.
#[derive(Copy, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Edge {
    pub src: NodeId,
    pub dst: NodeId,
}

impl Edge {
    #[inline]
    pub fn new(src: NodeId, dst: NodeId) -> Self {
        Edge { src, dst }
    }
}

impl fmt::Display for Edge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}->{}", self.src, self.dst)
    }
}

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed edge list line {line}: {reason}")]
    MalformedLine { line: usize, reason: String },
    #[error("node {0} out of range (graph has {1} nodes)")]
    NodeOutOfRange(NodeId, usize),
    #[error("edge {0} not present in graph")]
    EdgeNotPresent(Edge),
}

/// Counters for input rows dropped during ingestion.
#[derive(Copy, Clone, Default, Debug, PartialEq, Eq)]
pub struct LoadStats {
    pub self_loops_dropped: usize,
    pub duplicates_dropped: usize,
}

/// Immutable directed graph. Self-loop free, at most one arc per ordered pair.
#[derive(Clone, Debug)]
pub struct Graph {
    out_adj: Vec<Vec<NodeId>>,
    in_adj: Vec<Vec<NodeId>>,
    edge_count: usize,
    labels: Vec<String>,
}

impl Graph {
    /// Builds a graph over `n` nodes from dense-id edges. Self-loops and
    /// duplicate arcs are dropped silently; labels default to the node index.
    pub fn from_edges(n: usize, edges: &[(u32, u32)]) -> Graph {
        let mut builder = GraphBuilder::with_nodes(n);
        for &(u, v) in edges {
            builder.add_edge(u, v);
        }
        builder.build()
    }

    #[inline]
    pub fn node_count(&self) -> usize {
        self.out_adj.len()
    }

    #[inline]
    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.out_adj.len() as u32).map(NodeId)
    }

    /// Outgoing neighbors of `u`, ascending by id.
    pub fn neighbors_out(&self, u: NodeId) -> Result<&[NodeId], GraphError> {
        self.out_adj
            .get(u.index())
            .map(|v| v.as_slice())
            .ok_or(GraphError::NodeOutOfRange(u, self.node_count()))
    }

    /// Incoming neighbors of `u`, ascending by id.
    pub fn neighbors_in(&self, u: NodeId) -> Result<&[NodeId], GraphError> {
        self.in_adj
            .get(u.index())
            .map(|v| v.as_slice())
            .ok_or(GraphError::NodeOutOfRange(u, self.node_count()))
    }

    #[inline]
    pub fn out_degree(&self, u: NodeId) -> usize {
        self.out_adj[u.index()].len()
    }

    #[inline]
    pub fn in_degree(&self, u: NodeId) -> usize {
        self.in_adj[u.index()].len()
    }

    /// Total degree (in + out), the `deg(u)` of an undirected-expanded graph.
    #[inline]
    pub fn degree(&self, u: NodeId) -> usize {
        self.out_degree(u) + self.in_degree(u)
    }

    pub fn contains_edge(&self, e: Edge) -> bool {
        match self.out_adj.get(e.src.index()) {
            Some(adj) => adj.binary_search(&e.dst).is_ok(),
            None => false,
        }
    }

    /// All edges in (src, dst) order.
    pub fn edges(&self) -> impl Iterator<Item = Edge> + '_ {
        self.out_adj.iter().enumerate().flat_map(|(u, adj)| {
            adj.iter()
                .map(move |&v| Edge::new(NodeId(u as u32), v))
        })
    }

    /// Original input label of a node (its index rendered as text when the
    /// graph was built programmatically).
    pub fn label(&self, u: NodeId) -> &str {
        &self.labels[u.index()]
    }

    pub fn node_by_label(&self, label: &str) -> Option<NodeId> {
        self.labels
            .iter()
            .position(|l| l == label)
            .map(|i| NodeId(i as u32))
    }

    /// Subgraph containing exactly `edges` and their endpoints, with fresh
    /// dense ids. Endpoint labels carry over from `self`.
    pub fn induced_subgraph(&self, edges: &[Edge]) -> Result<Graph, GraphError> {
        for &e in edges {
            if !self.contains_edge(e) {
                return Err(GraphError::EdgeNotPresent(e));
            }
        }
        let mut remap: HashMap<NodeId, u32> = HashMap::new();
        let mut labels = Vec::new();
        let mut dense = Vec::with_capacity(edges.len());
        let mut sorted: Vec<Edge> = edges.to_vec();
        sorted.sort();
        sorted.dedup();
        for e in &sorted {
            for endpoint in [e.src, e.dst] {
                if !remap.contains_key(&endpoint) {
                    remap.insert(endpoint, labels.len() as u32);
                    labels.push(self.label(endpoint).to_string());
                }
            }
            dense.push((remap[&e.src], remap[&e.dst]));
        }
        let mut builder = GraphBuilder::with_nodes(labels.len());
        builder.labels = labels;
        for (u, v) in dense {
            builder.add_edge(u, v);
        }
        Ok(builder.build())
    }

    /// Writes the graph in the edge-list format understood by
    /// [`load_edge_list`], one `src dst` line per arc, using original labels.
    pub fn write_edge_list<P: AsRef<Path>>(&self, path: P) -> Result<(), GraphError> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|source| GraphError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let mut w = BufWriter::new(file);
        for e in self.edges() {
            writeln!(w, "{}\t{}", self.label(e.src), self.label(e.dst)).map_err(|source| {
                GraphError::Io {
                    path: path.display().to_string(),
                    source,
                }
            })?;
        }
        w.flush().map_err(|source| GraphError::Io {
            path: path.display().to_string(),
            source,
        })
    }
}

/// Accumulates edges (deduplicating, dropping self-loops) and freezes into a
/// [`Graph`] with sorted adjacency.
pub struct GraphBuilder {
    out_adj: Vec<Vec<NodeId>>,
    labels: Vec<String>,
    stats: LoadStats,
}

impl GraphBuilder {
    pub fn with_nodes(n: usize) -> Self {
        GraphBuilder {
            out_adj: vec![Vec::new(); n],
            labels: (0..n).map(|i| i.to_string()).collect(),
            stats: LoadStats::default(),
        }
    }

    /// Adds `u -> v`, growing the node set as needed. Returns false when the
    /// arc was dropped (self-loop or duplicate).
    pub fn add_edge(&mut self, u: u32, v: u32) -> bool {
        if u == v {
            self.stats.self_loops_dropped += 1;
            return false;
        }
        let needed = (u.max(v) as usize) + 1;
        if needed > self.out_adj.len() {
            for i in self.out_adj.len()..needed {
                self.labels.push(i.to_string());
            }
            self.out_adj.resize_with(needed, Vec::new);
        }
        let adj = &mut self.out_adj[u as usize];
        if adj.contains(&NodeId(v)) {
            self.stats.duplicates_dropped += 1;
            return false;
        }
        adj.push(NodeId(v));
        true
    }

    pub fn stats(&self) -> LoadStats {
        self.stats
    }

    pub fn build(mut self) -> Graph {
        let n = self.out_adj.len();
        let mut in_adj = vec![Vec::new(); n];
        let mut edge_count = 0;
        for (u, adj) in self.out_adj.iter_mut().enumerate() {
            adj.sort_unstable();
            edge_count += adj.len();
            for &v in adj.iter() {
                in_adj[v.index()].push(NodeId(u as u32));
            }
        }
        // in_adj is already ascending: u grows monotonically in the loop.
        Graph {
            out_adj: self.out_adj,
            in_adj,
            edge_count,
            labels: self.labels,
        }
    }
}

/// Loads a whitespace-separated edge list. Lines starting with `#` and blank
/// lines are skipped; arbitrary labels are remapped to dense ids in first-seen
/// order. With `directed = false` every line yields both orientations.
pub fn load_edge_list<P: AsRef<Path>>(
    path: P,
    directed: bool,
) -> Result<(Graph, LoadStats), GraphError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| GraphError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let reader = BufReader::new(file);

    let mut ids: HashMap<String, u32> = HashMap::new();
    let mut builder = GraphBuilder::with_nodes(0);
    let mut labels: Vec<String> = Vec::new();

    for (line_no, line) in reader.lines().enumerate() {
        let line = line.map_err(|source| GraphError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut parts = trimmed.split_whitespace();
        let (a, b) = match (parts.next(), parts.next()) {
            (Some(a), Some(b)) => (a, b),
            _ => {
                return Err(GraphError::MalformedLine {
                    line: line_no + 1,
                    reason: format!("expected two labels, got {trimmed:?}"),
                })
            }
        };
        if parts.next().is_some() {
            return Err(GraphError::MalformedLine {
                line: line_no + 1,
                reason: format!("expected two labels, got {trimmed:?}"),
            });
        }
        let mut intern = |label: &str| -> u32 {
            *ids.entry(label.to_string()).or_insert_with(|| {
                labels.push(label.to_string());
                (labels.len() - 1) as u32
            })
        };
        let u = intern(a);
        let v = intern(b);
        builder.add_edge(u, v);
        if !directed && u != v {
            builder.add_edge(v, u);
        }
    }

    builder.labels = labels;
    // Labels may outnumber adjacency rows when trailing nodes are isolated.
    if builder.labels.len() > builder.out_adj.len() {
        builder.out_adj.resize_with(builder.labels.len(), Vec::new);
    }
    let stats = builder.stats();
    Ok((builder.build(), stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write as _;

    fn write_temp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn loads_directed_two_line_file() {
        let f = write_temp("a b\nb c\n");
        let (g, stats) = load_edge_list(f.path(), true).unwrap();
        assert_eq!(g.node_count(), 3);
        assert_eq!(g.edge_count(), 2);
        assert_eq!(stats, LoadStats::default());
    }

    #[test]
    fn drops_self_loops_and_duplicates() {
        let f = write_temp("a b\nb a\na a\na b\n");
        let (g, stats) = load_edge_list(f.path(), true).unwrap();
        assert_eq!(g.node_count(), 2);
        assert_eq!(g.edge_count(), 2);
        assert_eq!(stats.self_loops_dropped, 1);
        assert_eq!(stats.duplicates_dropped, 1);
    }

    #[test]
    fn undirected_expands_both_arcs() {
        let f = write_temp("# comment\na b\n\nb c\n");
        let (g, _) = load_edge_list(f.path(), false).unwrap();
        assert_eq!(g.node_count(), 3);
        assert_eq!(g.edge_count(), 4);
        let a = g.node_by_label("a").unwrap();
        let b = g.node_by_label("b").unwrap();
        assert!(g.contains_edge(Edge::new(a, b)));
        assert!(g.contains_edge(Edge::new(b, a)));
    }

    #[test]
    fn malformed_line_reports_number() {
        let f = write_temp("a b\nc\n");
        let err = load_edge_list(f.path(), true).unwrap_err();
        match err {
            GraphError::MalformedLine { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn neighbors_out_is_sorted_and_empty_for_sinks() {
        // star: center 0 with leaves 3, 1, 2 inserted out of order
        let g = Graph::from_edges(4, &[(0, 3), (0, 1), (0, 2)]);
        let ns = g.neighbors_out(NodeId(0)).unwrap();
        assert_eq!(ns, &[NodeId(1), NodeId(2), NodeId(3)]);
        assert!(g.neighbors_out(NodeId(3)).unwrap().is_empty());
        assert!(matches!(
            g.neighbors_out(NodeId(9)),
            Err(GraphError::NodeOutOfRange(..))
        ));
    }

    #[test]
    fn path_neighbors() {
        let g = Graph::from_edges(3, &[(0, 1), (1, 2)]);
        assert_eq!(g.neighbors_out(NodeId(0)).unwrap(), &[NodeId(1)]);
        assert!(g.neighbors_out(NodeId(2)).unwrap().is_empty());
    }

    #[test]
    fn induced_subgraph_single_edge_of_triangle() {
        let g = Graph::from_edges(3, &[(0, 1), (1, 2), (2, 0)]);
        let sub = g
            .induced_subgraph(&[Edge::new(NodeId(0), NodeId(1))])
            .unwrap();
        assert_eq!(sub.node_count(), 2);
        assert_eq!(sub.edge_count(), 1);
    }

    #[test]
    fn induced_subgraph_identity_and_empty() {
        let g = Graph::from_edges(3, &[(0, 1), (1, 2), (2, 0)]);
        let all: Vec<Edge> = g.edges().collect();
        let sub = g.induced_subgraph(&all).unwrap();
        assert_eq!(sub.node_count(), g.node_count());
        assert_eq!(sub.edge_count(), g.edge_count());

        let empty = g.induced_subgraph(&[]).unwrap();
        assert_eq!(empty.node_count(), 0);
        assert_eq!(empty.edge_count(), 0);
    }

    #[test]
    fn induced_subgraph_rejects_foreign_edge() {
        let g = Graph::from_edges(3, &[(0, 1)]);
        let err = g.induced_subgraph(&[Edge::new(NodeId(1), NodeId(0))]);
        assert!(matches!(err, Err(GraphError::EdgeNotPresent(_))));
    }

    #[test]
    fn degree_sums_match_edge_count() {
        let g = Graph::from_edges(5, &[(0, 1), (0, 2), (1, 2), (3, 4), (4, 0)]);
        let out: usize = g.nodes().map(|u| g.out_degree(u)).sum();
        let ins: usize = g.nodes().map(|u| g.in_degree(u)).sum();
        assert_eq!(out, g.edge_count());
        assert_eq!(ins, g.edge_count());
    }

    #[test]
    fn adjacency_round_trip_via_file() {
        let g = Graph::from_edges(4, &[(0, 1), (1, 2), (2, 3), (3, 0), (0, 2)]);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.txt");
        g.write_edge_list(&path).unwrap();
        let (g2, stats) = load_edge_list(&path, true).unwrap();
        assert_eq!(stats, LoadStats::default());
        assert_eq!(g2.node_count(), g.node_count());
        assert_eq!(g2.edge_count(), g.edge_count());
        // same labelled edge set
        let set1: std::collections::BTreeSet<(String, String)> = g
            .edges()
            .map(|e| (g.label(e.src).to_string(), g.label(e.dst).to_string()))
            .collect();
        let set2: std::collections::BTreeSet<(String, String)> = g2
            .edges()
            .map(|e| (g2.label(e.src).to_string(), g2.label(e.dst).to_string()))
            .collect();
        assert_eq!(set1, set2);
    }
}
