//! Finite directed graphs, paths and the graph predicates used throughout.
//!
//! Edges run from `source` to `range`. The adjacency matrix is
//! `A[u][v] = #{g : r(g) = u, s(g) = v}`, so the left action of the vertex
//! algebra on the graph module goes through the range map.

use std::collections::HashMap;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("malformed graph json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("graph has no vertices")]
    NoVertices,
    #[error("duplicate vertex `{0}`")]
    DuplicateVertex(String),
    #[error("duplicate edge name `{0}`")]
    DuplicateEdge(String),
    #[error("edge `{edge}` refers to unknown vertex `{vertex}`")]
    DanglingEndpoint { edge: String, vertex: String },
    #[error("paths are not composable: source of the left path is `{left}`, range of the right path is `{right}`")]
    NotComposable { left: String, right: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Edge {
    pub name: String,
    pub source: usize,
    pub range: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    vertices: Vec<String>,
    edges: Vec<Edge>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GraphJson {
    vertices: Vec<String>,
    edges: Vec<EdgeJson>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EdgeJson {
    name: String,
    src: String,
    dst: String,
}

/// A path `α = α_1 … α_k` with `s(α_i) = r(α_{i+1})`, read right to left.
/// Length-zero paths are vertices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Path {
    edges: Vec<usize>,
    range: usize,
    source: usize,
}

impl Path {
    pub fn vertex(v: usize) -> Self {
        Path { edges: Vec::new(), range: v, source: v }
    }

    pub fn edges(&self) -> &[usize] {
        &self.edges
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn is_vertex(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn range(&self) -> usize {
        self.range
    }

    pub fn source(&self) -> usize {
        self.source
    }

    /// `self · other`, defined when `s(self) = r(other)`.
    pub fn concat(&self, other: &Path) -> Option<Path> {
        if self.source != other.range {
            return None;
        }
        let mut edges = self.edges.clone();
        edges.extend_from_slice(&other.edges);
        Some(Path { edges, range: self.range, source: other.source })
    }

    /// Splits into the first `k` edges and the rest.
    pub fn split_at(&self, k: usize, g: &Graph) -> (Path, Path) {
        assert!(k <= self.len());
        let head = g.path_from_edges(&self.edges[..k]).unwrap_or_else(|| Path::vertex(self.range));
        let tail = g.path_from_edges(&self.edges[k..]).unwrap_or_else(|| {
            Path::vertex(if k == 0 { self.range } else { g.edges[self.edges[k - 1]].source })
        });
        (head, tail)
    }

    /// If `self = prefix · rest`, returns `rest`.
    pub fn strip_prefix(&self, prefix: &Path) -> Option<Path> {
        if prefix.len() > self.len() || prefix.range != self.range {
            return None;
        }
        if self.edges[..prefix.len()] != prefix.edges[..] {
            return None;
        }
        Some(Path {
            edges: self.edges[prefix.len()..].to_vec(),
            range: prefix.source,
            source: self.source,
        })
    }

    /// The same edge sequence read in the opposite graph.
    pub fn reversed(&self) -> Path {
        let mut edges = self.edges.clone();
        edges.reverse();
        Path { edges, range: self.source, source: self.range }
    }
}

impl Graph {
    pub fn new(vertices: Vec<String>, edges: Vec<(String, String, String)>) -> Result<Self, GraphError> {
        if vertices.is_empty() {
            return Err(GraphError::NoVertices);
        }
        let mut index = HashMap::new();
        for (i, v) in vertices.iter().enumerate() {
            if index.insert(v.clone(), i).is_some() {
                return Err(GraphError::DuplicateVertex(v.clone()));
            }
        }
        let mut names = HashMap::new();
        let mut out = Vec::with_capacity(edges.len());
        for (name, src, dst) in edges {
            if names.insert(name.clone(), ()).is_some() {
                return Err(GraphError::DuplicateEdge(name));
            }
            let lookup = |v: &String| {
                index.get(v).copied().ok_or_else(|| GraphError::DanglingEndpoint {
                    edge: name.clone(),
                    vertex: v.clone(),
                })
            };
            let source = lookup(&src)?;
            let range = lookup(&dst)?;
            out.push(Edge { name, source, range });
        }
        Ok(Graph { vertices, edges: out })
    }

    /// Builds a graph with vertices `v0, v1, …` from an adjacency matrix in
    /// the `A[r][s]` convention.
    pub fn from_adjacency(a: &[Vec<u32>]) -> Self {
        let n = a.len();
        let vertices: Vec<String> = (0..n).map(|i| format!("v{i}")).collect();
        let mut edges = Vec::new();
        for (r, row) in a.iter().enumerate() {
            for (s, &count) in row.iter().enumerate() {
                for k in 0..count {
                    edges.push((format!("e{r}_{s}_{k}"), vertices[s].clone(), vertices[r].clone()));
                }
            }
        }
        Graph::new(vertices, edges).expect("adjacency graphs are well formed")
    }

    pub fn from_json_str(s: &str) -> Result<Self, GraphError> {
        let raw: GraphJson = serde_json::from_str(s)?;
        Graph::new(raw.vertices, raw.edges.into_iter().map(|e| (e.name, e.src, e.dst)).collect())
    }

    pub fn to_json_string(&self) -> String {
        let raw = GraphJson {
            vertices: self.vertices.clone(),
            edges: self
                .edges
                .iter()
                .map(|e| EdgeJson {
                    name: e.name.clone(),
                    src: self.vertices[e.source].clone(),
                    dst: self.vertices[e.range].clone(),
                })
                .collect(),
        };
        serde_json::to_string_pretty(&raw).expect("graph serialisation cannot fail")
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn vertex_name(&self, v: usize) -> &str {
        &self.vertices[v]
    }

    pub fn vertex_names(&self) -> &[String] {
        &self.vertices
    }

    pub fn edge(&self, e: usize) -> &Edge {
        &self.edges[e]
    }

    pub fn edge_list(&self) -> &[Edge] {
        &self.edges
    }

    pub fn vertex_index(&self, name: &str) -> Option<usize> {
        self.vertices.iter().position(|v| v == name)
    }

    pub fn edge_index(&self, name: &str) -> Option<usize> {
        self.edges.iter().position(|e| e.name == name)
    }

    /// `A[u][v] = #{g : r(g) = u, s(g) = v}`.
    pub fn adjacency(&self) -> Vec<Vec<u64>> {
        let n = self.vertex_count();
        let mut a = vec![vec![0u64; n]; n];
        for e in &self.edges {
            a[e.range][e.source] += 1;
        }
        a
    }

    pub fn in_degree(&self, v: usize) -> usize {
        self.edges.iter().filter(|e| e.range == v).count()
    }

    pub fn out_degree(&self, v: usize) -> usize {
        self.edges.iter().filter(|e| e.source == v).count()
    }

    /// Vertices receiving no edge. Their presence makes the left action on
    /// the graph module non-injective.
    pub fn sources(&self) -> Vec<usize> {
        (0..self.vertex_count()).filter(|&v| self.in_degree(v) == 0).collect()
    }

    /// Vertices emitting no edge.
    pub fn sinks(&self) -> Vec<usize> {
        (0..self.vertex_count()).filter(|&v| self.out_degree(v) == 0).collect()
    }

    pub fn has_sources(&self) -> bool {
        !self.sources().is_empty()
    }

    pub fn has_sinks(&self) -> bool {
        !self.sinks().is_empty()
    }

    fn bool_power_positive(&self, power: usize) -> bool {
        let n = self.vertex_count();
        let a: Vec<Vec<bool>> = self.adjacency().iter().map(|r| r.iter().map(|&x| x > 0).collect()).collect();
        let mut p = a.clone();
        for _ in 1..power {
            let mut next = vec![vec![false; n]; n];
            for i in 0..n {
                for k in 0..n {
                    if p[i][k] {
                        for j in 0..n {
                            next[i][j] |= a[k][j];
                        }
                    }
                }
            }
            p = next;
        }
        p.iter().all(|r| r.iter().all(|&x| x))
    }

    /// Strong connectivity of the underlying directed graph.
    pub fn is_irreducible(&self) -> bool {
        let n = self.vertex_count();
        let a = self.adjacency();
        (0..n).all(|start| {
            let mut seen = vec![false; n];
            let mut stack = vec![start];
            seen[start] = true;
            while let Some(u) = stack.pop() {
                for v in 0..n {
                    if a[v][u] > 0 && !seen[v] {
                        seen[v] = true;
                        stack.push(v);
                    }
                }
            }
            seen.iter().all(|&x| x)
        })
    }

    /// Some power of `A` is strictly positive. Wielandt's bound
    /// `(n-1)^2 + 1` makes the test finite.
    pub fn is_primitive(&self) -> bool {
        let n = self.vertex_count();
        self.bool_power_positive((n - 1) * (n - 1) + 1)
    }

    /// The opposite graph: every edge reversed, names kept.
    pub fn opposite(&self) -> Graph {
        Graph {
            vertices: self.vertices.clone(),
            edges: self
                .edges
                .iter()
                .map(|e| Edge { name: e.name.clone(), source: e.range, range: e.source })
                .collect(),
        }
    }

    /// The dual (edge) graph: one vertex per edge and one edge `(e,f)`
    /// whenever `s(e) = r(f)`, running from `f` to `e`.
    pub fn dual_graph(&self) -> Graph {
        let vertices: Vec<String> = self.edges.iter().map(|e| e.name.clone()).collect();
        let mut edges = Vec::new();
        for e in &self.edges {
            for f in &self.edges {
                if e.source == f.range {
                    edges.push((format!("({},{})", e.name, f.name), f.name.clone(), e.name.clone()));
                }
            }
        }
        Graph::new(vertices, edges).expect("edge names are distinct")
    }

    /// True when some ordered vertex pair carries two or more edges.
    pub fn has_multiple_edges(&self) -> bool {
        self.adjacency().iter().any(|r| r.iter().any(|&x| x >= 2))
    }

    pub fn edge_path(&self, e: usize) -> Path {
        let edge = &self.edges[e];
        Path { edges: vec![e], range: edge.range, source: edge.source }
    }

    /// Validates an edge sequence as a path.
    pub fn path_from_edges(&self, edges: &[usize]) -> Option<Path> {
        let first = edges.first()?;
        for w in edges.windows(2) {
            if self.edges[w[0]].source != self.edges[w[1]].range {
                return None;
            }
        }
        Some(Path {
            edges: edges.to_vec(),
            range: self.edges[*first].range,
            source: self.edges[*edges.last().unwrap()].source,
        })
    }

    pub fn path_from_names(&self, names: &[&str]) -> Option<Path> {
        let idx: Option<Vec<usize>> = names.iter().map(|n| self.edge_index(n)).collect();
        self.path_from_edges(&idx?)
    }

    pub fn compose(&self, left: &Path, right: &Path) -> Result<Path, GraphError> {
        left.concat(right).ok_or_else(|| GraphError::NotComposable {
            left: self.vertices[left.source].clone(),
            right: self.vertices[right.range].clone(),
        })
    }

    /// All paths of length exactly `k`, in lexicographic order of edge indices.
    pub fn paths_of_length(&self, k: usize) -> Vec<Path> {
        if k == 0 {
            return (0..self.vertex_count()).map(Path::vertex).collect();
        }
        let mut current: Vec<Path> = (0..self.edge_count()).map(|e| self.edge_path(e)).collect();
        for _ in 1..k {
            let mut next = Vec::new();
            for p in &current {
                for (f, edge) in self.edges.iter().enumerate() {
                    if edge.range == p.source {
                        let mut edges = p.edges.clone();
                        edges.push(f);
                        next.push(Path { edges, range: p.range, source: edge.source });
                    }
                }
            }
            current = next;
        }
        current
    }

    /// All paths of length at most `k`, shortest first.
    pub fn paths_up_to(&self, k: usize) -> Vec<Path> {
        (0..=k).flat_map(|j| self.paths_of_length(j)).collect()
    }

    pub fn path_label(&self, p: &Path) -> String {
        if p.is_vertex() {
            return self.vertices[p.range].clone();
        }
        p.edges.iter().map(|&e| self.edges[e].name.as_str()).collect::<Vec<_>>().join("")
    }
}

impl fmt::Display for Graph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "graph({} vertices, {} edges)", self.vertex_count(), self.edge_count())
    }
}

/// The bundled fixture graphs.
pub mod fixtures {
    use super::Graph;

    fn build(vertices: &[&str], edges: &[(&str, &str, &str)]) -> Graph {
        Graph::new(
            vertices.iter().map(|s| s.to_string()).collect(),
            edges.iter().map(|(n, s, d)| (n.to_string(), s.to_string(), d.to_string())).collect(),
        )
        .expect("fixture graphs are well formed")
    }

    /// One vertex, one loop. Its algebra is `C(S^1)`.
    pub fn single_loop() -> Graph {
        build(&["v"], &[("e", "v", "v")])
    }

    /// One vertex with `n` loops, the Cuntz algebra `O_n`.
    pub fn cuntz(n: usize) -> Graph {
        let names: Vec<String> = (1..=n).map(|i| format!("e{i}")).collect();
        let edges: Vec<(&str, &str, &str)> = names.iter().map(|n| (n.as_str(), "v", "v")).collect();
        build(&["v"], &edges)
    }

    /// Loop `e` at `v`, edge `f` from `v` to `w`, loop `g` at `w`.
    /// The algebra is quantum `SU(2)`.
    pub fn quantum_su2() -> Graph {
        build(&["v", "w"], &[("e", "v", "v"), ("f", "v", "w"), ("g", "w", "w")])
    }

    /// Loops `g1, g2` at `v`, edge `g3` from `w` to `v`, loop `g4` at `w`.
    pub fn two_loop_bridge() -> Graph {
        build(
            &["v", "w"],
            &[("g1", "v", "v"), ("g2", "v", "v"), ("g3", "w", "v"), ("g4", "w", "w")],
        )
    }

    /// Adjacency `[[1,1],[1,0]]`: a loop `a` at `u`, `b: u -> w`, `c: w -> u`.
    pub fn fibonacci() -> Graph {
        build(&["u", "w"], &[("a", "u", "u"), ("b", "u", "w"), ("c", "w", "u")])
    }

    /// All fixtures with their file stems.
    pub fn all() -> Vec<(&'static str, Graph)> {
        vec![
            ("loop", single_loop()),
            ("o2", cuntz(2)),
            ("o3", cuntz(3)),
            ("suq2", quantum_su2()),
            ("bridge", two_loop_bridge()),
            ("fibonacci", fibonacci()),
        ]
    }
}

/// A seeded random graph on `n` vertices with no sources and no sinks and
/// at most `max_mult` parallel edges per vertex pair.
pub fn random_graph(n: usize, max_mult: u32, seed: u64) -> Graph {
    assert!(n >= 1 && max_mult >= 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut a = vec![vec![0u32; n]; n];
    for row in a.iter_mut() {
        for x in row.iter_mut() {
            if rng.gen_bool(0.35) {
                *x = rng.gen_range(1..=max_mult);
            }
        }
    }
    for v in 0..n {
        if a[v].iter().all(|&x| x == 0) {
            let s = rng.gen_range(0..n);
            a[v][s] = 1;
        }
        if a.iter().all(|row| row[v] == 0) {
            let r = rng.gen_range(0..n);
            a[r][v] = 1;
        }
    }
    Graph::from_adjacency(&a)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn adjacency_of_fixtures() {
        assert_eq!(fixtures::quantum_su2().adjacency(), vec![vec![1, 0], vec![1, 1]]);
        assert_eq!(fixtures::two_loop_bridge().adjacency(), vec![vec![2, 1], vec![0, 1]]);
        assert_eq!(fixtures::fibonacci().adjacency(), vec![vec![1, 1], vec![1, 0]]);
    }

    #[test]
    fn predicates() {
        let g = fixtures::quantum_su2();
        assert!(!g.has_sources() && !g.has_sinks());
        assert!(!g.is_primitive());
        assert!(fixtures::cuntz(2).is_primitive());
        assert!(fixtures::fibonacci().is_primitive());
        let lonely = Graph::new(vec!["v".into()], vec![]).unwrap();
        assert!(lonely.has_sources() && lonely.has_sinks());
    }

    #[test]
    fn dual_graph_of_quantum_su2() {
        let d = fixtures::quantum_su2().dual_graph();
        let names: Vec<&str> = d.edge_list().iter().map(|e| e.name.as_str()).collect();
        assert_eq!(names, vec!["(e,e)", "(f,e)", "(g,f)", "(g,g)"]);
    }

    #[test]
    fn path_counts() {
        let g = fixtures::two_loop_bridge();
        let counts: Vec<usize> = (0..=2).map(|k| g.paths_of_length(k).len()).collect();
        assert_eq!(counts, vec![2, 4, 8]);
    }

    #[test]
    fn json_roundtrip_and_strictness() {
        let g = fixtures::two_loop_bridge();
        let back = Graph::from_json_str(&g.to_json_string()).unwrap();
        assert_eq!(g, back);
        let bad = r#"{"vertices":["v"],"edges":[{"name":"e","src":"v","dst":"v","w":1}]}"#;
        assert!(Graph::from_json_str(bad).is_err());
        let dangling = r#"{"vertices":["v"],"edges":[{"name":"e","src":"v","dst":"x"}]}"#;
        assert!(matches!(Graph::from_json_str(dangling), Err(GraphError::DanglingEndpoint { .. })));
    }

    #[test]
    fn random_graphs_have_no_sources_or_sinks() {
        for seed in 0..40 {
            let g = random_graph(1 + (seed as usize % 6), 2, seed);
            assert!(!g.has_sources() && !g.has_sinks());
        }
    }
}
