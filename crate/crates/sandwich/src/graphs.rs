//! Core graph and degree-sequence types, file I/O, feasibility checks, and
//! spectral diagnostics.
//!
//! Vertices are `0..n-1` everywhere, in files and in APIs. Adjacency is kept
//! as bitset rows so that codegree counting costs O(n/64) per vertex pair.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("vertex {vertex} out of range for graph on {n} vertices")]
    VertexOutOfRange { vertex: usize, n: usize },
    #[error("self-loop at vertex {0} is not allowed")]
    SelfLoop(usize),
    #[error("duplicate edge {0}-{1}")]
    DuplicateEdge(usize, usize),
    #[error("degree {degree} at position {index} exceeds n-1 = {max}")]
    DegreeOutOfRange {
        index: usize,
        degree: usize,
        max: usize,
    },
}

#[derive(Debug, Error)]
pub enum FileFormatError {
    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// A labeled simple graph on vertices `0..n-1`.
///
/// Immutable after construction; cheap to clone and safe to share across
/// threads.
#[derive(Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    words: usize,
    bits: Vec<u64>,
    deg: Vec<usize>,
    m: usize,
}

impl fmt::Debug for Graph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Graph(n={}, m={}, edges=", self.n, self.m)?;
        f.debug_list().entries(self.edges()).finish()?;
        write!(f, ")")
    }
}

impl Graph {
    pub fn empty(n: usize) -> Graph {
        let words = n.div_ceil(64);
        Graph {
            n,
            words,
            bits: vec![0; n * words],
            deg: vec![0; n],
            m: 0,
        }
    }

    pub fn complete(n: usize) -> Graph {
        let mut g = Graph::empty(n);
        for u in 0..n {
            for v in (u + 1)..n {
                g.insert_edge(u, v);
            }
        }
        g
    }

    /// Cycle `0-1-...-(n-1)-0`; handy in tests and examples.
    pub fn cycle(n: usize) -> Graph {
        let mut g = Graph::empty(n);
        if n >= 3 {
            for u in 0..n {
                let v = (u + 1) % n;
                g.insert_edge(u.min(v), u.max(v));
            }
        }
        g
    }

    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Graph, GraphError> {
        let mut g = Graph::empty(n);
        for &(u, v) in edges {
            if u == v {
                return Err(GraphError::SelfLoop(u));
            }
            if u >= n {
                return Err(GraphError::VertexOutOfRange { vertex: u, n });
            }
            if v >= n {
                return Err(GraphError::VertexOutOfRange { vertex: v, n });
            }
            if g.has_edge(u, v) {
                return Err(GraphError::DuplicateEdge(u.min(v), u.max(v)));
            }
            g.insert_edge(u, v);
        }
        Ok(g)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.m
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.bits[u * self.words + v / 64] >> (v % 64) & 1 == 1
    }

    pub fn degree(&self, v: usize) -> usize {
        self.deg[v]
    }

    pub fn max_degree(&self) -> usize {
        self.deg.iter().copied().max().unwrap_or(0)
    }

    pub fn degree_sequence(&self) -> DegreeSequence {
        DegreeSequence::new(self.deg.clone()).expect("degrees of a simple graph are always valid")
    }

    /// Edges in lexicographic order, each as `(u, v)` with `u < v`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n).flat_map(move |u| self.neighbors(u).filter(move |&v| v > u).map(move |v| (u, v)))
    }

    pub fn neighbors(&self, u: usize) -> impl Iterator<Item = usize> + '_ {
        let row = &self.bits[u * self.words..(u + 1) * self.words];
        row.iter().enumerate().flat_map(|(w, &word)| {
            std::iter::successors(Some(word), |&x| Some(x & (x - 1)))
                .take_while(|&x| x != 0)
                .map(move |x| w * 64 + x.trailing_zeros() as usize)
        })
    }

    /// Number of common neighbors of `u` and `v`.
    pub fn codegree(&self, u: usize, v: usize) -> usize {
        let ru = &self.bits[u * self.words..(u + 1) * self.words];
        let rv = &self.bits[v * self.words..(v + 1) * self.words];
        ru.iter()
            .zip(rv)
            .map(|(a, b)| (a & b).count_ones() as usize)
            .sum()
    }

    pub fn complement(&self) -> Graph {
        let mut g = Graph::empty(self.n);
        for u in 0..self.n {
            for v in (u + 1)..self.n {
                if !self.has_edge(u, v) {
                    g.insert_edge(u, v);
                }
            }
        }
        g
    }

    pub fn is_subgraph_of(&self, other: &Graph) -> bool {
        assert_eq!(self.n, other.n, "subgraph check needs equal vertex sets");
        self.bits
            .iter()
            .zip(&other.bits)
            .all(|(a, b)| a & !b == 0)
    }

    /// New graph with the edges of `remove` deleted (edges absent from `self`
    /// are ignored).
    pub fn minus(&self, remove: &Graph) -> Graph {
        assert_eq!(self.n, remove.n);
        let mut g = self.clone();
        for (u, v) in remove.edges() {
            if g.has_edge(u, v) {
                g.remove_edge(u, v);
            }
        }
        g
    }

    pub fn union(&self, other: &Graph) -> Graph {
        assert_eq!(self.n, other.n);
        let mut g = self.clone();
        for (u, v) in other.edges() {
            if !g.has_edge(u, v) {
                g.insert_edge(u, v);
            }
        }
        g
    }

    /// Connected components that are bipartite (an isolated vertex counts as
    /// a bipartite component). Returns the vertex set of the first one found.
    pub fn bipartite_component(&self) -> Option<Vec<usize>> {
        let mut color = vec![-1i8; self.n];
        for start in 0..self.n {
            if color[start] >= 0 {
                continue;
            }
            let mut comp = vec![start];
            let mut queue = vec![start];
            color[start] = 0;
            let mut bipartite = true;
            while let Some(u) = queue.pop() {
                for v in self.neighbors(u) {
                    if color[v] < 0 {
                        color[v] = 1 - color[u];
                        comp.push(v);
                        queue.push(v);
                    } else if color[v] == color[u] {
                        bipartite = false;
                    }
                }
            }
            if bipartite {
                comp.sort_unstable();
                return Some(comp);
            }
        }
        None
    }

    pub(crate) fn insert_edge(&mut self, u: usize, v: usize) {
        debug_assert!(u != v && u < self.n && v < self.n && !self.has_edge(u, v));
        self.bits[u * self.words + v / 64] |= 1 << (v % 64);
        self.bits[v * self.words + u / 64] |= 1 << (u % 64);
        self.deg[u] += 1;
        self.deg[v] += 1;
        self.m += 1;
    }

    pub(crate) fn remove_edge(&mut self, u: usize, v: usize) {
        debug_assert!(self.has_edge(u, v));
        self.bits[u * self.words + v / 64] &= !(1 << (v % 64));
        self.bits[v * self.words + u / 64] &= !(1 << (u % 64));
        self.deg[u] -= 1;
        self.deg[v] -= 1;
        self.m -= 1;
    }
}

/// A multigraph on `0..n-1`: an edge multiset with nonnegative multiplicities.
#[derive(Clone, Debug, Default)]
pub struct Multigraph {
    n: usize,
    mult: BTreeMap<(usize, usize), u64>,
}

impl Multigraph {
    pub fn empty(n: usize) -> Multigraph {
        Multigraph {
            n,
            mult: BTreeMap::new(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn add_edge(&mut self, u: usize, v: usize) {
        assert!(u != v && u < self.n && v < self.n);
        *self.mult.entry((u.min(v), u.max(v))).or_insert(0) += 1;
    }

    pub fn multiplicity(&self, u: usize, v: usize) -> u64 {
        self.mult
            .get(&(u.min(v), u.max(v)))
            .copied()
            .unwrap_or(0)
    }

    /// Total multiplicity over all edges.
    pub fn total_multiplicity(&self) -> u64 {
        self.mult.values().sum()
    }

    /// Number of distinct edges in the support.
    pub fn support_size(&self) -> usize {
        self.mult.len()
    }

    /// The simplification `G ◁ M`: the simple graph with exactly the edges of
    /// positive multiplicity.
    pub fn simplify(&self) -> Graph {
        let mut g = Graph::empty(self.n);
        for &(u, v) in self.mult.keys() {
            g.insert_edge(u, v);
        }
        g
    }

    pub fn support_subset_of(&self, other: &Multigraph) -> bool {
        self.mult
            .keys()
            .all(|&(u, v)| other.multiplicity(u, v) > 0)
    }
}

/// An integer degree vector with its feasibility metadata.
#[derive(Clone, PartialEq, Eq)]
pub struct DegreeSequence {
    d: Vec<usize>,
}

impl fmt::Debug for DegreeSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "DegreeSequence({:?})", self.d)
    }
}

impl DegreeSequence {
    /// Requires `0 <= d_j <= n-1` where `n` is the vector length.
    pub fn new(d: Vec<usize>) -> Result<DegreeSequence, GraphError> {
        let n = d.len();
        for (index, &degree) in d.iter().enumerate() {
            if n == 0 || degree > n - 1 {
                return Err(GraphError::DegreeOutOfRange {
                    index,
                    degree,
                    max: n.saturating_sub(1),
                });
            }
        }
        Ok(DegreeSequence { d })
    }

    pub fn regular(n: usize, d: usize) -> Result<DegreeSequence, GraphError> {
        DegreeSequence::new(vec![d; n])
    }

    pub fn len(&self) -> usize {
        self.d.len()
    }

    pub fn is_empty(&self) -> bool {
        self.d.is_empty()
    }

    pub fn get(&self, j: usize) -> usize {
        self.d[j]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.d
    }

    /// Δ(d): the maximum entry.
    pub fn max_degree(&self) -> usize {
        self.d.iter().copied().max().unwrap_or(0)
    }

    pub fn min_degree(&self) -> usize {
        self.d.iter().copied().min().unwrap_or(0)
    }

    /// R(d) = max − min.
    pub fn range(&self) -> usize {
        self.max_degree() - self.min_degree()
    }

    pub fn sum(&self) -> usize {
        self.d.iter().sum()
    }

    /// M = ½ Σ d_j, defined only when the sum is even.
    pub fn edge_count(&self) -> Option<usize> {
        let s = self.sum();
        (s % 2 == 0).then_some(s / 2)
    }

    /// Erdős–Gallai test: true iff some simple graph realizes this sequence.
    pub fn is_graphical(&self) -> bool {
        if self.sum() % 2 != 0 {
            return false;
        }
        let mut d = self.d.clone();
        d.sort_unstable_by(|a, b| b.cmp(a));
        let n = d.len();
        let prefix: Vec<usize> = d
            .iter()
            .scan(0usize, |acc, &x| {
                *acc += x;
                Some(*acc)
            })
            .collect();
        for k in 1..=n {
            let lhs = prefix[k - 1];
            let mut rhs = k * (k - 1);
            for &dj in &d[k..] {
                rhs += dj.min(k);
            }
            if lhs > rhs {
                return false;
            }
        }
        true
    }

    /// The complement sequence `(n-1)·1 − d`.
    pub fn complement(&self) -> DegreeSequence {
        let n = self.d.len();
        DegreeSequence {
            d: self.d.iter().map(|&x| n - 1 - x).collect(),
        }
    }
}

impl From<&Graph> for DegreeSequence {
    fn from(g: &Graph) -> Self {
        g.degree_sequence()
    }
}

/// Result of the pairwise common-neighbor check.
#[derive(Clone, Debug, serde::Serialize)]
pub struct CodegreeReport {
    pub pass: bool,
    pub min_codegree: usize,
    pub max_codegree: usize,
    pub lower_bound: f64,
    pub upper_bound: f64,
}

/// Checks that every unordered vertex pair has its common-neighbor count in
/// `[γΔ²/n, Δ²/(γn)]`.
pub fn check_a1(g: &Graph, gamma: f64) -> CodegreeReport {
    let n = g.n();
    let delta = g.max_degree() as f64;
    let lower_bound = gamma * delta * delta / n as f64;
    let upper_bound = delta * delta / (gamma * n as f64);
    let mut min_codegree = usize::MAX;
    let mut max_codegree = 0;
    for u in 0..n {
        for v in (u + 1)..n {
            let c = g.codegree(u, v);
            min_codegree = min_codegree.min(c);
            max_codegree = max_codegree.max(c);
        }
    }
    if n < 2 {
        min_codegree = 0;
    }
    let pass = n < 2
        || ((min_codegree as f64) >= lower_bound && (max_codegree as f64) <= upper_bound);
    CodegreeReport {
        pass,
        min_codegree,
        max_codegree,
        lower_bound,
        upper_bound,
    }
}

/// Minimum eigenvalue of the signless Laplacian D + A, the matrix of the
/// quadratic form Σ_{jk∈G} (x_j+x_k)². Zero iff G has a bipartite component.
pub fn signless_laplacian_min_eig(g: &Graph) -> f64 {
    let n = g.n();
    if n == 0 {
        return 0.0;
    }
    let mut q = DMatrix::<f64>::zeros(n, n);
    for v in 0..n {
        q[(v, v)] = g.degree(v) as f64;
    }
    for (u, v) in g.edges() {
        q[(u, v)] = 1.0;
        q[(v, u)] = 1.0;
    }
    q.symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

fn parse_usize(
    token: &str,
    path: &str,
    line: usize,
    what: &str,
) -> Result<usize, FileFormatError> {
    token.parse().map_err(|_| FileFormatError::Parse {
        path: path.to_string(),
        line,
        message: format!("invalid {what}: {token:?}"),
    })
}

/// Parses the edge-list format: first line `n m`, then `m` lines `u v` with
/// `0 <= u < v < n`.
pub fn parse_edge_list(text: &str, path: &str) -> Result<Graph, FileFormatError> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| FileFormatError::Parse {
        path: path.to_string(),
        line: 1,
        message: "empty file".to_string(),
    })?;
    let mut it = header.split_whitespace();
    let n = parse_usize(it.next().unwrap_or(""), path, 1, "vertex count")?;
    let m = parse_usize(it.next().unwrap_or(""), path, 1, "edge count")?;
    if it.next().is_some() {
        return Err(FileFormatError::Parse {
            path: path.to_string(),
            line: 1,
            message: "expected exactly two header fields".to_string(),
        });
    }
    let mut g = Graph::empty(n);
    let mut seen = 0usize;
    for (idx, raw) in lines {
        let line_no = idx + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let mut it = raw.split_whitespace();
        let u = parse_usize(it.next().unwrap_or(""), path, line_no, "vertex id")?;
        let v = parse_usize(it.next().unwrap_or(""), path, line_no, "vertex id")?;
        if it.next().is_some() {
            return Err(FileFormatError::Parse {
                path: path.to_string(),
                line: line_no,
                message: "expected exactly two fields".to_string(),
            });
        }
        if u == v {
            return Err(FileFormatError::Parse {
                path: path.to_string(),
                line: line_no,
                message: format!("self-loop {u} {v}"),
            });
        }
        if u > v {
            return Err(FileFormatError::Parse {
                path: path.to_string(),
                line: line_no,
                message: format!("edge must satisfy u < v, got {u} {v}"),
            });
        }
        if v >= n {
            return Err(FileFormatError::Parse {
                path: path.to_string(),
                line: line_no,
                message: format!("vertex id {v} out of range (n = {n})"),
            });
        }
        if g.has_edge(u, v) {
            return Err(FileFormatError::Parse {
                path: path.to_string(),
                line: line_no,
                message: format!("duplicate edge {u} {v}"),
            });
        }
        g.insert_edge(u, v);
        seen += 1;
    }
    if seen != m {
        return Err(FileFormatError::Parse {
            path: path.to_string(),
            line: text.lines().count(),
            message: format!("header promised {m} edges, found {seen}"),
        });
    }
    Ok(g)
}

pub fn format_edge_list(g: &Graph) -> String {
    let mut out = format!("{} {}\n", g.n(), g.edge_count());
    for (u, v) in g.edges() {
        out.push_str(&format!("{u} {v}\n"));
    }
    out
}

pub fn read_edge_list(path: impl AsRef<Path>) -> Result<Graph, FileFormatError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| FileFormatError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_edge_list(&text, &path.display().to_string())
}

pub fn write_edge_list(g: &Graph, path: impl AsRef<Path>) -> Result<(), FileFormatError> {
    let path = path.as_ref();
    fs::write(path, format_edge_list(g)).map_err(|source| FileFormatError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Parses a degree file: whitespace-separated nonnegative integers; the
/// sequence length is the token count.
pub fn parse_degrees(text: &str, path: &str) -> Result<DegreeSequence, FileFormatError> {
    let tokens: Vec<&str> = text.split_whitespace().collect();
    let mut d = Vec::with_capacity(tokens.len());
    for tok in &tokens {
        d.push(parse_usize(tok, path, 1, "degree")?);
    }
    DegreeSequence::new(d).map_err(|e| FileFormatError::Parse {
        path: path.to_string(),
        line: 1,
        message: e.to_string(),
    })
}

pub fn read_degrees(path: impl AsRef<Path>) -> Result<DegreeSequence, FileFormatError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| FileFormatError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_degrees(&text, &path.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complement_of_complete_is_empty() {
        let g = Graph::complete(4).complement();
        assert_eq!(g.edge_count(), 0);
        let k3 = Graph::empty(3).complement();
        assert_eq!(k3.edge_count(), 3);
    }

    #[test]
    fn complement_of_c5_is_two_regular() {
        let c5 = Graph::cycle(5);
        let co = c5.complement();
        assert!((0..5).all(|v| co.degree(v) == 2));
        assert_eq!(co.complement(), c5);
    }

    #[test]
    fn graphical_examples() {
        assert!(DegreeSequence::new(vec![1, 1]).unwrap().is_graphical());
        // odd degree sum
        assert!(!DegreeSequence::new(vec![2, 2, 2, 2, 1]).unwrap().is_graphical());
        // fails Erdős–Gallai at k = 2 (verified by brute force over all
        // graphs on 4 vertices in tests/props.rs)
        assert!(!DegreeSequence::new(vec![3, 3, 1, 1]).unwrap().is_graphical());
    }

    #[test]
    fn check_a1_examples() {
        // every pair in K_5 shares n-2 = 3 neighbors; bounds [0.4, 25.6]
        let rep = check_a1(&Graph::complete(5), 0.125);
        assert!(rep.pass);
        assert_eq!((rep.min_codegree, rep.max_codegree), (3, 3));
        assert!((rep.lower_bound - 0.4).abs() < 1e-12);
        assert!((rep.upper_bound - 25.6).abs() < 1e-12);

        // path a-b-c: the adjacent pair has no common neighbor
        let path = Graph::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
        let rep = check_a1(&path, 0.125);
        assert!(!rep.pass);
        assert_eq!(rep.min_codegree, 0);

        // K_8 minus a perfect matching: codegrees lie in [4, 6]
        let mut k8 = Graph::complete(8);
        for i in 0..4 {
            k8.remove_edge(2 * i, 2 * i + 1);
        }
        let rep = check_a1(&k8, 0.125);
        assert!(rep.pass);
        assert_eq!((rep.min_codegree, rep.max_codegree), (4, 6));
    }

    #[test]
    fn signless_laplacian_examples() {
        assert!(signless_laplacian_min_eig(&Graph::complete(2)).abs() < 1e-12);
        assert!((signless_laplacian_min_eig(&Graph::complete(3)) - 1.0).abs() < 1e-10);
        let expect = 2.0 + 2.0 * (4.0 * std::f64::consts::PI / 5.0).cos();
        assert!((signless_laplacian_min_eig(&Graph::cycle(5)) - expect).abs() < 1e-10);
    }

    #[test]
    fn edge_list_round_trip() {
        let g = parse_edge_list("3 2\n0 1\n1 2\n", "test").unwrap();
        assert_eq!(g.n(), 3);
        assert_eq!(g.degree(1), 2);
        let k4 = Graph::complete(4);
        let back = parse_edge_list(&format_edge_list(&k4), "test").unwrap();
        assert_eq!(back, k4);
    }

    #[test]
    fn edge_list_errors() {
        let err = parse_edge_list("2 1\n0 0\n", "f").unwrap_err();
        assert!(err.to_string().contains("self-loop"));
        assert!(err.to_string().contains("f:2"));
        assert!(parse_edge_list("2 1\n1 0\n", "f").is_err());
        assert!(parse_edge_list("2 2\n0 1\n0 1\n", "f").is_err());
        assert!(parse_edge_list("2 1\n0 5\n", "f").is_err());
        assert!(parse_edge_list("", "f").is_err());
    }

    #[test]
    fn multigraph_simplify() {
        let mut m = Multigraph::empty(4);
        m.add_edge(0, 1);
        m.add_edge(1, 0);
        m.add_edge(2, 3);
        assert_eq!(m.multiplicity(0, 1), 2);
        assert_eq!(m.total_multiplicity(), 3);
        let g = m.simplify();
        assert_eq!(g.edge_count(), 2);
        assert!(g.has_edge(0, 1) && g.has_edge(2, 3));
    }

    #[test]
    fn bipartite_detection() {
        assert!(Graph::complete(2).bipartite_component().is_some());
        assert!(Graph::cycle(4).bipartite_component().is_some());
        assert!(Graph::cycle(5).bipartite_component().is_none());
        assert!(Graph::complete(3).bipartite_component().is_none());
        // isolated vertex is a (trivially) bipartite component
        let g = Graph::from_edges(4, &[(0, 1), (1, 2), (0, 2)]).unwrap();
        assert_eq!(g.bipartite_component(), Some(vec![3]));
    }

    #[test]
    fn degree_file_parsing() {
        let d = parse_degrees("3 3 3 3 3 3", "f").unwrap();
        assert_eq!(d.len(), 6);
        assert_eq!(d.max_degree(), 3);
        assert!(parse_degrees("9 0 0", "f").is_err());
        assert!(parse_degrees("1 x", "f").is_err());
    }
}
