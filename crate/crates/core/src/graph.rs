//! Weighted undirected graphs and their Laplacians.
//!
//! A [`WeightedGraph`] is validated on construction: simple, undirected and
//! connected through its positive-weight edges. Edge order is preserved, so
//! per-edge vectors (design weights, gradients) are indexed the same way as
//! the input file.
//!
//! Text format: a header line `n m`, then `m` lines `i j w` with 0-based node
//! indices. Blank lines and lines starting with `#` are ignored.

use std::collections::HashSet;
use std::fmt::Write as _;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numfmt::sig17;
use crate::rng::SplitMix64;
use crate::spectral::{self, SpectralData, SpectralError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("a graph needs at least 2 nodes, got {0}")]
    TooFewNodes(usize),
    #[error("edge {edge}: node index {node} out of range for n = {n}")]
    NodeOutOfRange { edge: usize, node: usize, n: usize },
    #[error("edge {edge}: self-loop on node {node}")]
    SelfLoop { edge: usize, node: usize },
    #[error("edge {edge}: duplicate of pair ({i}, {j})")]
    DuplicateEdge { edge: usize, i: usize, j: usize },
    #[error("edge {edge}: weight {weight} is not allowed here")]
    NonpositiveWeight { edge: usize, weight: f64 },
    #[error("graph is disconnected ({components} components over positive-weight edges)")]
    Disconnected { components: usize },
    #[error("expected {expected} weights, got {got}")]
    WeightCount { expected: usize, got: usize },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// How edge weights are validated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WeightPolicy {
    /// Every weight must be strictly positive.
    #[default]
    Strict,
    /// Zero weights are allowed (optimization iterates); connectivity is
    /// still required over the positive-weight edges.
    AllowZero,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph {
    n: usize,
    edges: Vec<Edge>,
}

impl WeightedGraph {
    /// Builds a graph with strictly positive weights.
    pub fn new<I>(n: usize, edges: I) -> Result<Self, GraphError>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        Self::with_policy(n, edges, WeightPolicy::Strict)
    }

    pub fn with_policy<I>(n: usize, edges: I, policy: WeightPolicy) -> Result<Self, GraphError>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        if n < 2 {
            return Err(GraphError::TooFewNodes(n));
        }
        let edges: Vec<Edge> = edges
            .into_iter()
            .map(|(i, j, weight)| Edge { i, j, weight })
            .collect();
        let mut seen = HashSet::with_capacity(edges.len());
        for (k, e) in edges.iter().enumerate() {
            for node in [e.i, e.j] {
                if node >= n {
                    return Err(GraphError::NodeOutOfRange { edge: k, node, n });
                }
            }
            if e.i == e.j {
                return Err(GraphError::SelfLoop { edge: k, node: e.i });
            }
            if !seen.insert((e.i.min(e.j), e.i.max(e.j))) {
                return Err(GraphError::DuplicateEdge { edge: k, i: e.i, j: e.j });
            }
            let ok = match policy {
                WeightPolicy::Strict => e.weight > 0.0 && e.weight.is_finite(),
                WeightPolicy::AllowZero => e.weight >= 0.0 && e.weight.is_finite(),
            };
            if !ok {
                return Err(GraphError::NonpositiveWeight { edge: k, weight: e.weight });
            }
        }
        let components = count_components(n, &edges);
        if components != 1 {
            return Err(GraphError::Disconnected { components });
        }
        Ok(Self { n, edges })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn weights(&self) -> Vec<f64> {
        self.edges.iter().map(|e| e.weight).collect()
    }

    /// Same support with new weights; zero weights are permitted as long as
    /// the positive-weight subgraph stays connected.
    pub fn with_weights(&self, weights: &[f64]) -> Result<Self, GraphError> {
        if weights.len() != self.edges.len() {
            return Err(GraphError::WeightCount { expected: self.edges.len(), got: weights.len() });
        }
        Self::with_policy(
            self.n,
            self.edges.iter().zip(weights).map(|(e, &w)| (e.i, e.j, w)),
            WeightPolicy::AllowZero,
        )
    }

    /// All weights multiplied by `factor` (> 0).
    pub fn scaled(&self, factor: f64) -> Result<Self, GraphError> {
        let w: Vec<f64> = self.edges.iter().map(|e| e.weight * factor).collect();
        self.with_weights(&w)
    }

    /// Same support, every weight set to `w`.
    pub fn uniform(&self, w: f64) -> Result<Self, GraphError> {
        self.with_weights(&vec![w; self.edges.len()])
    }

    /// Weighted degree of every node.
    pub fn degrees(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.n];
        for e in &self.edges {
            d[e.i] += e.weight;
            d[e.j] += e.weight;
        }
        d
    }

    pub fn laplacian(&self) -> Laplacian {
        let n = self.n;
        let mut m = DMatrix::<f64>::zeros(n, n);
        for e in &self.edges {
            m[(e.i, e.j)] -= e.weight;
            m[(e.j, e.i)] -= e.weight;
            m[(e.i, e.i)] += e.weight;
            m[(e.j, e.j)] += e.weight;
        }
        let scale = m.amax().max(1.0);
        debug_assert!(
            m.row_iter().all(|r| r.sum().abs() <= 1e-12 * scale),
            "laplacian rows must sum to zero"
        );
        Laplacian(m)
    }

    /// Sorted Laplacian spectrum.
    pub fn spectrum(&self) -> Result<SpectralData, SpectralError> {
        spectral::spectrum(&self.laplacian())
    }

    /// Parses the `n m` / `i j w` text format (strict weights).
    pub fn parse(text: &str) -> Result<Self, GraphError> {
        Self::parse_with(text, WeightPolicy::Strict)
    }

    pub fn parse_with(text: &str, policy: WeightPolicy) -> Result<Self, GraphError> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(k, l)| (k + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (hline, header) = lines
            .next()
            .ok_or(GraphError::Parse { line: 0, msg: "empty graph file".into() })?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 2 {
            return Err(GraphError::Parse { line: hline, msg: "header must be `n m`".into() });
        }
        let n = parse_field::<usize>(fields[0], hline, "n")?;
        let m = parse_field::<usize>(fields[1], hline, "m")?;
        let mut edges = Vec::with_capacity(m);
        for (line, l) in lines.by_ref().take(m) {
            let f: Vec<&str> = l.split_whitespace().collect();
            if f.len() != 3 {
                return Err(GraphError::Parse { line, msg: "edge line must be `i j w`".into() });
            }
            edges.push((
                parse_field::<usize>(f[0], line, "i")?,
                parse_field::<usize>(f[1], line, "j")?,
                parse_field::<f64>(f[2], line, "w")?,
            ));
        }
        if edges.len() != m {
            return Err(GraphError::Parse {
                line: hline,
                msg: format!("header announces {m} edges, found {}", edges.len()),
            });
        }
        if let Some((line, _)) = lines.next() {
            return Err(GraphError::Parse { line, msg: "trailing content after edge list".into() });
        }
        Self::with_policy(n, edges, policy)
    }

    /// Serializes to the text format; weights carry 17 significant digits.
    pub fn to_text(&self) -> String {
        let mut out = format!("{} {}\n", self.n, self.edges.len());
        for e in &self.edges {
            let _ = writeln!(out, "{} {} {}", e.i, e.j, sig17(e.weight));
        }
        out
    }
}

fn parse_field<T: std::str::FromStr>(s: &str, line: usize, what: &str) -> Result<T, GraphError> {
    s.parse()
        .map_err(|_| GraphError::Parse { line, msg: format!("cannot parse {what} from {s:?}") })
}

fn count_components(n: usize, edges: &[Edge]) -> usize {
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let mut components = n;
    for e in edges.iter().filter(|e| e.weight > 0.0) {
        let (a, b) = (find(&mut parent, e.i), find(&mut parent, e.j));
        if a != b {
            parent[a] = b;
            components -= 1;
        }
    }
    components
}

/// Graph Laplacian `L = D - W`, stored dense.
#[derive(Debug, Clone, PartialEq)]
pub struct Laplacian(DMatrix<f64>);

impl Laplacian {
    pub fn n(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    /// Moore-Penrose pseudoinverse by the rank-one shift
    /// `L† = (L + 11ᵀ/n)⁻¹ - 11ᵀ/n`.
    pub fn pseudoinverse(&self) -> Result<DMatrix<f64>, SpectralError> {
        spectral::laplacian_pseudoinverse(self)
    }
}

/// Unweighted Laplacian of the single edge `{i, j}` on `n` nodes.
pub fn edge_laplacian(n: usize, i: usize, j: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n, n);
    m[(i, i)] = 1.0;
    m[(j, j)] = 1.0;
    m[(i, j)] = -1.0;
    m[(j, i)] = -1.0;
    m
}

/// Standard topologies and random graph generators.
pub mod generators {
    use super::*;

    pub fn path(n: usize, w: f64) -> Result<WeightedGraph, GraphError> {
        WeightedGraph::new(n, (0..n.saturating_sub(1)).map(|i| (i, i + 1, w)))
    }

    pub fn cycle(n: usize, w: f64) -> Result<WeightedGraph, GraphError> {
        WeightedGraph::new(n, (0..n).map(|i| (i, (i + 1) % n, w)))
    }

    /// Star with node 0 as the hub.
    pub fn star(n: usize, w: f64) -> Result<WeightedGraph, GraphError> {
        WeightedGraph::new(n, (1..n).map(|i| (0, i, w)))
    }

    pub fn complete(n: usize, w: f64) -> Result<WeightedGraph, GraphError> {
        WeightedGraph::new(n, (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j, w))))
    }

    /// Uniformly random labelled tree (decoded from a random Prüfer sequence).
    pub fn random_tree(n: usize, w: f64, rng: &mut SplitMix64) -> Result<WeightedGraph, GraphError> {
        if n < 2 {
            return Err(GraphError::TooFewNodes(n));
        }
        if n == 2 {
            return WeightedGraph::new(2, [(0, 1, w)]);
        }
        let seq: Vec<usize> = (0..n - 2).map(|_| rng.below(n)).collect();
        let mut degree = vec![1usize; n];
        for &s in &seq {
            degree[s] += 1;
        }
        let mut edges = Vec::with_capacity(n - 1);
        for &s in &seq {
            let leaf = (0..n).find(|&v| degree[v] == 1).expect("a leaf always exists");
            edges.push((leaf, s, w));
            degree[leaf] -= 1;
            degree[s] -= 1;
        }
        let rest: Vec<usize> = (0..n).filter(|&v| degree[v] == 1).collect();
        edges.push((rest[0], rest[1], w));
        WeightedGraph::new(n, edges)
    }

    /// Random connected graph: a random spanning tree plus each remaining pair
    /// with probability `p`; weights uniform on `(w_lo, w_hi]`.
    pub fn random_connected(
        n: usize,
        p: f64,
        w_lo: f64,
        w_hi: f64,
        rng: &mut SplitMix64,
    ) -> Result<WeightedGraph, GraphError> {
        let tree = random_tree(n, 1.0, rng)?;
        let mut pairs: HashSet<(usize, usize)> =
            tree.edges().iter().map(|e| (e.i.min(e.j), e.i.max(e.j))).collect();
        for i in 0..n {
            for j in i + 1..n {
                if rng.next_f64() < p {
                    pairs.insert((i, j));
                }
            }
        }
        let mut pairs: Vec<_> = pairs.into_iter().collect();
        pairs.sort_unstable();
        let edges: Vec<_> = pairs
            .into_iter()
            .map(|(i, j)| (i, j, w_hi - (w_hi - w_lo) * rng.next_f64()))
            .collect();
        WeightedGraph::new(n, edges)
    }
}
