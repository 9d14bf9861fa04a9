//! Undirected weighted graphs with optional node features.
//!
//! Edges are stored once, canonicalized to `i < j` and sorted, so two graphs
//! built from the same edge set compare equal regardless of input order.

mod bipartite;
mod generate;
mod io;

use std::collections::HashMap;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

pub use bipartite::{build_feature_bipartite, BipartiteFeatureGraph};
pub use generate::{generate_er, generate_rpg, RpgParams};
pub use io::{parse_edge_list, read_graph_file, GraphJson};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    pub w: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    n: usize,
    edges: Vec<Edge>,
    features: Option<DMatrix<f64>>,
}

impl Graph {
    /// Builds a graph, canonicalizing every pair to `i < j`.
    ///
    /// Rejects self-loops, duplicate pairs, out-of-range indices, and negative
    /// or non-finite weights and feature entries.
    pub fn new(
        n: usize,
        edges: impl IntoIterator<Item = (usize, usize, f64)>,
        features: Option<DMatrix<f64>>,
    ) -> Result<Self> {
        let mut out = Vec::new();
        for (a, b, w) in edges {
            out.push(canonical_edge(n, a, b, w)?);
        }
        out.sort_by_key(|x| (x.i, x.j));
        for pair in out.windows(2) {
            if pair[0].i == pair[1].i && pair[0].j == pair[1].j {
                return Err(Error::InvalidGraph(format!(
                    "duplicate edge ({}, {})",
                    pair[0].i, pair[0].j
                )));
            }
        }
        if let Some(x) = &features {
            validate_features(n, x)?;
        }
        Ok(Self {
            n,
            edges: out,
            features,
        })
    }

    pub fn empty(n: usize) -> Self {
        Self {
            n,
            edges: Vec::new(),
            features: None,
        }
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

    pub fn features(&self) -> Option<&DMatrix<f64>> {
        self.features.as_ref()
    }

    pub fn with_features(mut self, features: Option<DMatrix<f64>>) -> Result<Self> {
        if let Some(x) = &features {
            validate_features(self.n, x)?;
        }
        self.features = features;
        Ok(self)
    }

    pub fn adjacency(&self) -> DMatrix<f64> {
        let mut a = DMatrix::zeros(self.n, self.n);
        for e in &self.edges {
            a[(e.i, e.j)] = e.w;
            a[(e.j, e.i)] = e.w;
        }
        a
    }

    pub fn degrees(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.n];
        for e in &self.edges {
            d[e.i] += e.w;
            d[e.j] += e.w;
        }
        d
    }

    /// Map from canonical pair to position in [`Graph::edges`].
    pub fn edge_index(&self) -> HashMap<(usize, usize), usize> {
        self.edges
            .iter()
            .enumerate()
            .map(|(k, e)| ((e.i, e.j), k))
            .collect()
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        let (i, j) = if a < b { (a, b) } else { (b, a) };
        self.edges
            .binary_search_by(|e| (e.i, e.j).cmp(&(i, j)))
            .is_ok()
    }

    /// Neighbor lists with weights, ignoring zero-weight edges.
    pub fn neighbors(&self) -> Vec<Vec<(usize, f64)>> {
        let mut adj = vec![Vec::new(); self.n];
        for e in self.edges.iter().filter(|e| e.w > 0.0) {
            adj[e.i].push((e.j, e.w));
            adj[e.j].push((e.i, e.w));
        }
        adj
    }

    /// Copy of the graph with zero-weight edges dropped.
    pub fn without_zero_edges(&self) -> Self {
        Self {
            n: self.n,
            edges: self.edges.iter().copied().filter(|e| e.w > 0.0).collect(),
            features: self.features.clone(),
        }
    }

    /// Graph with nodes relabeled so that old node `v` becomes `perm[v]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.n {
            return Err(Error::SizeMismatch(format!(
                "permutation of length {} for {} nodes",
                perm.len(),
                self.n
            )));
        }
        let features = self.features.as_ref().map(|x| {
            let mut y = DMatrix::zeros(x.nrows(), x.ncols());
            for v in 0..self.n {
                y.set_row(perm[v], &x.row(v));
            }
            y
        });
        Graph::new(
            self.n,
            self.edges.iter().map(|e| (perm[e.i], perm[e.j], e.w)),
            features,
        )
    }
}

fn canonical_edge(n: usize, a: usize, b: usize, w: f64) -> Result<Edge> {
    if a == b {
        return Err(Error::InvalidGraph(format!("self-loop at node {a}")));
    }
    if a >= n || b >= n {
        return Err(Error::IndexOutOfRange {
            index: a.max(b),
            limit: n,
        });
    }
    if !w.is_finite() || w < 0.0 {
        return Err(Error::InvalidGraph(format!(
            "edge ({a}, {b}) has invalid weight {w}"
        )));
    }
    let (i, j) = if a < b { (a, b) } else { (b, a) };
    Ok(Edge { i, j, w })
}

fn validate_features(n: usize, x: &DMatrix<f64>) -> Result<()> {
    if x.nrows() != n {
        return Err(Error::InvalidGraph(format!(
            "feature matrix has {} rows for {} nodes",
            x.nrows(),
            n
        )));
    }
    if x.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::InvalidGraph(
            "feature entries must be finite and nonnegative".into(),
        ));
    }
    Ok(())
}

/// `I - D^{+1/2} A D^{+1/2}` for a symmetric nonnegative adjacency matrix.
///
/// `D^{+1/2}` is the pseudo-inverse square root, so a zero-degree node keeps
/// only its identity diagonal entry and contributes eigenvalue 1.
pub fn laplacian_from_adjacency(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let scale = inv_sqrt_degrees(a);
    let mut l = DMatrix::identity(n, n);
    for j in 0..n {
        if scale[j] == 0.0 {
            continue;
        }
        for i in 0..n {
            let aij = a[(i, j)];
            if aij != 0.0 {
                l[(i, j)] -= scale[i] * aij * scale[j];
            }
        }
    }
    l
}

/// Per-node `d^{-1/2}`, with 0 for zero-degree nodes.
pub fn inv_sqrt_degrees(a: &DMatrix<f64>) -> Vec<f64> {
    a.row_iter()
        .map(|r| {
            let d: f64 = r.iter().sum();
            if d > 0.0 {
                1.0 / d.sqrt()
            } else {
                0.0
            }
        })
        .collect()
}

pub fn normalized_laplacian(g: &Graph) -> DMatrix<f64> {
    laplacian_from_adjacency(&g.adjacency())
}

/// All unordered pairs `i < j` that are not edges of `g`, in lexicographic order.
pub fn complement_adjacency(g: &Graph) -> Vec<(usize, usize)> {
    let idx = g.edge_index();
    let n = g.n();
    let mut out = Vec::with_capacity((n * n.saturating_sub(1) / 2).saturating_sub(g.num_edges()));
    for i in 0..n {
        for j in (i + 1)..n {
            if !idx.contains_key(&(i, j)) {
                out.push((i, j));
            }
        }
    }
    out
}
