//! Sparse undirected graphs in compressed-row form.
//!
//! Graphs are immutable after construction: every edge is stored in both
//! directions with sorted, deduplicated rows, which keeps row-wise products
//! branch-free. Operators derived from a graph (normalized Laplacian,
//! random-walk matrix) share the same layout with an added value array.

use crate::linalg::{DenseMatrix, SeededRng};
use crate::{Error, Result};

/// Feature matrices are plain row-major dense matrices (N rows, D columns).
pub type FeatureMatrix = DenseMatrix;

/// Undirected graph, compressed sparse rows, no self-loops, no duplicates.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    pub num_nodes: usize,
    /// Length `num_nodes + 1`; row i spans `row_offsets[i]..row_offsets[i+1]`.
    pub row_offsets: Vec<usize>,
    /// Neighbor ids, sorted ascending within each row; both directions stored.
    pub col_indices: Vec<usize>,
}

impl Graph {
    pub fn degree(&self, i: usize) -> usize {
        self.row_offsets[i + 1] - self.row_offsets[i]
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.col_indices[self.row_offsets[i]..self.row_offsets[i + 1]]
    }

    /// Number of undirected edges |E|.
    pub fn num_edges(&self) -> usize {
        self.col_indices.len() / 2
    }

    /// Unique undirected pairs (i < j), sorted.
    pub fn edge_list(&self) -> Vec<(usize, usize)> {
        let mut edges = Vec::with_capacity(self.num_edges());
        for i in 0..self.num_nodes {
            for &j in self.neighbors(i) {
                if i < j {
                    edges.push((i, j));
                }
            }
        }
        edges
    }
}

/// Square sparse operator sharing the compressed-row layout of a [`Graph`].
#[derive(Debug, Clone)]
pub struct SparseOperator {
    pub dim: usize,
    pub row_offsets: Vec<usize>,
    pub col_indices: Vec<usize>,
    pub values: Vec<f64>,
}

impl SparseOperator {
    pub fn identity(n: usize) -> Self {
        Self {
            dim: n,
            row_offsets: (0..=n).collect(),
            col_indices: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    /// Densify; validation-only helper for small graphs.
    pub fn to_dense(&self) -> DenseMatrix {
        let mut m = DenseMatrix::zeros(self.dim, self.dim);
        for i in 0..self.dim {
            for k in self.row_offsets[i]..self.row_offsets[i + 1] {
                m.set(i, self.col_indices[k], self.values[k]);
            }
        }
        m
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }
}

/// Builds a graph from an edge list: deduplicates, symmetrizes, drops
/// self-loops, and sorts each row.
pub fn build_graph(edges: &[(usize, usize)], num_nodes: usize) -> Result<Graph> {
    for &(u, v) in edges {
        if u >= num_nodes || v >= num_nodes {
            return Err(Error::InvalidInput(format!(
                "edge ({u}, {v}) out of range for {num_nodes} nodes"
            )));
        }
    }

    let mut pairs: Vec<(usize, usize)> = edges
        .iter()
        .filter(|(u, v)| u != v)
        .flat_map(|&(u, v)| [(u, v), (v, u)])
        .collect();
    pairs.sort_unstable();
    pairs.dedup();

    let mut row_offsets = vec![0usize; num_nodes + 1];
    for &(u, _) in &pairs {
        row_offsets[u + 1] += 1;
    }
    for i in 0..num_nodes {
        row_offsets[i + 1] += row_offsets[i];
    }
    let col_indices = pairs.into_iter().map(|(_, v)| v).collect();

    Ok(Graph {
        num_nodes,
        row_offsets,
        col_indices,
    })
}

/// Normalized Laplacian L = I - D^{-1/2} A D^{-1/2}.
///
/// Rows and columns of isolated nodes are all zero, so every spectral filter
/// acts on them as multiplication by the filter's value at 0.
pub fn normalized_laplacian(g: &Graph) -> SparseOperator {
    let n = g.num_nodes;
    let inv_sqrt_deg: Vec<f64> = (0..n)
        .map(|i| {
            let d = g.degree(i);
            if d > 0 {
                1.0 / (d as f64).sqrt()
            } else {
                0.0
            }
        })
        .collect();

    let mut row_offsets = Vec::with_capacity(n + 1);
    let mut col_indices = Vec::with_capacity(g.col_indices.len() + n);
    let mut values = Vec::with_capacity(g.col_indices.len() + n);
    row_offsets.push(0);
    for i in 0..n {
        let mut diag_written = g.degree(i) == 0;
        for &j in g.neighbors(i) {
            if !diag_written && j > i {
                col_indices.push(i);
                values.push(1.0);
                diag_written = true;
            }
            col_indices.push(j);
            values.push(-inv_sqrt_deg[i] * inv_sqrt_deg[j]);
        }
        if !diag_written {
            col_indices.push(i);
            values.push(1.0);
        }
        row_offsets.push(col_indices.len());
    }

    SparseOperator {
        dim: n,
        row_offsets,
        col_indices,
        values,
    }
}

/// Random-walk matrix D^{-1} A; rows of isolated nodes are all zero.
pub fn random_walk_matrix(g: &Graph) -> SparseOperator {
    let n = g.num_nodes;
    let mut values = Vec::with_capacity(g.col_indices.len());
    for i in 0..n {
        let d = g.degree(i);
        let w = if d > 0 { 1.0 / d as f64 } else { 0.0 };
        values.extend(std::iter::repeat(w).take(d));
    }
    SparseOperator {
        dim: n,
        row_offsets: g.row_offsets.clone(),
        col_indices: g.col_indices.clone(),
        values,
    }
}

/// Sparse-dense product `op * x`.
pub fn spmm(op: &SparseOperator, x: &FeatureMatrix) -> Result<FeatureMatrix> {
    if op.dim != x.rows {
        return Err(Error::ShapeMismatch(format!(
            "spmm: operator is {0}x{0}, features have {1} rows",
            op.dim, x.rows
        )));
    }
    let cols = x.cols;
    let mut out = FeatureMatrix::zeros(op.dim, cols);
    for i in 0..op.dim {
        let out_row = &mut out.data[i * cols..(i + 1) * cols];
        for k in op.row_offsets[i]..op.row_offsets[i + 1] {
            let v = op.values[k];
            let x_row = &x.data[op.col_indices[k] * cols..(op.col_indices[k] + 1) * cols];
            for (o, &xv) in out_row.iter_mut().zip(x_row) {
                *o += v * xv;
            }
        }
    }
    Ok(out)
}

/// Stochastic block model: each unordered intra-block pair edges with
/// probability `p_in`, inter-block with `p_out`. Labels are block indices.
/// Deterministic for a fixed seed.
pub fn generate_sbm(
    block_sizes: &[usize],
    p_in: f64,
    p_out: f64,
    seed: u64,
) -> Result<(Graph, Vec<usize>)> {
    if block_sizes.is_empty() || block_sizes.contains(&0) {
        return Err(Error::InvalidInput("empty block in block_sizes".into()));
    }
    for (name, p) in [("p_in", p_in), ("p_out", p_out)] {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidInput(format!("{name} = {p} not in [0, 1]")));
        }
    }

    let n: usize = block_sizes.iter().sum();
    let mut labels = Vec::with_capacity(n);
    for (b, &size) in block_sizes.iter().enumerate() {
        labels.extend(std::iter::repeat(b).take(size));
    }

    let mut rng = SeededRng::new(seed);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let p = if labels[i] == labels[j] { p_in } else { p_out };
            if rng.next_f64() < p {
                edges.push((i, j));
            }
        }
    }
    Ok((build_graph(&edges, n)?, labels))
}

/// Zachary karate-club graph: 34 nodes, 78 edges, two-faction labels.
pub fn karate_graph() -> (Graph, Vec<usize>) {
    const EDGES: [(usize, usize); 78] = [
        (0, 1), (0, 2), (0, 3), (0, 4), (0, 5), (0, 6), (0, 7), (0, 8), (0, 10), (0, 11),
        (0, 12), (0, 13), (0, 17), (0, 19), (0, 21), (0, 31), (1, 2), (1, 3), (1, 7), (1, 13),
        (1, 17), (1, 19), (1, 21), (1, 30), (2, 3), (2, 7), (2, 8), (2, 9), (2, 13), (2, 27),
        (2, 28), (2, 32), (3, 7), (3, 12), (3, 13), (4, 6), (4, 10), (5, 6), (5, 10), (5, 16),
        (6, 16), (8, 30), (8, 32), (8, 33), (9, 33), (13, 33), (14, 32), (14, 33), (15, 32),
        (15, 33), (18, 32), (18, 33), (19, 33), (20, 32), (20, 33), (22, 32), (22, 33),
        (23, 25), (23, 27), (23, 29), (23, 32), (23, 33), (24, 25), (24, 27), (24, 31),
        (25, 31), (26, 29), (26, 33), (27, 33), (28, 31), (28, 33), (29, 32), (29, 33),
        (30, 32), (30, 33), (31, 32), (31, 33), (32, 33),
    ];
    const LABELS: [usize; 34] = [
        0, 0, 0, 0, 0, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 1, 0, 0, 1, 0, 1, 0, 1, 1, 1, 1, 1, 1, 1,
        1, 1, 1, 1, 1,
    ];
    let graph = build_graph(&EDGES, 34).expect("embedded edge list is valid");
    (graph, LABELS.to_vec())
}
