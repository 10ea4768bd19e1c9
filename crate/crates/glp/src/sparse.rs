//! Compressed sparse row matrices, weighted graphs and their Laplacians.
//!
//! The sparse type is a textbook CSR triple (row offsets, column indices,
//! values) with strictly increasing columns inside each row and no stored
//! NaN or infinity. Graphs wrap a symmetric nonnegative CSR adjacency with a
//! zero diagonal and cache the weighted degree vector.
//!
//! Four Laplacian variants are built from a graph:
//!
//! * unnormalized        `L = D - W`
//! * random walk         `L_rw = D^{-1} L = I - D^{-1} W`
//! * symmetric           `L_s = D^{-1/2} L D^{-1/2} = I - W_s`
//! * renormalized        `L~_s = I - W~_s`, where `W~ = W + I`, `D~ = D + I`
//!
//! The renormalized variant adds a unit self-loop to every vertex before
//! normalizing, which shrinks the top of the spectrum; the spectral module
//! quantifies that shrinkage.

use rayon::prelude::*;

use crate::dense::DenseMatrix;
use crate::error::{Error, Result};

/// Sparse matrix in compressed sparse row form. Columns are strictly
/// increasing within each row and every stored value is finite.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    n_rows: usize,
    n_cols: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    /// Build from `(row, col, value)` triplets in any order. Duplicate
    /// coordinates are summed. Entries that are exactly zero are kept if
    /// given; callers that want them gone filter first.
    pub fn from_triplets(
        n_rows: usize,
        n_cols: usize,
        triplets: &[(usize, usize, f64)],
    ) -> Result<Self> {
        for &(r, c, v) in triplets {
            if r >= n_rows {
                return Err(Error::IndexOutOfRange {
                    op: "from_triplets(row)",
                    index: r,
                    bound: n_rows,
                });
            }
            if c >= n_cols {
                return Err(Error::IndexOutOfRange {
                    op: "from_triplets(col)",
                    index: c,
                    bound: n_cols,
                });
            }
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    op: "from_triplets",
                    row: r,
                    col: c,
                    value: v,
                });
            }
        }
        let mut sorted: Vec<(usize, usize, f64)> = triplets.to_vec();
        sorted.sort_by_key(|&(r, c, _)| (r, c));

        let mut row_offsets = Vec::with_capacity(n_rows + 1);
        let mut col_indices = Vec::with_capacity(sorted.len());
        let mut values = Vec::with_capacity(sorted.len());
        row_offsets.push(0);
        let mut current_row = 0;
        for &(r, c, v) in &sorted {
            while current_row < r {
                row_offsets.push(col_indices.len());
                current_row += 1;
            }
            if col_indices.len() > *row_offsets.last().unwrap() && *col_indices.last().unwrap() == c
            {
                *values.last_mut().unwrap() += v;
            } else {
                col_indices.push(c);
                values.push(v);
            }
        }
        while current_row < n_rows {
            row_offsets.push(col_indices.len());
            current_row += 1;
        }
        Ok(SparseMatrix {
            n_rows,
            n_cols,
            row_offsets,
            col_indices,
            values,
        })
    }

    /// Sparse identity of order `n`.
    pub fn identity(n: usize) -> Self {
        SparseMatrix {
            n_rows: n,
            n_cols: n,
            row_offsets: (0..=n).collect(),
            col_indices: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    /// Number of stored entries (including explicit zeros, if any).
    pub fn nnz(&self) -> usize {
        self.col_indices.len()
    }

    /// Iterate the stored `(column, value)` pairs of row `i` in column order.
    pub fn iter_row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_offsets[i]..self.row_offsets[i + 1];
        self.col_indices[range.clone()]
            .iter()
            .copied()
            .zip(self.values[range].iter().copied())
    }

    /// Entry lookup by binary search within the row; absent entries are zero.
    pub fn get(&self, row: usize, col: usize) -> f64 {
        let range = self.row_offsets[row]..self.row_offsets[row + 1];
        match self.col_indices[range.clone()].binary_search(&col) {
            Ok(pos) => self.values[range.start + pos],
            Err(_) => 0.0,
        }
    }

    /// Row sums, i.e. weighted out-degrees.
    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n_rows)
            .map(|i| self.iter_row(i).map(|(_, v)| v).sum())
            .collect()
    }

    /// Largest absolute difference between the matrix and its transpose;
    /// zero for a symmetric matrix.
    pub fn max_abs_asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.n_rows.min(self.n_cols) {
            for (j, v) in self.iter_row(i) {
                if j < self.n_rows {
                    worst = worst.max((v - self.get(j, i)).abs());
                }
            }
        }
        worst
    }

    /// Densify. Verification-scale only; the callers that need this are the
    /// spectral reference routines and tests.
    pub fn to_dense(&self) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(self.n_rows, self.n_cols);
        for i in 0..self.n_rows {
            for (j, v) in self.iter_row(i) {
                out.set(i, j, out.get(i, j) + v);
            }
        }
        out
    }

    /// Sparse copy of a dense matrix, storing exactly the nonzero entries.
    pub fn from_dense(dense: &DenseMatrix) -> SparseMatrix {
        let mut row_offsets = Vec::with_capacity(dense.n_rows() + 1);
        let mut col_indices = Vec::new();
        let mut values = Vec::new();
        row_offsets.push(0);
        for i in 0..dense.n_rows() {
            for (j, &v) in dense.row(i).iter().enumerate() {
                if v != 0.0 {
                    col_indices.push(j);
                    values.push(v);
                }
            }
            row_offsets.push(col_indices.len());
        }
        SparseMatrix {
            n_rows: dense.n_rows(),
            n_cols: dense.n_cols(),
            row_offsets,
            col_indices,
            values,
        }
    }

    /// New matrix with the same pattern, stored value `i` multiplied by
    /// `factors[i]`. The factor slice must match the stored entry count.
    pub fn scale_stored(&self, factors: &[f64]) -> SparseMatrix {
        assert_eq!(
            factors.len(),
            self.values.len(),
            "scale_stored: factor count must match stored entries"
        );
        let mut scaled = self.clone();
        for (v, &f) in scaled.values.iter_mut().zip(factors) {
            *v *= f;
        }
        scaled
    }

    /// Rescale as `diag(left) * self * diag(right)`.
    #[allow(clippy::needless_range_loop)]
    pub fn diag_scale(&self, left: &[f64], right: &[f64]) -> Result<SparseMatrix> {
        if left.len() != self.n_rows || right.len() != self.n_cols {
            return Err(Error::DimensionMismatch {
                op: "diag_scale",
                left_rows: left.len(),
                left_cols: right.len(),
                right_rows: self.n_rows,
                right_cols: self.n_cols,
            });
        }
        let mut scaled = self.clone();
        for i in 0..self.n_rows {
            let range = self.row_offsets[i]..self.row_offsets[i + 1];
            for idx in range {
                scaled.values[idx] = left[i] * self.values[idx] * right[self.col_indices[idx]];
            }
        }
        Ok(scaled)
    }
}

/// Sparse-times-dense product `A * X`. Work is split by output row and each
/// row is accumulated sequentially in column order, so the result is bitwise
/// identical for any thread count.
pub fn spmm(a: &SparseMatrix, x: &DenseMatrix) -> Result<DenseMatrix> {
    if a.n_cols != x.n_rows() {
        return Err(Error::DimensionMismatch {
            op: "spmm",
            left_rows: a.n_rows,
            left_cols: a.n_cols,
            right_rows: x.n_rows(),
            right_cols: x.n_cols(),
        });
    }
    let mut out = DenseMatrix::zeros(a.n_rows, x.n_cols());
    let width = x.n_cols().max(1);
    out.as_mut_slice()
        .par_chunks_mut(width)
        .enumerate()
        .for_each(|(i, out_row)| {
            for (j, v) in a.iter_row(i) {
                for (o, &xv) in out_row.iter_mut().zip(x.row(j)) {
                    *o += v * xv;
                }
            }
        });
    Ok(out)
}

/// Transposed sparse-times-dense product `A^T * X`, without materializing the
/// transpose. Sequential; used for gradient accumulation where the operands
/// are small.
pub fn spmm_transpose(a: &SparseMatrix, x: &DenseMatrix) -> Result<DenseMatrix> {
    if a.n_rows != x.n_rows() {
        return Err(Error::DimensionMismatch {
            op: "spmm_transpose",
            left_rows: a.n_rows,
            left_cols: a.n_cols,
            right_rows: x.n_rows(),
            right_cols: x.n_cols(),
        });
    }
    let mut out = DenseMatrix::zeros(a.n_cols, x.n_cols());
    for i in 0..a.n_rows {
        let x_row = x.row(i);
        for (j, v) in a.iter_row(i) {
            let out_row = out.row_mut(j);
            for (o, &xv) in out_row.iter_mut().zip(x_row) {
                *o += v * xv;
            }
        }
    }
    Ok(out)
}

/// Undirected weighted graph: symmetric nonnegative adjacency with a zero
/// diagonal, plus the cached weighted degree vector.
#[derive(Debug, Clone)]
pub struct Graph {
    adjacency: SparseMatrix,
    degrees: Vec<f64>,
}

impl Graph {
    /// Build from undirected edges `(i, j, w)`. Each edge inserts the weight
    /// in both directions; duplicate pairs are summed. Self-loops and
    /// negative weights are rejected.
    pub fn from_edges(n: usize, edges: &[(usize, usize, f64)]) -> Result<Graph> {
        if n == 0 {
            return Err(Error::EmptyGraph);
        }
        let mut triplets = Vec::with_capacity(edges.len() * 2);
        for &(i, j, w) in edges {
            if i == j {
                return Err(Error::SelfLoop { vertex: i });
            }
            if w < 0.0 {
                return Err(Error::NegativeWeight {
                    row: i,
                    col: j,
                    weight: w,
                });
            }
            triplets.push((i, j, w));
            triplets.push((j, i, w));
        }
        let adjacency = SparseMatrix::from_triplets(n, n, &triplets)?;
        let degrees = adjacency.row_sums();
        Ok(Graph { adjacency, degrees })
    }

    /// Wrap an existing adjacency matrix, validating squareness, symmetry,
    /// a zero diagonal and nonnegative weights.
    pub fn from_adjacency(adjacency: SparseMatrix) -> Result<Graph> {
        if adjacency.n_rows != adjacency.n_cols {
            return Err(Error::NotSquare {
                op: "Graph::from_adjacency",
                n_rows: adjacency.n_rows,
                n_cols: adjacency.n_cols,
            });
        }
        if adjacency.n_rows == 0 {
            return Err(Error::EmptyGraph);
        }
        for i in 0..adjacency.n_rows {
            for (j, v) in adjacency.iter_row(i) {
                if i == j && v != 0.0 {
                    return Err(Error::SelfLoop { vertex: i });
                }
                if v < 0.0 {
                    return Err(Error::NegativeWeight {
                        row: i,
                        col: j,
                        weight: v,
                    });
                }
                let reverse = adjacency.get(j, i);
                if (v - reverse).abs() > 1e-12 {
                    return Err(Error::Asymmetric {
                        row: i,
                        col: j,
                        forward: v,
                        reverse,
                    });
                }
            }
        }
        let degrees = adjacency.row_sums();
        Ok(Graph { adjacency, degrees })
    }

    /// Vertex count.
    pub fn n(&self) -> usize {
        self.adjacency.n_rows
    }

    pub fn adjacency(&self) -> &SparseMatrix {
        &self.adjacency
    }

    /// Weighted degrees (adjacency row sums). Isolated vertices have degree
    /// zero here regardless of any normalization policy.
    pub fn degrees(&self) -> &[f64] {
        &self.degrees
    }

    /// Largest weighted degree; zero for an edgeless graph.
    pub fn max_degree(&self) -> f64 {
        self.degrees.iter().fold(0.0, |acc, &d| acc.max(d))
    }

    /// Number of undirected edges (stored entry pairs / 2).
    pub fn edge_count(&self) -> usize {
        self.adjacency.nnz() / 2
    }

    /// Subgraph induced by the given vertices, which become vertices
    /// `0..vertices.len()` in the listed order. Duplicate entries are
    /// rejected through the index map.
    pub fn induced_subgraph(&self, vertices: &[usize]) -> Result<Graph> {
        if vertices.is_empty() {
            return Err(Error::EmptyGraph);
        }
        let mut position = vec![usize::MAX; self.n()];
        for (new, &old) in vertices.iter().enumerate() {
            if old >= self.n() {
                return Err(Error::IndexOutOfRange {
                    op: "induced_subgraph",
                    index: old,
                    bound: self.n(),
                });
            }
            position[old] = new;
        }
        let mut edges = Vec::new();
        for (new_i, &old_i) in vertices.iter().enumerate() {
            for (old_j, w) in self.adjacency.iter_row(old_i) {
                let new_j = position[old_j];
                if new_j != usize::MAX && old_j > old_i && w != 0.0 {
                    edges.push((new_i, new_j, w));
                }
            }
        }
        Graph::from_edges(vertices.len(), &edges)
    }
}

/// The Laplacian variants the crate knows how to build.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LaplacianKind {
    /// `L = D - W`.
    Unnormalized,
    /// `L_rw = I - D^{-1} W`.
    RandomWalk,
    /// `L_s = I - D^{-1/2} W D^{-1/2}`.
    Symmetric,
    /// `L~_s = I - W~_s` with a unit self-loop added to every vertex.
    RenormalizedSymmetric,
}

impl LaplacianKind {
    /// Stable lowercase name, used by the CLI and in output metadata.
    pub fn name(self) -> &'static str {
        match self {
            LaplacianKind::Unnormalized => "unnormalized",
            LaplacianKind::RandomWalk => "random-walk",
            LaplacianKind::Symmetric => "symmetric",
            LaplacianKind::RenormalizedSymmetric => "renormalized",
        }
    }
}

/// What to do when a degree-normalized operator meets an isolated vertex.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum IsolatedPolicy {
    /// Treat the vertex as carrying an implicit unit self-loop, so its
    /// normalized adjacency entry is 1 and its normalized Laplacian entry 0.
    /// This matches the limit behavior of the renormalized variant and keeps
    /// real datasets with stray singleton vertices usable.
    #[default]
    ImplicitSelfLoop,
    /// Refuse, naming the vertex.
    Strict,
}

/// Build the requested Laplacian with the default isolated-vertex policy.
pub fn build_laplacian(graph: &Graph, kind: LaplacianKind) -> Result<SparseMatrix> {
    build_laplacian_with(graph, kind, IsolatedPolicy::default())
}

/// Build the requested Laplacian. All four kinds satisfy `L = I - W_norm`
/// entrywise for their normalized adjacency except the unnormalized kind,
/// which is `D - W`.
pub fn build_laplacian_with(
    graph: &Graph,
    kind: LaplacianKind,
    policy: IsolatedPolicy,
) -> Result<SparseMatrix> {
    let n = graph.n();
    match kind {
        LaplacianKind::Unnormalized => {
            let mut triplets = Vec::with_capacity(graph.adjacency.nnz() + n);
            for (i, &d) in graph.degrees.iter().enumerate() {
                if d != 0.0 {
                    triplets.push((i, i, d));
                }
                for (j, w) in graph.adjacency.iter_row(i) {
                    if w != 0.0 {
                        triplets.push((i, j, -w));
                    }
                }
            }
            SparseMatrix::from_triplets(n, n, &triplets)
        }
        _ => {
            let w = normalized_adjacency_with(graph, kind, policy)?;
            // L = I - W_norm, assembled entrywise.
            let mut triplets = Vec::with_capacity(w.nnz() + n);
            for i in 0..n {
                let mut saw_diagonal = false;
                for (j, v) in graph_row(&w, i) {
                    if i == j {
                        saw_diagonal = true;
                        let diag = 1.0 - v;
                        if diag != 0.0 {
                            triplets.push((i, i, diag));
                        }
                    } else if v != 0.0 {
                        triplets.push((i, j, -v));
                    }
                }
                if !saw_diagonal {
                    triplets.push((i, i, 1.0));
                }
            }
            SparseMatrix::from_triplets(n, n, &triplets)
        }
    }
}

fn graph_row(m: &SparseMatrix, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
    m.iter_row(i)
}

/// The normalized adjacency paired with each normalized Laplacian kind, i.e.
/// the `W_norm` with `L = I - W_norm`. The unnormalized kind has no such
/// operator with spectrum inside [-1, 1] and is rejected.
pub fn normalized_adjacency_with(
    graph: &Graph,
    kind: LaplacianKind,
    policy: IsolatedPolicy,
) -> Result<SparseMatrix> {
    let n = graph.n();
    match kind {
        LaplacianKind::Unnormalized => Err(Error::InvalidConfig {
            what: "the unnormalized kind has no normalized adjacency; \
                   use a normalized kind or an exact dense solve"
                .to_string(),
        }),
        LaplacianKind::RenormalizedSymmetric => Ok(renormalized_adjacency(graph)),
        LaplacianKind::Symmetric | LaplacianKind::RandomWalk => {
            if let IsolatedPolicy::Strict = policy {
                if let Some(v) = graph.degrees.iter().position(|&d| d == 0.0) {
                    return Err(Error::IsolatedVertex { vertex: v });
                }
            }
            let mut triplets = Vec::with_capacity(graph.adjacency.nnz() + n);
            let inv: Vec<f64> = graph
                .degrees
                .iter()
                .map(|&d| if d > 0.0 { 1.0 / d } else { 1.0 })
                .collect();
            for i in 0..n {
                if graph.degrees[i] == 0.0 {
                    // Implicit unit self-loop on an isolated vertex.
                    triplets.push((i, i, 1.0));
                    continue;
                }
                for (j, w) in graph.adjacency.iter_row(i) {
                    if w == 0.0 {
                        continue;
                    }
                    let value = match kind {
                        LaplacianKind::Symmetric => w * (inv[i] * inv[j]).sqrt(),
                        LaplacianKind::RandomWalk => w * inv[i],
                        _ => unreachable!(),
                    };
                    triplets.push((i, j, value));
                }
            }
            SparseMatrix::from_triplets(n, n, &triplets)
        }
    }
}

/// Symmetric-normalized adjacency `W_s = D^{-1/2} W D^{-1/2}` with the
/// default isolated-vertex policy.
pub fn symmetric_normalized_adjacency(graph: &Graph) -> Result<SparseMatrix> {
    normalized_adjacency_with(graph, LaplacianKind::Symmetric, IsolatedPolicy::default())
}

/// Renormalized adjacency `W~_s = D~^{-1/2} (W + I) D~^{-1/2}` with
/// `D~ = D + I`. Total, since every augmented degree is at least one: an
/// edgeless vertex gets the entry 1 on the diagonal.
pub fn renormalized_adjacency(graph: &Graph) -> SparseMatrix {
    let n = graph.n();
    let inv_sqrt: Vec<f64> = graph.degrees.iter().map(|&d| 1.0 / (d + 1.0).sqrt()).collect();
    let mut triplets = Vec::with_capacity(graph.adjacency.nnz() + n);
    for i in 0..n {
        triplets.push((i, i, inv_sqrt[i] * inv_sqrt[i]));
        for (j, w) in graph.adjacency.iter_row(i) {
            if w != 0.0 {
                triplets.push((i, j, w * inv_sqrt[i] * inv_sqrt[j]));
            }
        }
    }
    SparseMatrix::from_triplets(n, n, &triplets).expect("renormalized entries are finite")
}
