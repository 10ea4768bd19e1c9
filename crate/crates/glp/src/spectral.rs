//! Dense spectral reference: eigendecomposition, exact filter matrices,
//! smoothness and graph Fourier analysis.
//!
//! Everything here densifies and runs in cubic time, deliberately. The point
//! of this module is to be the slow, transparent ground truth that the sparse
//! iterative filters are checked against, not to be fast. Inputs beyond a
//! documented size cap are refused rather than ground through.
//!
//! The eigensolver is the classical symmetric pair of Householder
//! tridiagonalization followed by QL iteration with implicit shifts, in the
//! EISPACK/JAMA lineage. Eigenvalues come back ascending; eigenvectors are
//! orthonormal columns, sign-normalized so the first component of visible
//! magnitude is positive, which makes decompositions comparable across runs.

use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::sparse::{build_laplacian, Graph, LaplacianKind, SparseMatrix};

/// Largest matrix order the dense routines accept by default.
pub const DEFAULT_SIZE_CAP: usize = 4000;

/// Iteration budget per eigenvalue in the QL loop.
const MAX_QL_ITERATIONS: usize = 50;

/// Result of a symmetric eigendecomposition. `eigenvectors` holds one
/// orthonormal eigenvector per column, column `i` pairing with
/// `eigenvalues[i]`; eigenvalues ascend.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: DenseMatrix,
}

impl Spectrum {
    pub fn n(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Largest eigenvalue; 0 for an empty spectrum.
    pub fn lambda_max(&self) -> f64 {
        self.eigenvalues.last().copied().unwrap_or(0.0)
    }
}

/// Spectral response of a filter, as a function of Laplacian eigenvalue.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FrequencyResponse {
    /// `p(lambda) = 1 / (1 + alpha * lambda)`, the auto-regressive filter.
    AutoRegressive { alpha: f64 },
    /// `p(lambda) = (1 - lambda)^k`, the renormalization filter: k rounds of
    /// neighborhood averaging by `I - L`.
    Renormalization { k: usize },
    /// `p(lambda) = 1`, the do-nothing filter.
    Identity,
}

/// Evaluate a frequency response at one eigenvalue. The auto-regressive
/// response has a pole at `lambda = -1/alpha` and errors there.
pub fn response(filter: FrequencyResponse, lambda: f64) -> Result<f64> {
    match filter {
        FrequencyResponse::AutoRegressive { alpha } => {
            let denom = 1.0 + alpha * lambda;
            if denom.abs() < 1e-12 {
                return Err(Error::ResponsePole { lambda, alpha });
            }
            Ok(1.0 / denom)
        }
        FrequencyResponse::Renormalization { k } => Ok((1.0 - lambda).powi(k as i32)),
        FrequencyResponse::Identity => Ok(1.0),
    }
}

/// Eigendecompose a symmetric sparse matrix, densifying first. Refuses
/// matrices larger than [`DEFAULT_SIZE_CAP`].
pub fn eigendecompose(matrix: &SparseMatrix) -> Result<Spectrum> {
    eigendecompose_with_cap(matrix, DEFAULT_SIZE_CAP)
}

/// Eigendecompose with an explicit size cap. The input must be square and
/// symmetric to within 1e-8; symmetry roundoff below that is averaged away
/// before decomposition.
pub fn eigendecompose_with_cap(matrix: &SparseMatrix, cap: usize) -> Result<Spectrum> {
    if matrix.n_rows() != matrix.n_cols() {
        return Err(Error::NotSquare {
            op: "eigendecompose",
            n_rows: matrix.n_rows(),
            n_cols: matrix.n_cols(),
        });
    }
    let n = matrix.n_rows();
    if n > cap {
        return Err(Error::SizeCapExceeded { n, cap });
    }
    let asym = matrix.max_abs_asymmetry();
    if asym > 1e-8 {
        let (row, col, forward, reverse) = worst_asymmetry(matrix);
        return Err(Error::Asymmetric {
            row,
            col,
            forward,
            reverse,
        });
    }
    if n == 0 {
        return Ok(Spectrum {
            eigenvalues: vec![],
            eigenvectors: DenseMatrix::zeros(0, 0),
        });
    }
    // Symmetrize exactly so the tridiagonalization sees a true symmetric
    // matrix even when normalization arithmetic left roundoff asymmetry.
    let dense = matrix.to_dense();
    let mut v = DenseMatrix::from_fn(n, n, |i, j| 0.5 * (dense.get(i, j) + dense.get(j, i)));
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    tridiagonalize(&mut v, &mut d, &mut e);
    ql_implicit_shift(&mut v, &mut d, &mut e)?;
    Ok(sort_and_normalize(v, d))
}

fn worst_asymmetry(m: &SparseMatrix) -> (usize, usize, f64, f64) {
    let mut worst = (0, 0, 0.0, 0.0);
    let mut gap = -1.0;
    for i in 0..m.n_rows() {
        for (j, v) in m.iter_row(i) {
            let r = m.get(j, i);
            if (v - r).abs() > gap {
                gap = (v - r).abs();
                worst = (i, j, v, r);
            }
        }
    }
    worst
}

/// Householder reduction of a symmetric matrix to tridiagonal form, with the
/// orthogonal transformations accumulated in `v`. On return `d` holds the
/// diagonal and `e[1..]` the subdiagonal.
#[allow(clippy::needless_range_loop)]
fn tridiagonalize(v: &mut DenseMatrix, d: &mut [f64], e: &mut [f64]) {
    let n = d.len();
    for (j, dj) in d.iter_mut().enumerate() {
        *dj = v.get(n - 1, j);
    }

    for i in (1..n).rev() {
        // Scale to avoid under/overflow, then build the Householder vector
        // that annihilates row i left of the subdiagonal.
        let mut scale = 0.0;
        let mut h = 0.0;
        for dk in d.iter().take(i) {
            scale += dk.abs();
        }
        if scale == 0.0 {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v.get(i - 1, j);
                v.set(i, j, 0.0);
                v.set(j, i, 0.0);
            }
        } else {
            for k in 0..i {
                d[k] /= scale;
                h += d[k] * d[k];
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > 0.0 {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for ej in e.iter_mut().take(i) {
                *ej = 0.0;
            }

            // Apply the similarity transformation to the remaining block.
            for j in 0..i {
                f = d[j];
                v.set(j, i, f);
                g = e[j] + v.get(j, j) * f;
                for k in j + 1..i {
                    g += v.get(k, j) * d[k];
                    e[k] += v.get(k, j) * f;
                }
                e[j] = g;
            }
            f = 0.0;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                for k in j..i {
                    let val = v.get(k, j) - (f * e[k] + g * d[k]);
                    v.set(k, j, val);
                }
                d[j] = v.get(i - 1, j);
                v.set(i, j, 0.0);
            }
        }
        d[i] = h;
    }

    // Accumulate the transformations.
    for i in 0..n.saturating_sub(1) {
        v.set(n - 1, i, v.get(i, i));
        v.set(i, i, 1.0);
        let h = d[i + 1];
        if h != 0.0 {
            for (k, dk) in d.iter_mut().enumerate().take(i + 1) {
                *dk = v.get(k, i + 1) / h;
            }
            for j in 0..=i {
                let mut g = 0.0;
                for k in 0..=i {
                    g += v.get(k, i + 1) * v.get(k, j);
                }
                for k in 0..=i {
                    let val = v.get(k, j) - g * d[k];
                    v.set(k, j, val);
                }
            }
        }
        for k in 0..=i {
            v.set(k, i + 1, 0.0);
        }
    }
    for (j, dj) in d.iter_mut().enumerate() {
        *dj = v.get(n - 1, j);
        v.set(n - 1, j, 0.0);
    }
    v.set(n - 1, n - 1, 1.0);
    e[0] = 0.0;
}

/// QL iteration with implicit shifts on the tridiagonal form, accumulating
/// eigenvectors in `v`. An off-diagonal entry counts as negligible once it
/// drops below `max(eps * tst1, 1e-10)`, where `tst1` tracks the running
/// magnitude of the problem; each eigenvalue gets at most
/// [`MAX_QL_ITERATIONS`] sweeps before the solver gives up.
#[allow(clippy::needless_range_loop)]
fn ql_implicit_shift(v: &mut DenseMatrix, d: &mut [f64], e: &mut [f64]) -> Result<()> {
    let n = d.len();
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;

    let eps = f64::EPSILON;
    let mut f = 0.0;
    let mut tst1: f64 = 0.0;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let threshold = (eps * tst1).max(1e-10);

        // Find the first negligible subdiagonal entry at or after l.
        let mut m = l;
        while m < n - 1 && e[m].abs() > threshold {
            m += 1;
        }

        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > MAX_QL_ITERATIONS {
                    return Err(Error::NoConvergence {
                        index: l,
                        iterations: MAX_QL_ITERATIONS,
                    });
                }

                // Implicit shift from the 2x2 block at l.
                let g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().take(n).skip(l + 2) {
                    *di -= h;
                }
                f += h;

                // One QL sweep, rotating rows m-1 down to l.
                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    let g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);

                    for k in 0..n {
                        h = v.get(k, i + 1);
                        v.set(k, i + 1, s * v.get(k, i) + c * h);
                        v.set(k, i, c * v.get(k, i) - s * h);
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;

                if e[l].abs() <= threshold {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    Ok(())
}

/// Sort eigenpairs ascending and fix eigenvector signs. Exact eigenvalue ties
/// are ordered by the row index of the first visible eigenvector component,
/// making the output a pure function of the input matrix.
#[allow(clippy::needless_range_loop)]
fn sort_and_normalize(mut v: DenseMatrix, d: Vec<f64>) -> Spectrum {
    let n = d.len();
    let mut first_visible = vec![n; n];
    for j in 0..n {
        if let Some(i0) = (0..n).find(|&i| v.get(i, j).abs() > 1e-12) {
            first_visible[j] = i0;
            if v.get(i0, j) < 0.0 {
                for i in 0..n {
                    let val = -v.get(i, j);
                    v.set(i, j, val);
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].total_cmp(&d[b]).then(first_visible[a].cmp(&first_visible[b])));
    let eigenvalues: Vec<f64> = order.iter().map(|&j| d[j]).collect();
    let eigenvectors = DenseMatrix::from_fn(n, n, |i, j| v.get(i, order[j]));
    Spectrum {
        eigenvalues,
        eigenvectors,
    }
}

/// Exact dense filter matrix `G = Phi p(Lambda) Phi^T` for a symmetric
/// Laplacian, by full eigendecomposition. This is the reference the sparse
/// iterative filters are verified against.
pub fn exact_filter_matrix(
    laplacian: &SparseMatrix,
    filter: FrequencyResponse,
) -> Result<DenseMatrix> {
    let spectrum = eigendecompose(laplacian)?;
    let n = spectrum.n();
    let mut scaled = spectrum.eigenvectors.clone();
    for (j, &lambda) in spectrum.eigenvalues.iter().enumerate() {
        let p = response(filter, lambda)?;
        for i in 0..n {
            let val = scaled.get(i, j) * p;
            scaled.set(i, j, val);
        }
    }
    scaled.matmul_transpose_right(&spectrum.eigenvectors)
}

/// Smoothness of a signal with respect to a Laplacian: the quadratic form
/// `f^T L f`. For the unnormalized Laplacian this equals the weighted sum of
/// squared differences across edges; it is nonnegative whenever `L` is
/// positive semidefinite. The signal length must match the matrix order.
pub fn smoothness(laplacian: &SparseMatrix, signal: &[f64]) -> f64 {
    assert_eq!(
        laplacian.n_rows(),
        signal.len(),
        "smoothness: signal length must match matrix order"
    );
    let mut total = 0.0;
    for (i, &fi) in signal.iter().enumerate() {
        let mut row_acc = 0.0;
        for (j, v) in laplacian.iter_row(i) {
            row_acc += v * signal[j];
        }
        total += fi * row_acc;
    }
    total
}

/// Graph Fourier coefficients of a signal: `c = Phi^T f`, the projection of
/// the signal on each eigenvector. The signal length must match.
pub fn fourier_coefficients(spectrum: &Spectrum, signal: &[f64]) -> Vec<f64> {
    let n = spectrum.n();
    assert_eq!(n, signal.len(), "fourier_coefficients: length mismatch");
    (0..n)
        .map(|j| {
            (0..n)
                .map(|i| spectrum.eigenvectors.get(i, j) * signal[i])
                .sum()
        })
        .collect()
}

/// Connected components as sorted vertex lists, ordered by smallest member.
/// Stored zero-weight entries do not connect.
pub fn connected_components(graph: &Graph) -> Vec<Vec<usize>> {
    let n = graph.n();
    let mut seen = vec![false; n];
    let mut components = Vec::new();
    for start in 0..n {
        if seen[start] {
            continue;
        }
        let mut queue = std::collections::VecDeque::from([start]);
        seen[start] = true;
        let mut members = vec![start];
        while let Some(u) = queue.pop_front() {
            for (w, value) in graph.adjacency().iter_row(u) {
                if value != 0.0 && !seen[w] {
                    seen[w] = true;
                    members.push(w);
                    queue.push_back(w);
                }
            }
        }
        members.sort_unstable();
        components.push(members);
    }
    components
}

/// Outcome of checking the spectral shrinkage of renormalization on one
/// graph: the top eigenvalue of the renormalized Laplacian against the bound
/// `d_m / (d_m + 1) * lambda_max` derived from the largest degree, both
/// globally and tightened per connected component.
#[derive(Debug, Clone)]
pub struct EigenvalueBound {
    /// Top eigenvalue of the symmetric-normalized Laplacian.
    pub lambda_max_symmetric: f64,
    /// Top eigenvalue of the renormalized Laplacian.
    pub lambda_max_renormalized: f64,
    /// `d_m / (d_m + 1) * lambda_max` with the global maximum degree.
    pub global_bound: f64,
    /// Maximum of the per-component bounds; never looser than the global
    /// bound because each component sees only its own degrees and spectrum.
    pub component_bound: f64,
    /// Whether the renormalized top eigenvalue respects the component bound
    /// (up to floating-point slack).
    pub holds: bool,
}

/// Measure how renormalization shrinks the top of the spectrum and verify the
/// degree-based bound, per connected component and globally.
pub fn eigenvalue_bound_check(graph: &Graph) -> Result<EigenvalueBound> {
    let l_sym = build_laplacian(graph, LaplacianKind::Symmetric)?;
    let l_ren = build_laplacian(graph, LaplacianKind::RenormalizedSymmetric)?;
    let lambda_max_symmetric = eigendecompose(&l_sym)?.lambda_max();
    let lambda_max_renormalized = eigendecompose(&l_ren)?.lambda_max();

    let d_m = graph.max_degree();
    let global_bound = d_m / (d_m + 1.0) * lambda_max_symmetric;

    let mut component_bound: f64 = 0.0;
    for members in connected_components(graph) {
        let sub = graph.induced_subgraph(&members)?;
        let sub_sym = build_laplacian(&sub, LaplacianKind::Symmetric)?;
        let sub_lambda = eigendecompose(&sub_sym)?.lambda_max();
        let sub_dm = sub.max_degree();
        component_bound = component_bound.max(sub_dm / (sub_dm + 1.0) * sub_lambda);
    }

    let holds = lambda_max_renormalized <= component_bound + 1e-9;
    Ok(EigenvalueBound {
        lambda_max_symmetric,
        lambda_max_renormalized,
        global_bound,
        component_bound,
        holds,
    })
}
