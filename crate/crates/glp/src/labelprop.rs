//! Closed-form label propagation.
//!
//! Propagation spreads a one-hot label indicator `Y` through the graph as
//! `Z = (I + alpha L)^{-1} Y` and classifies each vertex by the largest
//! propagated score. Spectrally this is the auto-regressive low-pass filter
//! applied to the label signal, so the sparse truncated series from
//! [`crate::filter`] computes it without ever forming an inverse. A dense
//! exact mode backs the iterative path for verification and covers the
//! unnormalized Laplacian, which has no convergent series form.
//!
//! Scores are reported raw: no column normalization is applied, and argmax
//! ties resolve to the lowest class index.

use crate::dense::{solve_linear, DenseMatrix};
use crate::error::{Error, Result};
use crate::filter::{apply_ar, choose_truncation, FilterReport};
use crate::sparse::{
    build_laplacian, normalized_adjacency_with, Graph, IsolatedPolicy, LaplacianKind,
};
use crate::spectral::DEFAULT_SIZE_CAP;

/// Outcome of one propagation: raw scores, the argmax labels, and the filter
/// report when the iterative path ran.
#[derive(Debug, Clone)]
pub struct Propagation {
    pub scores: DenseMatrix,
    pub labels: Vec<usize>,
    pub report: Option<FilterReport>,
}

/// One-hot indicator matrix for partially labeled vertices: row `i` is the
/// unit vector of `labels[i]`, or all zeros when unlabeled. Rejects class
/// indices at or beyond `n_classes` and requires at least one labeled vertex.
pub fn one_hot(labels: &[Option<usize>], n_classes: usize) -> Result<DenseMatrix> {
    let mut y = DenseMatrix::zeros(labels.len(), n_classes);
    let mut any = false;
    for (vertex, label) in labels.iter().enumerate() {
        if let Some(class) = *label {
            if class >= n_classes {
                return Err(Error::ClassOutOfRange {
                    vertex,
                    class,
                    classes: n_classes,
                });
            }
            y.set(vertex, class, 1.0);
            any = true;
        }
    }
    if !any {
        return Err(Error::NoLabeledVertices);
    }
    Ok(y)
}

/// Argmax over each row, ties going to the lowest column index.
pub fn classify(scores: &DenseMatrix) -> Vec<usize> {
    (0..scores.n_rows())
        .map(|i| {
            let row = scores.row(i);
            let mut best = 0;
            for (j, &v) in row.iter().enumerate().skip(1) {
                if v > row[best] {
                    best = j;
                }
            }
            best
        })
        .collect()
}

/// Propagate labels with the default setup: symmetric-normalized Laplacian,
/// iteration count from the truncation heuristic.
pub fn propagate(graph: &Graph, y: &DenseMatrix, alpha: f64) -> Result<Propagation> {
    propagate_with(graph, y, alpha, LaplacianKind::Symmetric, None)
}

/// Propagate labels through `Z = (I + alpha L)^{-1} Y` for the chosen
/// Laplacian kind. Normalized kinds run the sparse truncated series with
/// `iterations` steps (heuristic when `None`); the unnormalized kind falls
/// back to the exact dense solve, since its series does not converge.
pub fn propagate_with(
    graph: &Graph,
    y: &DenseMatrix,
    alpha: f64,
    kind: LaplacianKind,
    iterations: Option<usize>,
) -> Result<Propagation> {
    check_label_input(graph, y, alpha)?;
    if kind == LaplacianKind::Unnormalized {
        return propagate_exact(graph, y, alpha, kind);
    }
    let w = normalized_adjacency_with(graph, kind, IsolatedPolicy::default())?;
    let k = iterations.unwrap_or_else(|| choose_truncation(alpha));
    let (scores, report) = apply_ar(&w, y, alpha, k)?;
    let labels = classify(&scores);
    Ok(Propagation {
        scores,
        labels,
        report: Some(report),
    })
}

/// Exact dense propagation: solve `(I + alpha L) Z = Y` by LU. Capped at the
/// dense verification size; beyond it the iterative path is the tool.
pub fn propagate_exact(
    graph: &Graph,
    y: &DenseMatrix,
    alpha: f64,
    kind: LaplacianKind,
) -> Result<Propagation> {
    check_label_input(graph, y, alpha)?;
    let n = graph.n();
    if n > DEFAULT_SIZE_CAP {
        return Err(Error::SizeCapExceeded {
            n,
            cap: DEFAULT_SIZE_CAP,
        });
    }
    let l = build_laplacian(graph, kind)?;
    let mut a = l.to_dense();
    a.scale(alpha);
    a.axpy(1.0, &DenseMatrix::identity(n))?;
    let scores = solve_linear(&a, y)?;
    let labels = classify(&scores);
    Ok(Propagation {
        scores,
        labels,
        report: None,
    })
}

fn check_label_input(graph: &Graph, y: &DenseMatrix, alpha: f64) -> Result<()> {
    if y.n_rows() != graph.n() {
        return Err(Error::DimensionMismatch {
            op: "propagate",
            left_rows: graph.n(),
            left_cols: graph.n(),
            right_rows: y.n_rows(),
            right_cols: y.n_cols(),
        });
    }
    if !alpha.is_finite() || alpha < 0.0 {
        return Err(Error::InvalidConfig {
            what: format!("propagation alpha must be finite and nonnegative, got {alpha}"),
        });
    }
    if y.max_abs() == 0.0 {
        return Err(Error::NoLabeledVertices);
    }
    Ok(())
}
