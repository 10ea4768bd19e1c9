//! Randomized invariants over the sparse kernels, the Laplacian builders,
//! the eigensolver and the iterative filters. Every fast path is compared
//! against a dense or closed-form reference on generated inputs.

use glp::dense::{solve_linear, DenseMatrix};
use glp::filter::{apply_ar, apply_rnm, choose_truncation, truncation_bound};
use glp::pipeline::{make_split, LabelBudget};
use glp::sparse::{
    build_laplacian, renormalized_adjacency, spmm, spmm_transpose,
    symmetric_normalized_adjacency, Graph, LaplacianKind, SparseMatrix,
};
use glp::spectral::{
    eigendecompose, eigenvalue_bound_check, exact_filter_matrix, FrequencyResponse,
};
use proptest::prelude::*;

/// Shrink-friendly description of an undirected weighted graph. Kept as raw
/// edges so proptest can minimize failing cases; `build` assembles the graph.
#[derive(Debug, Clone)]
struct GraphSpec {
    n: usize,
    edges: Vec<(usize, usize, f64)>,
}

impl GraphSpec {
    fn build(&self) -> Graph {
        Graph::from_edges(self.n, &self.edges).expect("generated edges are valid")
    }
}

fn arb_graph_spec(max_n: usize) -> impl Strategy<Value = GraphSpec> {
    (2usize..max_n).prop_flat_map(|n| {
        proptest::collection::vec(((0..n), (0..n), 0.25f64..4.0), 0..3 * n).prop_map(
            move |raw| {
                let mut edges: Vec<(usize, usize, f64)> =
                    raw.into_iter().filter(|&(i, j, _)| i != j).collect();
                if edges.is_empty() {
                    edges.push((0, 1, 1.0));
                }
                GraphSpec { n, edges }
            },
        )
    })
}

/// A graph together with a feature matrix of matching height.
fn arb_graph_and_features(
    max_n: usize,
    cols: usize,
) -> impl Strategy<Value = (GraphSpec, DenseMatrix)> {
    arb_graph_spec(max_n).prop_flat_map(move |spec| {
        let n = spec.n;
        proptest::collection::vec(-3.0f64..3.0, n * cols)
            .prop_map(move |data| {
                let x = DenseMatrix::from_vec(n, cols, data).expect("length matches");
                (spec.clone(), x)
            })
    })
}

/// Raw triplets for a rectangular sparse matrix, duplicates included, plus a
/// dense right-hand side.
fn arb_triplet_instance() -> impl Strategy<Value = (usize, usize, Vec<(usize, usize, f64)>, DenseMatrix)>
{
    (1usize..9, 1usize..9, 1usize..4).prop_flat_map(|(rows, cols, width)| {
        (
            proptest::collection::vec(((0..rows), (0..cols), -2.0f64..2.0), 0..40),
            proptest::collection::vec(-2.0f64..2.0, cols * width),
        )
            .prop_map(move |(triplets, data)| {
                let x = DenseMatrix::from_vec(cols, width, data).expect("length matches");
                (rows, cols, triplets, x)
            })
    })
}

/// Complete labels grouped by class, a per-class budget strictly below every
/// class size, and a seed.
fn arb_split_instance() -> impl Strategy<Value = (Vec<usize>, usize, u64)> {
    (2usize..5)
        .prop_flat_map(|classes| {
            (
                proptest::collection::vec(4usize..12, classes),
                1usize..3,
                any::<u64>(),
            )
        })
        .prop_map(|(sizes, budget, seed)| {
            let mut labels = Vec::new();
            for (class, &size) in sizes.iter().enumerate() {
                labels.extend(std::iter::repeat_n(class, size));
            }
            (labels, budget, seed)
        })
}

fn max_abs(values: &[f64]) -> f64 {
    values.iter().fold(0.0, |acc, v| acc.max(v.abs()))
}

proptest! {
    /// CSR assembly sums duplicate triplets, keeps columns strictly
    /// increasing per row, and both multiply kernels agree with the dense
    /// triple loop.
    #[test]
    fn sparse_kernels_match_the_dense_reference(
        (rows, cols, triplets, x) in arb_triplet_instance()
    ) {
        let a = SparseMatrix::from_triplets(rows, cols, &triplets).unwrap();

        for i in 0..rows {
            let row_cols: Vec<usize> = a.iter_row(i).map(|(j, _)| j).collect();
            for pair in row_cols.windows(2) {
                prop_assert!(pair[0] < pair[1], "columns must strictly increase");
            }
        }

        let mut accumulated = DenseMatrix::zeros(rows, cols);
        for &(i, j, v) in &triplets {
            accumulated.set(i, j, accumulated.get(i, j) + v);
        }
        prop_assert!(a.to_dense().max_abs_diff(&accumulated) <= 1e-12);

        let fast = spmm(&a, &x).unwrap();
        let slow = a.to_dense().matmul(&x).unwrap();
        prop_assert!(fast.max_abs_diff(&slow) <= 1e-12);

        let y_data: Vec<f64> = (0..rows * 2).map(|i| (i as f64) * 0.3 - 1.0).collect();
        let y = DenseMatrix::from_vec(rows, 2, y_data).unwrap();
        let fast_t = spmm_transpose(&a, &y).unwrap();
        let slow_t = a.to_dense().transpose_matmul(&y).unwrap();
        prop_assert!(fast_t.max_abs_diff(&slow_t) <= 1e-12);
    }

    /// The unnormalized Laplacian has zero row sums; every symmetric variant
    /// is symmetric to machine precision.
    #[test]
    fn laplacians_keep_their_structure(spec in arb_graph_spec(14)) {
        let graph = spec.build();

        let l = build_laplacian(&graph, LaplacianKind::Unnormalized).unwrap();
        prop_assert!(max_abs(&l.row_sums()) <= 1e-12);
        prop_assert!(l.max_abs_asymmetry() <= 1e-12);

        for kind in [LaplacianKind::Symmetric, LaplacianKind::RenormalizedSymmetric] {
            let l = build_laplacian(&graph, kind).unwrap();
            prop_assert!(l.max_abs_asymmetry() <= 1e-12);
        }
    }

    /// The eigensolver returns an ascending spectrum in [0, 2] for the
    /// symmetric-normalized Laplacian, with an orthonormal basis that
    /// reconstructs the operator.
    #[test]
    fn eigensolver_output_is_an_orthonormal_eigenbasis(spec in arb_graph_spec(12)) {
        let graph = spec.build();
        let l = build_laplacian(&graph, LaplacianKind::Symmetric).unwrap();
        let spectrum = eigendecompose(&l).unwrap();
        let n = spectrum.n();

        for pair in spectrum.eigenvalues.windows(2) {
            prop_assert!(pair[0] <= pair[1] + 1e-12, "eigenvalues must ascend");
        }
        prop_assert!(spectrum.eigenvalues[0] >= -1e-9);
        prop_assert!(spectrum.lambda_max() <= 2.0 + 1e-9);

        let phi = &spectrum.eigenvectors;
        let gram = phi.transpose_matmul(phi).unwrap();
        prop_assert!(gram.max_abs_diff(&DenseMatrix::identity(n)) <= 1e-8);

        let mut scaled = phi.clone();
        for j in 0..n {
            for i in 0..n {
                let v = scaled.get(i, j) * spectrum.eigenvalues[j];
                scaled.set(i, j, v);
            }
        }
        let rebuilt = scaled.matmul_transpose_right(phi).unwrap();
        prop_assert!(rebuilt.max_abs_diff(&l.to_dense()) <= 1e-8);
    }

    /// Renormalization shrinks the top eigenvalue below the degree-based
    /// bound, and tightening the bound per component never loosens it.
    #[test]
    fn renormalization_shrinkage_bound_holds(spec in arb_graph_spec(14)) {
        let graph = spec.build();
        let check = eigenvalue_bound_check(&graph).unwrap();
        prop_assert!(check.holds);
        prop_assert!(check.lambda_max_renormalized <= check.global_bound + 1e-10);
        prop_assert!(check.component_bound <= check.global_bound + 1e-12);
    }

    /// The sparse renormalization filter agrees with the dense spectral
    /// reference built from the renormalized Laplacian.
    #[test]
    fn rnm_filter_matches_the_spectral_reference(
        (spec, x) in arb_graph_and_features(12, 2),
        k in 0usize..6,
    ) {
        let graph = spec.build();
        let w = renormalized_adjacency(&graph);
        let (fast, report) = apply_rnm(&w, &x, k).unwrap();
        prop_assert_eq!(report.iterations, k);
        prop_assert!(report.truncation_bound.is_none());

        let l = build_laplacian(&graph, LaplacianKind::RenormalizedSymmetric).unwrap();
        let g = exact_filter_matrix(&l, FrequencyResponse::Renormalization { k }).unwrap();
        let exact = g.matmul(&x).unwrap();
        prop_assert!(fast.max_abs_diff(&exact) <= 1e-8);
    }

    /// The truncated auto-regressive filter stays within its advertised
    /// operator-norm bound of the dense inverse, and converges to it when
    /// run far past the truncation point.
    #[test]
    fn ar_truncation_respects_its_bound(
        (spec, x) in arb_graph_and_features(12, 2),
        alpha in 0.5f64..4.0,
    ) {
        let graph = spec.build();
        let n = graph.n();
        let w = symmetric_normalized_adjacency(&graph).unwrap();
        let l = build_laplacian(&graph, LaplacianKind::Symmetric).unwrap();

        let mut system = DenseMatrix::identity(n);
        system.axpy(alpha, &l.to_dense()).unwrap();
        let exact = solve_linear(&system, &x).unwrap();

        let k = choose_truncation(alpha);
        let (truncated, report) = apply_ar(&w, &x, alpha, k).unwrap();
        let bound = report.truncation_bound.expect("truncated series reports a bound");
        prop_assert!((bound - truncation_bound(alpha, k)).abs() <= 1e-15);

        let mut error = truncated;
        error.axpy(-1.0, &exact).unwrap();
        let budget = bound * x.operator_norm() * (1.0 + 1e-9) + 1e-12;
        prop_assert!(
            error.operator_norm() <= budget,
            "operator-norm error {} exceeds bound {}",
            error.operator_norm(),
            budget,
        );

        let (converged, _) = apply_ar(&w, &x, alpha, 200).unwrap();
        prop_assert!(converged.max_abs_diff(&exact) <= 1e-10);
    }

    /// Both low-pass filters never increase the Laplacian quadratic form of
    /// any column, measured against the Laplacian each filter is diagonal in.
    #[test]
    fn filters_never_roughen_a_signal(
        (spec, x) in arb_graph_and_features(12, 2),
        k in 1usize..4,
        alpha in 0.5f64..8.0,
    ) {
        let graph = spec.build();
        let tolerance = |before: f64| before + 1e-10 * (1.0 + before.abs());

        let l_ren = build_laplacian(&graph, LaplacianKind::RenormalizedSymmetric).unwrap();
        let (smoothed, _) = apply_rnm(&renormalized_adjacency(&graph), &x, k).unwrap();
        for j in 0..x.n_cols() {
            let before = glp::spectral::smoothness(&l_ren, &x.column(j));
            let after = glp::spectral::smoothness(&l_ren, &smoothed.column(j));
            prop_assert!(after <= tolerance(before));
        }

        let l_sym = build_laplacian(&graph, LaplacianKind::Symmetric).unwrap();
        let w = symmetric_normalized_adjacency(&graph).unwrap();
        let (smoothed, _) = apply_ar(&w, &x, alpha, choose_truncation(alpha)).unwrap();
        for j in 0..x.n_cols() {
            let before = glp::spectral::smoothness(&l_sym, &x.column(j));
            let after = glp::spectral::smoothness(&l_sym, &smoothed.column(j));
            prop_assert!(after <= tolerance(before));
        }
    }

    /// Stratified splits take exactly the budget from every class, never
    /// overlap the test set, cover all vertices, and depend only on the seed.
    #[test]
    fn splits_are_stratified_partitions((labels, budget, seed) in arb_split_instance()) {
        let split = make_split(&labels, LabelBudget::PerClass(budget), seed).unwrap();
        let again = make_split(&labels, LabelBudget::PerClass(budget), seed).unwrap();
        prop_assert_eq!(&split.labeled, &again.labeled);
        prop_assert_eq!(&split.test, &again.test);

        let classes = labels.iter().max().unwrap() + 1;
        prop_assert_eq!(split.labeled.len(), budget * classes);
        for class in 0..classes {
            let taken = split.labeled.iter().filter(|&&v| labels[v] == class).count();
            prop_assert_eq!(taken, budget);
        }

        let mut seen = vec![false; labels.len()];
        for &v in split.labeled.iter().chain(&split.test) {
            prop_assert!(!seen[v], "vertex {} assigned twice", v);
            seen[v] = true;
        }
        prop_assert!(seen.iter().all(|&s| s), "every vertex lands in one side");

        for window in [&split.labeled, &split.test] {
            for pair in window.windows(2) {
                prop_assert!(pair[0] < pair[1], "vertex lists are sorted");
            }
        }
    }
}
