//! Sparse spectral graph filtering for semi-supervised learning on graphs.
//!
//! The crate treats label propagation and graph convolutions as what they
//! are spectrally: low-pass filters on graph signals. It provides
//!
//! * sparse CSR graphs with the usual Laplacian variants, including the
//!   renormalized one that adds a self-loop to every vertex ([`sparse`]);
//! * a dense spectral reference that eigendecomposes small operators and
//!   evaluates any filter exactly, so every fast path has a slow ground
//!   truth to be checked against ([`spectral`]);
//! * the sparse iterative filters themselves: auto-regressive smoothing by
//!   a truncated Neumann series with a certified truncation bound, and
//!   renormalization smoothing by repeated neighborhood averaging
//!   ([`filter`]);
//! * closed-form label propagation ([`labelprop`]) and manually
//!   backpropagated neural models, a two-layer perceptron and a multi-hop
//!   graph convolution, trained with Adam ([`neural`]);
//! * the experiment pipeline: stratified splits, end-to-end runs and a
//!   benchmark harness with deterministic seeding ([`pipeline`]);
//! * dataset loading, synthetic block-model generation and CSV export
//!   ([`dataio`]).
//!
//! Determinism is a design rule throughout: all randomness derives from one
//! seed ([`rng`]), and parallel kernels are ordered so that results do not
//! depend on thread count.

pub mod dataio;
pub mod dense;
pub mod error;
pub mod filter;
pub mod labelprop;
pub mod neural;
pub mod pipeline;
pub mod rng;
pub mod sparse;
pub mod spectral;

pub use dense::DenseMatrix;
pub use error::{Error, Result};
pub use sparse::{Graph, LaplacianKind, SparseMatrix};
