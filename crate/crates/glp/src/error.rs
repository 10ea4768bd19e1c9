//! Error type shared across the crate.
//!
//! Every fallible operation returns [`Result`]. Errors carry the concrete
//! values that triggered them (shapes, indices, offending entries) so that a
//! failure deep inside a pipeline still names the vertex or matrix entry at
//! fault.

use std::path::PathBuf;

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong when building graphs, filtering, training or
/// doing I/O.
#[derive(Debug, Error)]
pub enum Error {
    /// Two operands disagree in shape. `op` names the operation as the caller
    /// sees it, e.g. `"spmm"` or `"matmul"`.
    #[error("{op}: dimension mismatch, left operand is {left_rows}x{left_cols}, right operand is {right_rows}x{right_cols}")]
    DimensionMismatch {
        op: &'static str,
        left_rows: usize,
        left_cols: usize,
        right_rows: usize,
        right_cols: usize,
    },

    /// An operation that needs a square matrix was handed a rectangular one.
    #[error("{op}: matrix must be square, got {n_rows}x{n_cols}")]
    NotSquare {
        op: &'static str,
        n_rows: usize,
        n_cols: usize,
    },

    /// A constructor was handed NaN or an infinity.
    #[error("{op}: non-finite value {value} at ({row}, {col})")]
    NonFinite {
        op: &'static str,
        row: usize,
        col: usize,
        value: f64,
    },

    /// An index (vertex, column, class) fell outside its valid range.
    #[error("{op}: index {index} out of range, bound is {bound}")]
    IndexOutOfRange {
        op: &'static str,
        index: usize,
        bound: usize,
    },

    /// Graphs are simple: self-loops only ever enter through renormalization,
    /// never through raw input.
    #[error("self-loop on vertex {vertex}: raw graph input must have a zero diagonal")]
    SelfLoop { vertex: usize },

    /// Edge weights are nonnegative by definition.
    #[error("negative weight {weight} on edge ({row}, {col})")]
    NegativeWeight { row: usize, col: usize, weight: f64 },

    /// An adjacency candidate was not symmetric.
    #[error("adjacency not symmetric at ({row}, {col}): {forward} vs {reverse}")]
    Asymmetric {
        row: usize,
        col: usize,
        forward: f64,
        reverse: f64,
    },

    /// Graphs have at least one vertex.
    #[error("graph must have at least one vertex")]
    EmptyGraph,

    /// Degree-normalized operators divide by the degree; in strict mode an
    /// isolated vertex is reported instead of silently patched.
    #[error("vertex {vertex} is isolated: degree-normalized operator undefined in strict mode")]
    IsolatedVertex { vertex: usize },

    /// Dense spectral routines are meant for verification scale and refuse
    /// larger inputs instead of thrashing.
    #[error("matrix of size {n} exceeds the dense spectral cap of {cap}")]
    SizeCapExceeded { n: usize, cap: usize },

    /// The QL iteration failed to drive an off-diagonal entry to zero.
    #[error("eigensolver did not converge for eigenvalue {index} within {iterations} iterations")]
    NoConvergence { index: usize, iterations: usize },

    /// The auto-regressive response 1 / (1 + alpha * lambda) has a pole at
    /// lambda = -1/alpha.
    #[error("auto-regressive response has a pole at lambda = {lambda} for alpha = {alpha}")]
    ResponsePole { lambda: f64, alpha: f64 },

    /// A configuration value failed validation before any work started.
    #[error("invalid configuration: {what}")]
    InvalidConfig { what: String },

    /// Training produced a non-finite loss; the step index is reported so the
    /// run can be replayed up to the failure.
    #[error("training loss became non-finite at step {step}")]
    NonFiniteLoss { step: usize },

    /// A label referenced a class outside the declared class set.
    #[error("vertex {vertex} has class {class}, but only {classes} classes exist")]
    ClassOutOfRange {
        vertex: usize,
        class: usize,
        classes: usize,
    },

    /// Propagation and training need at least one labeled vertex.
    #[error("no labeled vertices")]
    NoLabeledVertices,

    /// A stratified split asked a class for more vertices than it has.
    #[error("class {class} has {size} vertices, split requested {requested} labeled per class")]
    ClassTooSmall {
        class: usize,
        size: usize,
        requested: usize,
    },

    /// Every vertex ended up labeled, leaving nothing to evaluate on.
    #[error("split left the test set empty")]
    EmptyTestSet,

    /// Benchmarks score against ground truth, so every vertex needs a label.
    #[error("vertex {vertex} has no ground-truth label")]
    MissingLabel { vertex: usize },

    /// A benchmark run failed; the run index locates the offending seed.
    /// The cause is attached as the error source rather than inlined, so
    /// chain-printing reporters do not show it twice.
    #[error("benchmark run {index} failed")]
    RunFailed {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    /// Filesystem failure, tagged with the path involved. The io cause is
    /// attached as the error source.
    #[error("io error on {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Malformed input file; `line` is 1-based.
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
}

impl Error {
    /// True when the operation was refused because it exceeds a documented
    /// capability limit rather than failing outright. The CLI maps these to a
    /// distinct exit code.
    pub fn is_capability_limit(&self) -> bool {
        match self {
            Error::SizeCapExceeded { .. } => true,
            Error::RunFailed { source, .. } => source.is_capability_limit(),
            _ => false,
        }
    }

    /// Shorthand used by the I/O layer.
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Shorthand used by the parsers.
    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }
}
