//! Manually backpropagated neural models: a two-layer perceptron and a
//! multi-hop graph convolution.
//!
//! Both models share one computational skeleton with two trainable weight
//! matrices and no biases:
//!
//! * perceptron:        `logits = relu(X T0) T1`
//! * graph convolution: `logits = W_r^k relu(W_r^k (X T0)) T1`
//!
//! where `W_r` is the renormalized adjacency and `k` hops are applied around
//! each layer. Training minimizes softmax cross-entropy averaged over the
//! labeled vertices, plus an L2 penalty that by default covers only the
//! first weight matrix. Inverted dropout is applied to the input of each
//! trainable layer during training, and Adam performs the updates.
//!
//! Selection follows training loss: after every update the candidate weights
//! are scored with a dropout-free forward pass, and the weights with the
//! lowest such loss over the whole run are returned. Identical seed and
//! configuration reproduce identical models bit for bit.

use rand::Rng;

use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::labelprop::classify;
use crate::rng::{derive_rng, derive_seed, SplitMix64};
use crate::sparse::{renormalized_adjacency, spmm, spmm_transpose, Graph, SparseMatrix};

/// Which weight matrices the L2 penalty covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum L2Scope {
    /// Penalize only the first (input) weight matrix.
    #[default]
    FirstLayer,
    /// Penalize every weight matrix.
    AllLayers,
}

/// Training configuration shared by both models.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpConfig {
    /// Hidden layer width.
    pub hidden: usize,
    /// Adam step size.
    pub learning_rate: f64,
    /// Dropout rate in [0, 1), applied to the input of each trainable layer
    /// during training only.
    pub dropout: f64,
    /// L2 penalty weight; the loss gains `l2 * 0.5 * sum(theta^2)` over the
    /// matrices selected by `l2_scope`.
    pub l2: f64,
    pub l2_scope: L2Scope,
    /// Number of Adam updates to run.
    pub steps: usize,
    /// Seed for weight initialization and dropout masks.
    pub seed: u64,
}

impl Default for MlpConfig {
    fn default() -> Self {
        MlpConfig {
            hidden: 16,
            learning_rate: 0.01,
            dropout: 0.5,
            l2: 5e-4,
            l2_scope: L2Scope::default(),
            steps: 200,
            seed: 0,
        }
    }
}

impl MlpConfig {
    fn validate(&self) -> Result<()> {
        if self.hidden == 0 {
            return Err(Error::InvalidConfig {
                what: "hidden width must be at least 1".to_string(),
            });
        }
        if self.steps == 0 {
            return Err(Error::InvalidConfig {
                what: "training needs at least 1 step".to_string(),
            });
        }
        if !self.learning_rate.is_finite() || self.learning_rate <= 0.0 {
            return Err(Error::InvalidConfig {
                what: format!("learning rate must be positive, got {}", self.learning_rate),
            });
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::InvalidConfig {
                what: format!("dropout must lie in [0, 1), got {}", self.dropout),
            });
        }
        if !self.l2.is_finite() || self.l2 < 0.0 {
            return Err(Error::InvalidConfig {
                what: format!("l2 weight must be nonnegative, got {}", self.l2),
            });
        }
        Ok(())
    }
}

/// Graph convolution configuration: the shared training knobs plus the hop
/// count applied around each layer.
#[derive(Debug, Clone, PartialEq)]
pub struct IgcnConfig {
    pub base: MlpConfig,
    /// Powers of the renormalized adjacency applied at each of the two
    /// layers; at least 1.
    pub k_per_layer: usize,
}

/// The model families the trainer knows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Mlp,
    Igcn { k_per_layer: usize },
}

/// A trained model: the selected weights plus the loss history that led to
/// them.
#[derive(Debug, Clone)]
pub struct TrainedModel {
    pub kind: ModelKind,
    /// The two weight matrices at the selected step.
    pub weights: Vec<DenseMatrix>,
    /// The update step whose weights were selected (1-based; step 0 is the
    /// initialization and is never a candidate).
    pub best_step: usize,
    /// Training loss of the selected weights, measured dropout-free.
    pub best_loss: f64,
    /// Dropout-free training loss after each update; index 0 holds the loss
    /// at initialization.
    pub loss_trace: Vec<f64>,
}

impl TrainedModel {
    /// Forward pass with the selected weights. Graph convolutions need the
    /// graph back; the perceptron ignores it.
    pub fn logits(&self, graph: Option<&Graph>, x: &DenseMatrix) -> Result<DenseMatrix> {
        match self.kind {
            ModelKind::Mlp => mlp_forward(&self.weights, x),
            ModelKind::Igcn { k_per_layer } => {
                let graph = graph.ok_or_else(|| Error::InvalidConfig {
                    what: "graph convolution inference needs the graph".to_string(),
                })?;
                igcn_forward(graph, &self.weights, x, k_per_layer)
            }
        }
    }

    /// Predicted class per vertex: argmax of [`Self::logits`], ties to the
    /// lowest class.
    pub fn predict(&self, graph: Option<&Graph>, x: &DenseMatrix) -> Result<Vec<usize>> {
        Ok(classify(&self.logits(graph, x)?))
    }
}

/// Perceptron inference: `relu(X T0) T1`.
pub fn mlp_forward(weights: &[DenseMatrix], x: &DenseMatrix) -> Result<DenseMatrix> {
    check_weights(weights, x.n_cols())?;
    let mut hidden = x.matmul(&weights[0])?;
    relu_in_place(&mut hidden);
    hidden.matmul(&weights[1])
}

/// Graph convolution inference: `W_r^k relu(W_r^k (X T0)) T1` with the
/// renormalized adjacency `W_r` of `graph`.
pub fn igcn_forward(
    graph: &Graph,
    weights: &[DenseMatrix],
    x: &DenseMatrix,
    k_per_layer: usize,
) -> Result<DenseMatrix> {
    check_weights(weights, x.n_cols())?;
    if x.n_rows() != graph.n() {
        return Err(Error::DimensionMismatch {
            op: "igcn_forward",
            left_rows: graph.n(),
            left_cols: graph.n(),
            right_rows: x.n_rows(),
            right_cols: x.n_cols(),
        });
    }
    let w = renormalized_adjacency(graph);
    let mut hidden = propagate_hops(&w, x.matmul(&weights[0])?, k_per_layer)?;
    relu_in_place(&mut hidden);
    propagate_hops(&w, hidden.matmul(&weights[1])?, k_per_layer)
}

fn check_weights(weights: &[DenseMatrix], input_width: usize) -> Result<()> {
    if weights.len() != 2 {
        return Err(Error::InvalidConfig {
            what: format!("expected 2 weight matrices, got {}", weights.len()),
        });
    }
    if weights[0].n_rows() != input_width || weights[0].n_cols() != weights[1].n_rows() {
        return Err(Error::DimensionMismatch {
            op: "forward",
            left_rows: weights[0].n_rows(),
            left_cols: weights[0].n_cols(),
            right_rows: weights[1].n_rows(),
            right_cols: weights[1].n_cols(),
        });
    }
    Ok(())
}

/// Softmax cross-entropy averaged over the labeled rows. Returns the loss
/// and its gradient with respect to the logits: `(softmax - y) / |labeled|`
/// on labeled rows, zero elsewhere. Labeled rows of `y` are expected to be
/// one-hot.
#[allow(clippy::needless_range_loop)]
pub fn softmax_cross_entropy(
    logits: &DenseMatrix,
    y: &DenseMatrix,
    labeled: &[usize],
) -> Result<(f64, DenseMatrix)> {
    if logits.n_rows() != y.n_rows() || logits.n_cols() != y.n_cols() {
        return Err(Error::DimensionMismatch {
            op: "softmax_cross_entropy",
            left_rows: logits.n_rows(),
            left_cols: logits.n_cols(),
            right_rows: y.n_rows(),
            right_cols: y.n_cols(),
        });
    }
    if labeled.is_empty() {
        return Err(Error::NoLabeledVertices);
    }
    let inv = 1.0 / labeled.len() as f64;
    let mut dlogits = DenseMatrix::zeros(logits.n_rows(), logits.n_cols());
    let mut total = 0.0;
    for &i in labeled {
        if i >= logits.n_rows() {
            return Err(Error::IndexOutOfRange {
                op: "softmax_cross_entropy",
                index: i,
                bound: logits.n_rows(),
            });
        }
        let row = logits.row(i);
        if let Some(c) = row.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                op: "softmax_cross_entropy",
                row: i,
                col: c,
                value: row[c],
            });
        }
        let max = row.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        let mut exp_sum = 0.0;
        for &v in row {
            exp_sum += (v - max).exp();
        }
        let log_sum = max + exp_sum.ln();
        for c in 0..y.n_cols() {
            let p = (row[c] - max).exp() / exp_sum;
            let target = y.get(i, c);
            if target != 0.0 {
                total += target * (log_sum - row[c]);
            }
            dlogits.set(i, c, (p - target) * inv);
        }
    }
    Ok((total * inv, dlogits))
}

/// Train the requested model family. Graph convolutions need `graph`; the
/// perceptron ignores it. `y` is the one-hot label matrix over all vertices
/// and `labeled` lists the rows the loss may read.
pub fn train(
    kind: ModelKind,
    graph: Option<&Graph>,
    x: &DenseMatrix,
    y: &DenseMatrix,
    labeled: &[usize],
    cfg: &MlpConfig,
) -> Result<TrainedModel> {
    train_model(kind, graph, x, y, labeled, cfg)
}

/// Train the two-layer perceptron on vertex features.
pub fn train_mlp(
    x: &DenseMatrix,
    y: &DenseMatrix,
    labeled: &[usize],
    cfg: &MlpConfig,
) -> Result<TrainedModel> {
    train_model(ModelKind::Mlp, None, x, y, labeled, cfg)
}

/// Train the multi-hop graph convolution.
pub fn train_igcn(
    graph: &Graph,
    x: &DenseMatrix,
    y: &DenseMatrix,
    labeled: &[usize],
    cfg: &IgcnConfig,
) -> Result<TrainedModel> {
    train_model(
        ModelKind::Igcn {
            k_per_layer: cfg.k_per_layer,
        },
        Some(graph),
        x,
        y,
        labeled,
        &cfg.base,
    )
}

fn train_model(
    kind: ModelKind,
    graph: Option<&Graph>,
    x: &DenseMatrix,
    y: &DenseMatrix,
    labeled: &[usize],
    cfg: &MlpConfig,
) -> Result<TrainedModel> {
    cfg.validate()?;
    if y.n_rows() != x.n_rows() {
        return Err(Error::DimensionMismatch {
            op: "train",
            left_rows: x.n_rows(),
            left_cols: x.n_cols(),
            right_rows: y.n_rows(),
            right_cols: y.n_cols(),
        });
    }
    if labeled.is_empty() {
        return Err(Error::NoLabeledVertices);
    }
    for &i in labeled {
        if i >= x.n_rows() {
            return Err(Error::IndexOutOfRange {
                op: "train",
                index: i,
                bound: x.n_rows(),
            });
        }
    }

    let propagation = match kind {
        ModelKind::Mlp => None,
        ModelKind::Igcn { k_per_layer } => {
            let graph = graph.ok_or_else(|| Error::InvalidConfig {
                what: "graph convolution training needs the graph".to_string(),
            })?;
            if graph.n() != x.n_rows() {
                return Err(Error::DimensionMismatch {
                    op: "train",
                    left_rows: graph.n(),
                    left_cols: graph.n(),
                    right_rows: x.n_rows(),
                    right_cols: x.n_cols(),
                });
            }
            if k_per_layer == 0 {
                return Err(Error::InvalidConfig {
                    what: "graph convolution needs at least 1 hop per layer".to_string(),
                });
            }
            Some((renormalized_adjacency(graph), k_per_layer))
        }
    };
    let propagation_ref = propagation.as_ref().map(|(w, k)| (w, *k));

    // The perceptron's rows never mix, and the loss reads only labeled rows,
    // so it trains on the labeled slice; gradients are identical and each
    // step touches a handful of rows instead of the whole graph.
    let sliced;
    let (x_work, y_work, labeled_work): (&DenseMatrix, &DenseMatrix, Vec<usize>) = match kind {
        ModelKind::Mlp => {
            sliced = (x.select_rows(labeled), y.select_rows(labeled));
            (&sliced.0, &sliced.1, (0..labeled.len()).collect())
        }
        ModelKind::Igcn { .. } => (x, y, labeled.to_vec()),
    };
    let features = Features::from_auto(x_work);

    let mut weights = vec![
        glorot(x.n_cols(), cfg.hidden, cfg.seed, 0),
        glorot(cfg.hidden, y.n_cols(), cfg.seed, 1),
    ];
    let mut adam = Adam::new(&weights);
    let mut mask_stream = SplitMix64::new(derive_seed(cfg.seed, "dropout", 0));

    let initial_loss = loss_at_step(
        selection_loss(&features, &weights, propagation_ref, y_work, &labeled_work, cfg),
        0,
    )?;
    let mut loss_trace = vec![initial_loss];
    let mut best_step = 0;
    let mut best_loss = f64::INFINITY;
    let mut best_weights = weights.clone();

    for step in 1..=cfg.steps {
        let masks = if cfg.dropout > 0.0 {
            Some(StepMasks {
                input: sample_scale_mask(&mut mask_stream, features.mask_len(), cfg.dropout),
                hidden: sample_scale_mask(
                    &mut mask_stream,
                    features.n_rows() * cfg.hidden,
                    cfg.dropout,
                ),
            })
        } else {
            None
        };
        let (logits, cache) = forward_train(&features, &weights, propagation_ref, masks.as_ref())?;
        let (data_loss, dlogits) = match softmax_cross_entropy(&logits, y_work, &labeled_work) {
            Ok(pair) => pair,
            Err(Error::NonFinite { .. }) => return Err(Error::NonFiniteLoss { step }),
            Err(other) => return Err(other),
        };
        if !data_loss.is_finite() {
            return Err(Error::NonFiniteLoss { step });
        }
        let grads = backward(&weights, &cache, propagation_ref, &dlogits, cfg)?;
        adam.step(&mut weights, &grads, cfg.learning_rate);

        let candidate = loss_at_step(
            selection_loss(&features, &weights, propagation_ref, y_work, &labeled_work, cfg),
            step,
        )?;
        loss_trace.push(candidate);
        if candidate < best_loss {
            best_loss = candidate;
            best_step = step;
            best_weights = weights.clone();
        }
    }

    Ok(TrainedModel {
        kind,
        weights: best_weights,
        best_step,
        best_loss,
        loss_trace,
    })
}

/// Compare analytic gradients against central finite differences of the full
/// training loss (cross-entropy plus L2), dropout disabled, at the seeded
/// initialization. Returns the worst relative discrepancy over every weight
/// entry, with the denominator floored to keep noise on near-zero gradients
/// from registering as error.
pub fn gradient_check(
    kind: ModelKind,
    graph: Option<&Graph>,
    x: &DenseMatrix,
    y: &DenseMatrix,
    labeled: &[usize],
    cfg: &MlpConfig,
    epsilon: f64,
) -> Result<f64> {
    cfg.validate()?;
    let propagation = match kind {
        ModelKind::Mlp => None,
        ModelKind::Igcn { k_per_layer } => {
            let graph = graph.ok_or_else(|| Error::InvalidConfig {
                what: "graph convolution gradient check needs the graph".to_string(),
            })?;
            Some((renormalized_adjacency(graph), k_per_layer))
        }
    };
    let propagation_ref = propagation.as_ref().map(|(w, k)| (w, *k));
    let features = Features::from_auto(x);

    let mut weights = vec![
        glorot(x.n_cols(), cfg.hidden, cfg.seed, 0),
        glorot(cfg.hidden, y.n_cols(), cfg.seed, 1),
    ];

    let (logits, cache) = forward_train(&features, &weights, propagation_ref, None)?;
    let (_, dlogits) = softmax_cross_entropy(&logits, y, labeled)?;
    let analytic = backward(&weights, &cache, propagation_ref, &dlogits, cfg)?;

    let mut worst: f64 = 0.0;
    for layer in 0..weights.len() {
        for idx in 0..weights[layer].as_slice().len() {
            let original = weights[layer].as_slice()[idx];

            weights[layer].as_mut_slice()[idx] = original + epsilon;
            let up = selection_loss(&features, &weights, propagation_ref, y, labeled, cfg)?;
            weights[layer].as_mut_slice()[idx] = original - epsilon;
            let down = selection_loss(&features, &weights, propagation_ref, y, labeled, cfg)?;
            weights[layer].as_mut_slice()[idx] = original;

            let numeric = (up - down) / (2.0 * epsilon);
            let a = analytic[layer].as_slice()[idx];
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-6);
            worst = worst.max(rel);
        }
    }
    Ok(worst)
}

/// Dropout-free training loss of the given weights: data term plus L2.
fn selection_loss(
    features: &Features,
    weights: &[DenseMatrix],
    propagation: Option<(&SparseMatrix, usize)>,
    y: &DenseMatrix,
    labeled: &[usize],
    cfg: &MlpConfig,
) -> Result<f64> {
    let logits = forward_eval(features, weights, propagation)?;
    let (data_loss, _) = softmax_cross_entropy(&logits, y, labeled)?;
    Ok(data_loss + l2_penalty(weights, cfg))
}

/// Turns a non-finite selection loss, or the non-finite-logit error underneath
/// it, into the divergence error for the step that produced the weights.
fn loss_at_step(loss: Result<f64>, step: usize) -> Result<f64> {
    match loss {
        Ok(value) if value.is_finite() => Ok(value),
        Ok(_) | Err(Error::NonFinite { .. }) => Err(Error::NonFiniteLoss { step }),
        Err(other) => Err(other),
    }
}

fn l2_penalty(weights: &[DenseMatrix], cfg: &MlpConfig) -> f64 {
    if cfg.l2 == 0.0 {
        return 0.0;
    }
    let square_sum = |m: &DenseMatrix| m.as_slice().iter().map(|v| v * v).sum::<f64>();
    let mut penalty = square_sum(&weights[0]);
    if cfg.l2_scope == L2Scope::AllLayers {
        penalty += square_sum(&weights[1]);
    }
    cfg.l2 * 0.5 * penalty
}

/// Feature storage for training. Bag-of-words style inputs are mostly zeros,
/// so large sparse feature blocks keep a CSR mirror and all products skip the
/// zeros; dropout then only draws masks for stored entries, which changes
/// nothing semantically since dropping a zero is a no-op.
enum Features<'a> {
    Dense(&'a DenseMatrix),
    Sparse(SparseMatrix),
}

impl<'a> Features<'a> {
    fn from_auto(x: &'a DenseMatrix) -> Features<'a> {
        let total = x.n_rows() * x.n_cols();
        if x.n_rows() >= 128 && total > 0 {
            let nnz = x.as_slice().iter().filter(|v| **v != 0.0).count();
            if (nnz as f64) / (total as f64) <= 0.25 {
                return Features::Sparse(SparseMatrix::from_dense(x));
            }
        }
        Features::Dense(x)
    }

    fn n_rows(&self) -> usize {
        match self {
            Features::Dense(x) => x.n_rows(),
            Features::Sparse(x) => x.n_rows(),
        }
    }

    /// Entries a dropout mask must cover: every slot for dense storage,
    /// stored entries for sparse.
    fn mask_len(&self) -> usize {
        match self {
            Features::Dense(x) => x.n_rows() * x.n_cols(),
            Features::Sparse(x) => x.nnz(),
        }
    }

    /// Clean product `X * theta`.
    fn matmul(&self, theta: &DenseMatrix) -> Result<DenseMatrix> {
        match self {
            Features::Dense(x) => x.matmul(theta),
            Features::Sparse(x) => spmm(x, theta),
        }
    }

    /// Apply a dropout mask, yielding the owned layer input.
    fn masked(&self, mask: &[f64]) -> MaskedInput {
        match self {
            Features::Dense(x) => {
                let mut data = x.as_slice().to_vec();
                for (v, &m) in data.iter_mut().zip(mask) {
                    *v *= m;
                }
                MaskedInput::Dense(
                    DenseMatrix::from_vec(x.n_rows(), x.n_cols(), data)
                        .expect("masking preserves finiteness"),
                )
            }
            Features::Sparse(x) => MaskedInput::Sparse(x.scale_stored(mask)),
        }
    }

    /// The untouched input as an owned layer input, for dropout-free passes
    /// that still need a backward cache.
    fn clean(&self) -> MaskedInput {
        match self {
            Features::Dense(x) => MaskedInput::Dense((*x).clone()),
            Features::Sparse(x) => MaskedInput::Sparse(x.clone()),
        }
    }
}

/// The first layer's actual input (features after dropout), kept for the
/// backward pass.
enum MaskedInput {
    Dense(DenseMatrix),
    Sparse(SparseMatrix),
}

impl MaskedInput {
    fn matmul(&self, theta: &DenseMatrix) -> Result<DenseMatrix> {
        match self {
            MaskedInput::Dense(x) => x.matmul(theta),
            MaskedInput::Sparse(x) => spmm(x, theta),
        }
    }

    /// `input^T * d`, the first-layer weight gradient.
    fn transpose_matmul(&self, d: &DenseMatrix) -> Result<DenseMatrix> {
        match self {
            MaskedInput::Dense(x) => x.transpose_matmul(d),
            MaskedInput::Sparse(x) => spmm_transpose(x, d),
        }
    }
}

struct StepMasks {
    input: Vec<f64>,
    hidden: Vec<f64>,
}

/// Inverted dropout mask: each slot is 0 with probability `rate`, otherwise
/// `1 / (1 - rate)`, so masked activations keep their expectation.
fn sample_scale_mask(stream: &mut SplitMix64, len: usize, rate: f64) -> Vec<f64> {
    let keep_scale = 1.0 / (1.0 - rate);
    (0..len)
        .map(|_| if stream.next_f64() < rate { 0.0 } else { keep_scale })
        .collect()
}

struct ForwardCache {
    input: MaskedInput,
    pre_activation: DenseMatrix,
    hidden_input: DenseMatrix,
    hidden_mask: Option<Vec<f64>>,
}

fn propagate_hops(w: &SparseMatrix, mut m: DenseMatrix, hops: usize) -> Result<DenseMatrix> {
    for _ in 0..hops {
        m = spmm(w, &m)?;
    }
    Ok(m)
}

fn relu_in_place(m: &mut DenseMatrix) {
    for v in m.as_mut_slice() {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
}

/// Training-mode forward pass, returning logits plus everything backward
/// needs. `masks` of `None` means a dropout-free pass.
fn forward_train(
    features: &Features,
    weights: &[DenseMatrix],
    propagation: Option<(&SparseMatrix, usize)>,
    masks: Option<&StepMasks>,
) -> Result<(DenseMatrix, ForwardCache)> {
    let input = match masks {
        Some(m) => features.masked(&m.input),
        None => features.clean(),
    };
    let projected = input.matmul(&weights[0])?;
    let pre_activation = match propagation {
        Some((w, k)) => propagate_hops(w, projected, k)?,
        None => projected,
    };
    let mut hidden = pre_activation.clone();
    relu_in_place(&mut hidden);
    let hidden_mask = masks.map(|m| m.hidden.clone());
    if let Some(mask) = &hidden_mask {
        for (v, &m) in hidden.as_mut_slice().iter_mut().zip(mask) {
            *v *= m;
        }
    }
    let second = hidden.matmul(&weights[1])?;
    let logits = match propagation {
        Some((w, k)) => propagate_hops(w, second, k)?,
        None => second,
    };
    Ok((
        logits,
        ForwardCache {
            input,
            pre_activation,
            hidden_input: hidden,
            hidden_mask,
        },
    ))
}

/// Inference-mode forward pass: no dropout, no cache, and no copy of the
/// feature block.
fn forward_eval(
    features: &Features,
    weights: &[DenseMatrix],
    propagation: Option<(&SparseMatrix, usize)>,
) -> Result<DenseMatrix> {
    let projected = features.matmul(&weights[0])?;
    let mut hidden = match propagation {
        Some((w, k)) => propagate_hops(w, projected, k)?,
        None => projected,
    };
    relu_in_place(&mut hidden);
    let second = hidden.matmul(&weights[1])?;
    match propagation {
        Some((w, k)) => propagate_hops(w, second, k),
        None => Ok(second),
    }
}

/// Backpropagate `dlogits` through the cached forward pass, including the L2
/// term. The propagation operator is symmetric, so its adjoint is itself.
fn backward(
    weights: &[DenseMatrix],
    cache: &ForwardCache,
    propagation: Option<(&SparseMatrix, usize)>,
    dlogits: &DenseMatrix,
    cfg: &MlpConfig,
) -> Result<Vec<DenseMatrix>> {
    let d_second = match propagation {
        Some((w, k)) => propagate_hops(w, dlogits.clone(), k)?,
        None => dlogits.clone(),
    };
    let mut d_theta1 = cache.hidden_input.transpose_matmul(&d_second)?;
    let mut d_hidden = d_second.matmul_transpose_right(&weights[1])?;
    if let Some(mask) = &cache.hidden_mask {
        for (v, &m) in d_hidden.as_mut_slice().iter_mut().zip(mask) {
            *v *= m;
        }
    }
    // ReLU gate: strictly positive pre-activations pass gradient.
    for (v, &pre) in d_hidden
        .as_mut_slice()
        .iter_mut()
        .zip(cache.pre_activation.as_slice())
    {
        if pre <= 0.0 {
            *v = 0.0;
        }
    }
    let d_projected = match propagation {
        Some((w, k)) => propagate_hops(w, d_hidden, k)?,
        None => d_hidden,
    };
    let mut d_theta0 = cache.input.transpose_matmul(&d_projected)?;

    if cfg.l2 > 0.0 {
        d_theta0.axpy(cfg.l2, &weights[0])?;
        if cfg.l2_scope == L2Scope::AllLayers {
            d_theta1.axpy(cfg.l2, &weights[1])?;
        }
    }
    Ok(vec![d_theta0, d_theta1])
}

/// Glorot uniform initialization: entries drawn from
/// `U(-sqrt(6/(fan_in+fan_out)), +sqrt(6/(fan_in+fan_out)))`.
fn glorot(fan_in: usize, fan_out: usize, seed: u64, layer: u64) -> DenseMatrix {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    let mut rng = derive_rng(seed, "glorot", layer);
    DenseMatrix::from_fn(fan_in, fan_out, |_, _| rng.random_range(-limit..limit))
}

/// Adam with the standard bias correction.
struct Adam {
    m: Vec<DenseMatrix>,
    v: Vec<DenseMatrix>,
    t: i32,
}

const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPSILON: f64 = 1e-8;

impl Adam {
    fn new(weights: &[DenseMatrix]) -> Adam {
        Adam {
            m: weights
                .iter()
                .map(|w| DenseMatrix::zeros(w.n_rows(), w.n_cols()))
                .collect(),
            v: weights
                .iter()
                .map(|w| DenseMatrix::zeros(w.n_rows(), w.n_cols()))
                .collect(),
            t: 0,
        }
    }

    fn step(&mut self, weights: &mut [DenseMatrix], grads: &[DenseMatrix], lr: f64) {
        self.t += 1;
        let correction1 = 1.0 - ADAM_BETA1.powi(self.t);
        let correction2 = 1.0 - ADAM_BETA2.powi(self.t);
        for layer in 0..weights.len() {
            let m = self.m[layer].as_mut_slice();
            let v = self.v[layer].as_mut_slice();
            let w = weights[layer].as_mut_slice();
            let g = grads[layer].as_slice();
            for i in 0..w.len() {
                m[i] = ADAM_BETA1 * m[i] + (1.0 - ADAM_BETA1) * g[i];
                v[i] = ADAM_BETA2 * v[i] + (1.0 - ADAM_BETA2) * g[i] * g[i];
                let m_hat = m[i] / correction1;
                let v_hat = v[i] / correction2;
                w[i] -= lr * m_hat / (v_hat.sqrt() + ADAM_EPSILON);
            }
        }
    }
}
