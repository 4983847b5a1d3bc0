//! Compact graph convolutional classifier.
//!
//! `H_{l+1} = dropout(ReLU(Â H_l W_l + b_l))`, mean-pool over nodes, one
//! linear layer to class logits, softmax cross-entropy. Gradients are
//! derived by hand and checked against central finite differences.
//! Parameters live in one flat buffer so the optimizer, checkpoints and
//! the gradient checker all share a single layout.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::{matmul_into, DenseMatrix};
use crate::{rng, Clock};

const BYTES_PER_SCALAR: usize = core::mem::size_of::<f64>();

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GcnConfig {
    pub layers: usize,
    pub hidden: usize,
    pub dropout: f64,
    pub learning_rate: f64,
    pub epochs: usize,
    pub weight_decay: f64,
    pub seed: u64,
}

impl Default for GcnConfig {
    fn default() -> Self {
        Self { layers: 2, hidden: 32, dropout: 0.6, learning_rate: 5e-3, epochs: 200, weight_decay: 3e-3, seed: 0 }
    }
}

impl GcnConfig {
    pub fn validate(&self) -> Result<()> {
        if self.layers == 0 {
            return Err(invalid!("a GCN needs at least one layer"));
        }
        if self.hidden == 0 {
            return Err(invalid!("hidden width must be positive"));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(invalid!("dropout must lie in [0, 1), got {}", self.dropout));
        }
        if !(self.learning_rate >= 0.0) || !(self.weight_decay >= 0.0) {
            return Err(invalid!("learning rate and weight decay must be nonnegative"));
        }
        Ok(())
    }
}

/// `D^{-1/2} (A + I) D^{-1/2}` with `d_i = Σ_j |(A + I)_ij|`.
pub fn normalize_adjacency(a: &DenseMatrix) -> Result<DenseMatrix> {
    if !a.is_square() {
        return Err(Error::ShapeMismatch(format!("adjacency is {}x{}", a.rows(), a.cols())));
    }
    if !a.is_symmetric(1e-9) {
        return Err(invalid!("adjacency is not symmetric within 1e-9"));
    }
    let n = a.rows();
    let mut out = a.clone();
    for i in 0..n {
        out[(i, i)] += 1.0;
    }
    let inv_sqrt: Vec<f64> = (0..n)
        .map(|i| {
            let d: f64 = out.row(i).iter().map(|v| v.abs()).sum();
            if d > 0.0 {
                1.0 / d.sqrt()
            } else {
                0.0
            }
        })
        .collect();
    for i in 0..n {
        for j in 0..n {
            out[(i, j)] *= inv_sqrt[i] * inv_sqrt[j];
        }
    }
    Ok(out)
}

/// One graph ready for the network: normalized adjacency, node features and
/// the cached first propagation `Â X`.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphSample {
    pub adjacency: DenseMatrix,
    pub features: DenseMatrix,
    propagated: DenseMatrix,
}

impl GraphSample {
    /// Normalizes `adjacency` and pairs it with `features` (one row per node).
    pub fn new(adjacency: &DenseMatrix, features: DenseMatrix) -> Result<Self> {
        let norm = normalize_adjacency(adjacency)?;
        Self::from_normalized(norm, features)
    }

    pub fn from_normalized(adjacency: DenseMatrix, features: DenseMatrix) -> Result<Self> {
        if features.rows() != adjacency.rows() {
            return Err(Error::ShapeMismatch(format!(
                "{} feature rows for {} nodes",
                features.rows(),
                adjacency.rows()
            )));
        }
        let propagated = adjacency.matmul(&features)?;
        Ok(Self { adjacency, features, propagated })
    }

    pub fn node_count(&self) -> usize {
        self.adjacency.rows()
    }

    pub fn feature_width(&self) -> usize {
        self.features.cols()
    }
}

/// Where a flat parameter index lives.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamLocation {
    pub tensor: String,
    pub row: usize,
    pub col: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GcnModel {
    pub config: GcnConfig,
    pub input_dim: usize,
    pub classes: usize,
    params: Vec<f64>,
}

struct Cache {
    /// Pre-activations per layer.
    pre: Vec<DenseMatrix>,
    /// Inverted-dropout multipliers per layer (empty when not training).
    masks: Vec<Vec<f64>>,
    /// Layer outputs after ReLU and dropout.
    outputs: Vec<DenseMatrix>,
    pooled: Vec<f64>,
    probs: Vec<f64>,
}

impl GcnModel {
    /// Glorot-uniform weights from the `"init"` stream, zero biases.
    pub fn new(input_dim: usize, classes: usize, config: GcnConfig) -> Result<Self> {
        config.validate()?;
        if input_dim == 0 || classes < 2 {
            return Err(invalid!("GCN needs input width >= 1 and >= 2 classes"));
        }
        let mut model = Self { config, input_dim, classes, params: Vec::new() };
        model.params = vec![0.0; model.parameter_count()];
        let mut rng = rng::stream(config.seed, "init", 0);
        for l in 0..=config.layers {
            let (rows, cols) = model.weight_shape(l);
            let bound = (6.0 / (rows + cols) as f64).sqrt();
            let off = model.weight_offset(l);
            for v in &mut model.params[off..off + rows * cols] {
                *v = rng.random_range(-bound..bound);
            }
        }
        Ok(model)
    }

    pub fn from_parts(config: GcnConfig, input_dim: usize, classes: usize, params: Vec<f64>) -> Result<Self> {
        config.validate()?;
        let model = Self { config, input_dim, classes, params: Vec::new() };
        if params.len() != model.parameter_count() {
            return Err(Error::ShapeMismatch(format!(
                "{} parameters supplied, layout needs {}",
                params.len(),
                model.parameter_count()
            )));
        }
        Ok(Self { params, ..model })
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    /// (rows, cols) of weight `l`; `l == layers` is the output projection.
    pub fn weight_shape(&self, l: usize) -> (usize, usize) {
        let h = self.config.hidden;
        if l == self.config.layers {
            (h, self.classes)
        } else if l == 0 {
            (self.input_dim, h)
        } else {
            (h, h)
        }
    }

    fn weight_offset(&self, l: usize) -> usize {
        (0..l).map(|i| {
            let (r, c) = self.weight_shape(i);
            r * c + c
        }).sum()
    }

    fn bias_offset(&self, l: usize) -> usize {
        let (r, c) = self.weight_shape(l);
        self.weight_offset(l) + r * c
    }

    /// Exact number of trainable scalars.
    pub fn parameter_count(&self) -> usize {
        (0..=self.config.layers)
            .map(|l| {
                let (r, c) = self.weight_shape(l);
                r * c + c
            })
            .sum()
    }

    pub fn locate(&self, index: usize) -> ParamLocation {
        for l in 0..=self.config.layers {
            let (r, c) = self.weight_shape(l);
            let w = self.weight_offset(l);
            let name = if l == self.config.layers { String::from("output") } else { format!("layer{l}") };
            if index < w + r * c {
                let k = index - w;
                return ParamLocation { tensor: format!("{name}.weight"), row: k / c, col: k % c };
            }
            if index < w + r * c + c {
                return ParamLocation { tensor: format!("{name}.bias"), row: 0, col: index - w - r * c };
            }
        }
        ParamLocation { tensor: String::from("out_of_range"), row: 0, col: index }
    }

    fn weight(&self, l: usize) -> DenseMatrix {
        let (r, c) = self.weight_shape(l);
        let off = self.weight_offset(l);
        DenseMatrix::from_vec(r, c, self.params[off..off + r * c].to_vec()).expect("layout")
    }

    fn bias(&self, l: usize) -> &[f64] {
        let (_, c) = self.weight_shape(l);
        let off = self.bias_offset(l);
        &self.params[off..off + c]
    }

    /// Bookkept f64 entries live during one training step on a graph with
    /// `nodes` nodes: adjacency, features, cached propagation, per-layer
    /// propagated/pre-activation/output/dropout buffers, and pooled/logit
    /// vectors.
    pub fn activation_entries(&self, nodes: usize, training: bool) -> usize {
        let h = self.config.hidden;
        let mut total = nodes * nodes + 2 * nodes * self.input_dim;
        for l in 0..self.config.layers {
            let width_in = if l == 0 { self.input_dim } else { h };
            total += nodes * width_in + 2 * nodes * h;
            if training {
                total += nodes * h;
            }
        }
        total + h + 2 * self.classes
    }

    /// Parameters, gradients and both Adam moments, plus one sample's
    /// activations, in bytes.
    pub fn bookkept_bytes(&self, nodes: usize, training: bool) -> usize {
        let param_copies = if training { 4 } else { 1 };
        (param_copies * self.parameter_count() + self.activation_entries(nodes, training)) * BYTES_PER_SCALAR
    }

    fn check_sample(&self, sample: &GraphSample) -> Result<()> {
        if sample.feature_width() != self.input_dim {
            return Err(Error::ShapeMismatch(format!(
                "sample has {} features, model expects {}",
                sample.feature_width(),
                self.input_dim
            )));
        }
        Ok(())
    }

    fn forward_cached<R: Rng>(&self, sample: &GraphSample, dropout_rng: Option<&mut R>) -> Cache {
        let n = sample.node_count();
        let h = self.config.hidden;
        let layers = self.config.layers;
        let keep = 1.0 - self.config.dropout;
        let mut rng = dropout_rng;
        let mut cache = Cache {
            pre: Vec::with_capacity(layers),
            masks: Vec::with_capacity(layers),
            outputs: Vec::with_capacity(layers),
            pooled: vec![0.0; h],
            probs: Vec::new(),
        };
        for l in 0..layers {
            let mut z = DenseMatrix::zeros(n, h);
            if l == 0 {
                matmul_into(&sample.propagated, &self.weight(l), &mut z);
            } else {
                // Â (H W): H is sparse after ReLU and dropout
                let mut hw = DenseMatrix::zeros(n, h);
                matmul_into(&cache.outputs[l - 1], &self.weight(l), &mut hw);
                matmul_into(&sample.adjacency, &hw, &mut z);
            }
            let b = self.bias(l);
            for i in 0..n {
                z.row_mut(i).iter_mut().zip(b).for_each(|(v, bb)| *v += bb);
            }
            let mut out = z.clone();
            out.data_mut().iter_mut().for_each(|v| *v = v.max(0.0));
            let mask = match rng.as_deref_mut() {
                Some(r) if self.config.dropout > 0.0 => {
                    let m: Vec<f64> = (0..n * h)
                        .map(|_| if r.random::<f64>() < keep { 1.0 / keep } else { 0.0 })
                        .collect();
                    out.data_mut().iter_mut().zip(&m).for_each(|(v, s)| *v *= s);
                    m
                }
                _ => Vec::new(),
            };
            cache.pre.push(z);
            cache.masks.push(mask);
            cache.outputs.push(out);
        }
        let last = &cache.outputs[layers - 1];
        for i in 0..n {
            cache.pooled.iter_mut().zip(last.row(i)).for_each(|(p, v)| *p += v);
        }
        cache.pooled.iter_mut().for_each(|p| *p /= n as f64);

        let w_out = self.weight(layers);
        let b_out = self.bias(layers);
        let logits: Vec<f64> = (0..self.classes)
            .map(|c| b_out[c] + cache.pooled.iter().enumerate().map(|(k, p)| p * w_out[(k, c)]).sum::<f64>())
            .collect();
        cache.probs = softmax(&logits);
        cache
    }

    /// Class probabilities for one graph. With `training`, inverted dropout
    /// is drawn from `dropout_rng`.
    pub fn forward<R: Rng>(&self, sample: &GraphSample, training: Option<&mut R>) -> Result<Vec<f64>> {
        self.check_sample(sample)?;
        Ok(self.forward_cached(sample, training).probs)
    }

    /// Inference-mode probabilities.
    pub fn predict_proba(&self, sample: &GraphSample) -> Result<Vec<f64>> {
        self.forward::<rng::StreamRng>(sample, None)
    }

    pub fn predict(&self, sample: &GraphSample) -> Result<usize> {
        Ok(argmax(&self.predict_proba(sample)?))
    }

    /// Mean cross-entropy and its gradient over a batch.
    pub fn loss_and_gradient<R: Rng>(
        &self,
        samples: &[GraphSample],
        labels: &[usize],
        mut dropout_rng: Option<&mut R>,
    ) -> Result<(f64, Vec<f64>)> {
        if samples.len() != labels.len() || samples.is_empty() {
            return Err(Error::ShapeMismatch(format!("{} samples, {} labels", samples.len(), labels.len())));
        }
        let mut grad = vec![0.0; self.params.len()];
        let mut loss = 0.0;
        let scale = 1.0 / samples.len() as f64;
        let transposed: Vec<DenseMatrix> = (0..self.config.layers).map(|l| self.weight(l).transpose()).collect();
        for (sample, &y) in samples.iter().zip(labels) {
            self.check_sample(sample)?;
            if y >= self.classes {
                return Err(invalid!("label {y} out of range for {} classes", self.classes));
            }
            let cache = self.forward_cached(sample, dropout_rng.as_deref_mut());
            loss -= cache.probs[y].max(f64::MIN_POSITIVE).ln() * scale;
            self.backward(sample, &cache, &transposed, y, scale, &mut grad);
        }
        Ok((loss, grad))
    }

    /// `transposed[l]` is `W_lᵀ`.
    fn backward(&self, sample: &GraphSample, cache: &Cache, transposed: &[DenseMatrix], y: usize, scale: f64, grad: &mut [f64]) {
        let n = sample.node_count();
        let h = self.config.hidden;
        let layers = self.config.layers;
        let c = self.classes;

        let dlogits: Vec<f64> = (0..c).map(|k| (cache.probs[k] - if k == y { 1.0 } else { 0.0 }) * scale).collect();
        let w_off = self.weight_offset(layers);
        let b_off = self.bias_offset(layers);
        let mut dpooled = vec![0.0; h];
        for k in 0..h {
            for j in 0..c {
                grad[w_off + k * c + j] += cache.pooled[k] * dlogits[j];
                dpooled[k] += self.params[w_off + k * c + j] * dlogits[j];
            }
        }
        for j in 0..c {
            grad[b_off + j] += dlogits[j];
        }

        // d(mean pool)/dH: every row receives dpooled / n
        let mut dout = DenseMatrix::zeros(n, h);
        for i in 0..n {
            dout.row_mut(i).iter_mut().zip(&dpooled).for_each(|(d, g)| *d = g / n as f64);
        }
        for l in (0..layers).rev() {
            let mut dz = dout;
            if !cache.masks[l].is_empty() {
                dz.data_mut().iter_mut().zip(&cache.masks[l]).for_each(|(d, m)| *d *= m);
            }
            dz.data_mut().iter_mut().zip(cache.pre[l].data()).for_each(|(d, &z)| {
                if z <= 0.0 {
                    *d = 0.0;
                }
            });
            let (rows, cols) = self.weight_shape(l);
            let w_off = self.weight_offset(l);
            let b_off = self.bias_offset(l);
            // dW = (Â H)ᵀ dZ = Hᵀ (Â dZ) with Â symmetric
            let (input, upstream) = if l == 0 {
                (&sample.propagated, dz.clone())
            } else {
                let mut g = DenseMatrix::zeros(n, cols);
                matmul_into(&sample.adjacency, &dz, &mut g);
                (&cache.outputs[l - 1], g)
            };
            for i in 0..n {
                let g_row = upstream.row(i);
                for (r, &x) in input.row(i).iter().enumerate() {
                    if x == 0.0 {
                        continue;
                    }
                    let g = &mut grad[w_off + r * cols..w_off + (r + 1) * cols];
                    g.iter_mut().zip(g_row).for_each(|(gv, d)| *gv += x * d);
                }
                grad[b_off..b_off + cols].iter_mut().zip(dz.row(i)).for_each(|(gv, d)| *gv += d);
            }
            if l == 0 {
                break;
            }
            // dP = dZ Wᵀ, then dH = Âᵀ dP with Â symmetric
            let mut dprop = DenseMatrix::zeros(n, rows);
            matmul_into(&dz, &transposed[l], &mut dprop);
            let mut dh = DenseMatrix::zeros(n, rows);
            matmul_into(&sample.adjacency, &dprop, &mut dh);
            dout = dh;
        }
    }

    pub fn accuracy(&self, samples: &[GraphSample], labels: &[usize]) -> Result<f64> {
        if samples.is_empty() {
            return Ok(0.0);
        }
        let mut correct = 0;
        for (s, &y) in samples.iter().zip(labels) {
            if self.predict(s)? == y {
                correct += 1;
            }
        }
        Ok(correct as f64 / samples.len() as f64)
    }

    /// Mean cross-entropy in inference mode.
    pub fn loss(&self, samples: &[GraphSample], labels: &[usize]) -> Result<f64> {
        let mut total = 0.0;
        for (s, &y) in samples.iter().zip(labels) {
            total -= self.predict_proba(s)?[y].max(f64::MIN_POSITIVE).ln();
        }
        Ok(total / samples.len().max(1) as f64)
    }
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|v| (v - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.iter().map(|e| e / sum).collect()
}

pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

/// Adam with decoupled weight decay.
#[derive(Debug, Clone)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    pub fn new(len: usize, lr: f64, weight_decay: f64) -> Self {
        Self { lr, beta1: 0.9, beta2: 0.999, eps: 1e-8, weight_decay, m: vec![0.0; len], v: vec![0.0; len], t: 0 }
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t);
        let bc2 = 1.0 - self.beta2.powi(self.t);
        for (((p, g), m), v) in params.iter_mut().zip(grad).zip(&mut self.m).zip(&mut self.v) {
            *m = self.beta1 * *m + (1.0 - self.beta1) * g;
            *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
            let update = (*m / bc1) / ((*v / bc2).sqrt() + self.eps) + self.weight_decay * *p;
            *p -= self.lr * update;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainHistory {
    pub losses: Vec<f64>,
    pub train_accuracy: Vec<f64>,
    pub validation_accuracy: Vec<f64>,
    pub epoch_seconds: Vec<f64>,
    /// Epoch (0-based) whose weights were kept.
    pub best_epoch: usize,
    pub peak_bytes: usize,
}

impl TrainHistory {
    pub fn mean_epoch_seconds(&self) -> f64 {
        if self.epoch_seconds.is_empty() {
            0.0
        } else {
            self.epoch_seconds.iter().sum::<f64>() / self.epoch_seconds.len() as f64
        }
    }
}

/// Full-batch training. With a validation set, the weights of the epoch
/// with the best validation accuracy (ties: lower validation loss, then
/// earlier epoch) are restored at the end.
pub fn train(
    samples: &[GraphSample],
    labels: &[usize],
    classes: usize,
    cfg: &GcnConfig,
    validation: Option<(&[GraphSample], &[usize])>,
    clock: &dyn Clock,
) -> Result<(GcnModel, TrainHistory)> {
    let first = samples.first().ok_or_else(|| invalid!("training set is empty"))?;
    let mut model = GcnModel::new(first.feature_width(), classes, *cfg)?;
    let history = train_model(&mut model, samples, labels, validation, clock)?;
    Ok((model, history))
}

pub fn train_model(
    model: &mut GcnModel,
    samples: &[GraphSample],
    labels: &[usize],
    validation: Option<(&[GraphSample], &[usize])>,
    clock: &dyn Clock,
) -> Result<TrainHistory> {
    if samples.is_empty() {
        return Err(invalid!("training set is empty"));
    }
    let cfg = model.config;
    let mut adam = Adam::new(model.params.len(), cfg.learning_rate, cfg.weight_decay);
    let max_nodes = samples.iter().map(GraphSample::node_count).max().unwrap_or(0);
    let mut history = TrainHistory { peak_bytes: model.bookkept_bytes(max_nodes, true), ..TrainHistory::default() };
    let validation = validation.filter(|(v, _)| !v.is_empty());
    let mut best: Option<(f64, f64, Vec<f64>)> = None;

    for epoch in 0..cfg.epochs {
        let start = clock.now_seconds();
        let mut dropout = rng::stream(cfg.seed, "dropout", epoch as u64);
        let (loss, grad) = model.loss_and_gradient(samples, labels, Some(&mut dropout))?;
        if !loss.is_finite() {
            return Err(Error::NumericalFailure(format!("non-finite training loss at epoch {epoch}")));
        }
        adam.step(&mut model.params, &grad);
        history.epoch_seconds.push(clock.now_seconds() - start);
        history.losses.push(loss);

        if let Some((vs, vl)) = validation {
            let acc = model.accuracy(vs, vl)?;
            let vloss = model.loss(vs, vl)?;
            history.validation_accuracy.push(acc);
            let better = best.as_ref().is_none_or(|(ba, bl, _)| acc > *ba || (acc == *ba && vloss < *bl));
            if better {
                best = Some((acc, vloss, model.params.clone()));
                history.best_epoch = epoch;
            }
        } else {
            history.best_epoch = epoch;
        }
    }
    if let Some((_, _, params)) = best {
        model.params = params;
    }
    history.train_accuracy.push(model.accuracy(samples, labels)?);
    Ok(history)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradCheckReport {
    pub max_relative_error: f64,
    pub worst_index: usize,
    pub worst_location: ParamLocation,
    pub analytic: f64,
    pub numeric: f64,
}

impl GradCheckReport {
    pub fn passed(&self, tolerance: f64) -> bool {
        self.max_relative_error < tolerance
    }
}

/// Central differences (h = 1e-5) on every parameter, dropout off.
/// Relative error is `|a − n| / max(|a|, |n|, 1e-6)`.
pub fn gradient_check(model: &GcnModel, samples: &[GraphSample], labels: &[usize]) -> Result<GradCheckReport> {
    const H: f64 = 1e-5;
    let (_, analytic) = model.loss_and_gradient::<rng::StreamRng>(samples, labels, None)?;
    let mut probe = model.clone();
    let mut report = GradCheckReport {
        max_relative_error: 0.0,
        worst_index: 0,
        worst_location: model.locate(0),
        analytic: analytic[0],
        numeric: analytic[0],
    };
    for i in 0..analytic.len() {
        let orig = probe.params[i];
        probe.params[i] = orig + H;
        let (plus, _) = probe.loss_and_gradient::<rng::StreamRng>(samples, labels, None)?;
        probe.params[i] = orig - H;
        let (minus, _) = probe.loss_and_gradient::<rng::StreamRng>(samples, labels, None)?;
        probe.params[i] = orig;
        let numeric = (plus - minus) / (2.0 * H);
        let rel = (analytic[i] - numeric).abs() / analytic[i].abs().max(numeric.abs()).max(1e-6);
        if rel > report.max_relative_error {
            report = GradCheckReport {
                max_relative_error: rel,
                worst_index: i,
                worst_location: model.locate(i),
                analytic: analytic[i],
                numeric,
            };
        }
    }
    Ok(report)
}
