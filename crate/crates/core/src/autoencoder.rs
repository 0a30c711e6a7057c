//! The correlated autoencoder unit model.
//!
//! Each node of a sub-network is fed its adjacency row. The encoder maps it
//! through sigmoid layers to a code `z`, the decoder mirrors the encoder back
//! to a reconstruction. Training minimises
//!
//! ```text
//! sum_i |(x_i - x̂_i) ⊙ b_i|^2
//!   + alpha * sum_{i != j} s_ij |z_i - z_j|^2
//!   + beta  * sum_layers (|W|_F^2 + |Ŵ|_F^2)
//! ```
//!
//! where `b_i` is `gamma_recon` on the nonzero entries of `x_i` and 1
//! elsewhere, and `s_ij` is +1 for linked pairs and -1 otherwise. The double
//! sum runs over ordered pairs.
//!
//! Parameters live in one flat vector, the chromosome. Layers are laid out
//! encoder first (input to code), then decoder (code to output); within a
//! layer the weight matrix comes first in row-major `out x in` order,
//! followed by the bias.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::graph::SubNetwork;
use crate::math::{sigmoid, squared_distance};
use crate::{Error, Result};

/// Layer widths `[k, h_1, ..., h_o, d]`: input size, hidden encoder widths,
/// code size. The decoder uses the same widths in reverse.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayerSpec {
    dims: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct LayerShape {
    input: usize,
    output: usize,
    offset: usize,
}

impl LayerShape {
    fn weight_len(&self) -> usize {
        self.input * self.output
    }

    fn bias_offset(&self) -> usize {
        self.offset + self.weight_len()
    }

    fn end(&self) -> usize {
        self.bias_offset() + self.output
    }
}

impl LayerSpec {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if dims.len() < 2 {
            return Err(Error::invalid("layer spec needs at least input and code sizes"));
        }
        if dims.contains(&0) {
            return Err(Error::invalid(format!("layer sizes must be positive, got {dims:?}")));
        }
        Ok(LayerSpec { dims })
    }

    /// `[k, hidden..., d]` from its parts.
    pub fn with_hidden(k: usize, hidden: &[usize], d: usize) -> Result<Self> {
        let mut dims = Vec::with_capacity(hidden.len() + 2);
        dims.push(k);
        dims.extend_from_slice(hidden);
        dims.push(d);
        LayerSpec::new(dims)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn input_dim(&self) -> usize {
        self.dims[0]
    }

    pub fn code_dim(&self) -> usize {
        self.dims[self.dims.len() - 1]
    }

    /// Number of hidden encoder layers (`o`).
    pub fn hidden_layers(&self) -> usize {
        self.dims.len() - 2
    }

    fn layers(&self) -> Vec<LayerShape> {
        let encoder = self.dims.windows(2).map(|w| (w[0], w[1]));
        let decoder = self.dims.windows(2).rev().map(|w| (w[1], w[0]));
        let mut offset = 0;
        encoder
            .chain(decoder)
            .map(|(input, output)| {
                let shape = LayerShape {
                    input,
                    output,
                    offset,
                };
                offset = shape.end();
                shape
            })
            .collect()
    }

    /// Chromosome length.
    pub fn param_count(&self) -> usize {
        self.layers().last().map_or(0, LayerShape::end)
    }

    fn encoder_layers(&self) -> usize {
        self.dims.len() - 1
    }
}

/// Weights and biases of one autoencoder, stored as a flat chromosome.
#[derive(Debug, Clone, PartialEq)]
pub struct AutoencoderParams {
    spec: LayerSpec,
    layers: Vec<LayerShape>,
    values: Vec<f64>,
}

impl AutoencoderParams {
    /// Every entry drawn i.i.d. from the standard normal distribution.
    pub fn init<R: Rng + ?Sized>(spec: &LayerSpec, rng: &mut R) -> Self {
        let values = (0..spec.param_count())
            .map(|_| rng.sample::<f64, _>(StandardNormal))
            .collect();
        Self::from_parts(spec.clone(), values)
    }

    pub fn zeros(spec: &LayerSpec) -> Self {
        Self::from_parts(spec.clone(), vec![0.0; spec.param_count()])
    }

    fn from_parts(spec: LayerSpec, values: Vec<f64>) -> Self {
        let layers = spec.layers();
        AutoencoderParams {
            spec,
            layers,
            values,
        }
    }

    pub fn from_chromosome(spec: &LayerSpec, chromosome: &[f64]) -> Result<Self> {
        let expected = spec.param_count();
        if chromosome.len() != expected {
            return Err(Error::shape("chromosome", expected, chromosome.len()));
        }
        Ok(Self::from_parts(spec.clone(), chromosome.to_vec()))
    }

    pub fn to_chromosome(&self) -> Vec<f64> {
        self.values.clone()
    }

    pub fn chromosome(&self) -> &[f64] {
        &self.values
    }

    pub fn chromosome_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn spec(&self) -> &LayerSpec {
        &self.spec
    }

    /// Weight matrix of layer `layer` (encoder layers first), row-major.
    pub fn weights(&self, layer: usize) -> &[f64] {
        let s = self.layers[layer];
        &self.values[s.offset..s.bias_offset()]
    }

    pub fn weights_mut(&mut self, layer: usize) -> &mut [f64] {
        let s = self.layers[layer];
        &mut self.values[s.offset..s.bias_offset()]
    }

    pub fn bias(&self, layer: usize) -> &[f64] {
        let s = self.layers[layer];
        &self.values[s.bias_offset()..s.end()]
    }

    pub fn bias_mut(&mut self, layer: usize) -> &mut [f64] {
        let s = self.layers[layer];
        &mut self.values[s.bias_offset()..s.end()]
    }

    pub fn layer_count(&self) -> usize {
        self.layers.len()
    }

    fn apply(&self, layer: usize, input: &[f64], out: &mut Vec<f64>) {
        let s = self.layers[layer];
        let w = &self.values[s.offset..s.bias_offset()];
        let b = &self.values[s.bias_offset()..s.end()];
        out.clear();
        out.extend(w.chunks_exact(s.input).zip(b).map(|(row, bias)| {
            let pre: f64 = row.iter().zip(input).map(|(a, x)| a * x).sum::<f64>() + bias;
            sigmoid(pre)
        }));
    }

    /// Runs layers `range` and returns every activation, input included.
    fn run(&self, range: core::ops::Range<usize>, input: &[f64]) -> Vec<Vec<f64>> {
        let mut acts = Vec::with_capacity(range.len() + 1);
        acts.push(input.to_vec());
        for layer in range {
            let mut out = Vec::new();
            self.apply(layer, acts.last().unwrap(), &mut out);
            acts.push(out);
        }
        acts
    }

    pub fn encode(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.spec.input_dim() {
            return Err(Error::shape("encoder input", self.spec.input_dim(), x.len()));
        }
        Ok(self.run(0..self.spec.encoder_layers(), x).pop().unwrap())
    }

    pub fn decode(&self, z: &[f64]) -> Result<Vec<f64>> {
        if z.len() != self.spec.code_dim() {
            return Err(Error::shape("decoder input", self.spec.code_dim(), z.len()));
        }
        Ok(self
            .run(self.spec.encoder_layers()..self.layers.len(), z)
            .pop()
            .unwrap())
    }

    /// Codes for the real nodes of `sub`, padding rows to the input width.
    pub fn encode_subnetwork(&self, sub: &SubNetwork) -> Result<Vec<Vec<f64>>> {
        let rows = feature_rows(sub, self.spec.input_dim())?;
        rows.iter().map(|x| self.encode(x)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    /// Weight of the pairwise correlation term.
    pub alpha: f64,
    /// Weight of the Frobenius regulariser.
    pub beta: f64,
    /// Reconstruction weight on the nonzero entries of each input row.
    pub gamma_recon: f64,
    pub learning_rate: f64,
    pub epochs_per_batch: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            alpha: 0.01,
            beta: 1e-4,
            gamma_recon: 5.0,
            learning_rate: 0.01,
            epochs_per_batch: 20,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let finite = [self.alpha, self.beta, self.gamma_recon, self.learning_rate]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::invalid("training weights must be finite"));
        }
        if self.alpha < 0.0 || self.beta < 0.0 {
            return Err(Error::invalid("alpha and beta must be nonnegative"));
        }
        if self.gamma_recon <= 1.0 {
            return Err(Error::invalid(format!(
                "gamma_recon must exceed 1, got {}",
                self.gamma_recon
            )));
        }
        if self.learning_rate < 0.0 {
            return Err(Error::invalid("learning_rate must be nonnegative"));
        }
        Ok(())
    }
}

/// Adjacency rows of `sub`, zero-padded to `width` columns. Only the real
/// nodes get a row; phantom padding nodes take no part in any loss.
pub fn feature_rows(sub: &SubNetwork, width: usize) -> Result<Vec<Vec<f64>>> {
    let k = sub.k();
    if k > width {
        return Err(Error::shape("sub-network size", width, k));
    }
    let mut rows = vec![vec![0.0; width]; k];
    for &(i, j) in sub.local_edges() {
        rows[i][j] = 1.0;
        rows[j][i] = 1.0;
    }
    Ok(rows)
}

fn check_nonempty(sub: &SubNetwork) -> Result<()> {
    if sub.k() == 0 {
        return Err(Error::invalid("sub-network must contain at least one node"));
    }
    Ok(())
}

/// Pairwise term `sum_{i != j} s_ij |z_i - z_j|^2` over ordered pairs.
pub fn correlation_term(sub: &SubNetwork, codes: &[Vec<f64>]) -> f64 {
    let k = sub.k();
    let adj = sub.adjacency_matrix();
    let mut total = 0.0;
    for i in 0..k {
        for j in 0..k {
            if i != j {
                let sign = if adj[i * k + j] > 0.0 { 1.0 } else { -1.0 };
                total += sign * squared_distance(&codes[i], &codes[j]);
            }
        }
    }
    total
}

fn regularizer(params: &AutoencoderParams) -> f64 {
    (0..params.layer_count())
        .map(|l| params.weights(l).iter().map(|w| w * w).sum::<f64>())
        .sum()
}

/// The full training objective on one sub-network.
pub fn loss_le(params: &AutoencoderParams, sub: &SubNetwork, cfg: &TrainConfig) -> Result<f64> {
    cfg.validate()?;
    check_nonempty(sub)?;
    let rows = feature_rows(sub, params.spec.input_dim())?;
    let mut recon = 0.0;
    let mut codes = Vec::with_capacity(rows.len());
    for x in &rows {
        let z = params.encode(x)?;
        let x_hat = params.decode(&z)?;
        recon += x
            .iter()
            .zip(&x_hat)
            .map(|(&xi, &yi)| {
                let b = if xi != 0.0 { cfg.gamma_recon } else { 1.0 };
                let r = (xi - yi) * b;
                r * r
            })
            .sum::<f64>();
        codes.push(z);
    }
    Ok(recon + cfg.alpha * correlation_term(sub, &codes) + cfg.beta * regularizer(params))
}

/// Analytic gradient of [`loss_le`], in chromosome order.
pub fn gradient(params: &AutoencoderParams, sub: &SubNetwork, cfg: &TrainConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    check_nonempty(sub)?;
    let spec = &params.spec;
    let rows = feature_rows(sub, spec.input_dim())?;
    let enc = spec.encoder_layers();
    let total_layers = params.layer_count();

    // Forward pass for every node: activations from input to reconstruction.
    let traces: Vec<Vec<Vec<f64>>> = rows.iter().map(|x| params.run(0..total_layers, x)).collect();

    let mut grad = vec![0.0; params.values.len()];
    for l in 0..total_layers {
        let s = params.layers[l];
        for (g, w) in grad[s.offset..s.bias_offset()]
            .iter_mut()
            .zip(&params.values[s.offset..s.bias_offset()])
        {
            *g = 2.0 * cfg.beta * w;
        }
    }

    // d/dz_i of the pairwise term: 4 alpha sum_j s_ij (z_i - z_j), since each
    // unordered pair appears twice in the ordered sum.
    let k = sub.k();
    let adj = sub.adjacency_matrix();
    let d = spec.code_dim();
    let mut code_grads = vec![vec![0.0; d]; k];
    if cfg.alpha != 0.0 {
        for i in 0..k {
            for j in 0..k {
                if i == j {
                    continue;
                }
                let sign = if adj[i * k + j] > 0.0 { 1.0 } else { -1.0 };
                let (zi, zj) = (&traces[i][enc], &traces[j][enc]);
                for c in 0..d {
                    code_grads[i][c] += 4.0 * cfg.alpha * sign * (zi[c] - zj[c]);
                }
            }
        }
    }

    for (i, acts) in traces.iter().enumerate() {
        let x = &rows[i];
        let x_hat = &acts[total_layers];
        // delta = dL/d(pre-activation) of the current layer.
        let mut delta: Vec<f64> = x
            .iter()
            .zip(x_hat)
            .map(|(&xi, &yi)| {
                let b = if xi != 0.0 { cfg.gamma_recon } else { 1.0 };
                2.0 * b * b * (yi - xi) * yi * (1.0 - yi)
            })
            .collect();
        for l in (0..total_layers).rev() {
            let s = params.layers[l];
            let input = &acts[l];
            for (o, &dl) in delta.iter().enumerate() {
                let row = &mut grad[s.offset + o * s.input..s.offset + (o + 1) * s.input];
                for (g, &a) in row.iter_mut().zip(input) {
                    *g += dl * a;
                }
                grad[s.bias_offset() + o] += dl;
            }
            if l == 0 {
                break;
            }
            let w = params.weights(l);
            let mut upstream = vec![0.0; s.input];
            for (o, &dl) in delta.iter().enumerate() {
                for (u, &wv) in upstream.iter_mut().zip(&w[o * s.input..(o + 1) * s.input]) {
                    *u += dl * wv;
                }
            }
            if l == enc {
                for (u, &cg) in upstream.iter_mut().zip(&code_grads[i]) {
                    *u += cg;
                }
            }
            delta = upstream
                .iter()
                .zip(input)
                .map(|(&u, &a)| u * a * (1.0 - a))
                .collect();
        }
    }
    Ok(grad)
}

/// Adam moment estimates over a flat parameter vector.
#[derive(Debug, Clone)]
pub struct Adam {
    first: Vec<f64>,
    second: Vec<f64>,
    step: i32,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Adam {
    pub fn new(len: usize, learning_rate: f64) -> Self {
        Adam {
            first: vec![0.0; len],
            second: vec![0.0; len],
            step: 0,
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }

    pub fn update(&mut self, params: &mut [f64], grad: &[f64]) {
        self.step += 1;
        let c1 = 1.0 - libm::pow(self.beta1, self.step as f64);
        let c2 = 1.0 - libm::pow(self.beta2, self.step as f64);
        for (((p, &g), m), v) in params
            .iter_mut()
            .zip(grad)
            .zip(&mut self.first)
            .zip(&mut self.second)
        {
            *m = self.beta1 * *m + (1.0 - self.beta1) * g;
            *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
            let m_hat = *m / c1;
            let v_hat = *v / c2;
            *p -= self.learning_rate * m_hat / (libm::sqrt(v_hat) + self.epsilon);
        }
    }
}

/// `epochs_per_batch` passes over `batch` in shuffled order, one Adam step
/// per sub-network. Optimiser state starts fresh for every call.
pub fn train_on_batch<R: Rng + ?Sized>(
    params: &AutoencoderParams,
    batch: &[&SubNetwork],
    cfg: &TrainConfig,
    rng: &mut R,
) -> Result<AutoencoderParams> {
    cfg.validate()?;
    if batch.is_empty() {
        return Err(Error::invalid("training batch is empty"));
    }
    let width = params.spec.input_dim();
    if let Some(sub) = batch.iter().find(|s| s.k() > width || s.k() == 0) {
        return Err(Error::shape("batch sub-network size", width, sub.k()));
    }
    let mut out = params.clone();
    let mut adam = Adam::new(out.values.len(), cfg.learning_rate);
    let mut order: Vec<usize> = (0..batch.len()).collect();
    for _ in 0..cfg.epochs_per_batch {
        order.shuffle(rng);
        for &i in &order {
            let g = gradient(&out, batch[i], cfg)?;
            adam.update(&mut out.values, &g);
        }
    }
    Ok(out)
}
