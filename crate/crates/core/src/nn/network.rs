use alloc::vec;
use alloc::vec::Vec;

use rand::Rng as _;

use crate::error::{Error, Result};
use crate::fingerprint::Fingerprint;
use crate::linalg::{axpy, dot, Matrix};
use crate::math;
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Activation {
    Sigmoid,
    Linear,
    Softmax,
}

impl Activation {
    pub fn name(self) -> &'static str {
        match self {
            Activation::Sigmoid => "sigmoid",
            Activation::Linear => "linear",
            Activation::Softmax => "softmax",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "sigmoid" => Some(Activation::Sigmoid),
            "linear" => Some(Activation::Linear),
            "softmax" => Some(Activation::Softmax),
            _ => None,
        }
    }

    fn apply_row(self, row: &mut [f64]) {
        match self {
            Activation::Sigmoid => row.iter_mut().for_each(|v| *v = math::sigmoid(*v)),
            Activation::Linear => {}
            Activation::Softmax => math::softmax_in_place(row),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LayerSpec {
    pub in_dim: usize,
    pub out_dim: usize,
    pub activation: Activation,
    pub frozen: bool,
}

impl LayerSpec {
    pub fn new(in_dim: usize, out_dim: usize, activation: Activation) -> Self {
        Self { in_dim, out_dim, activation, frozen: false }
    }

    pub fn frozen(mut self) -> Self {
        self.frozen = true;
        self
    }
}

/// Fully connected layer. `weights` is `out_dim x in_dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub spec: LayerSpec,
    pub weights: Matrix,
    pub bias: Vec<f64>,
}

impl Dense {
    /// Pre-activations `x W^T + b` for every row of `input`.
    pub fn affine(&self, input: &Matrix) -> Matrix {
        let mut z = Matrix::zeros(input.rows(), self.spec.out_dim);
        for (b, x) in input.iter_rows().enumerate() {
            let zr = z.row_mut(b);
            for (o, zo) in zr.iter_mut().enumerate() {
                *zo = dot(x, self.weights.row(o)) + self.bias[o];
            }
        }
        z
    }

    pub fn activate(&self, z: &Matrix) -> Matrix {
        let mut a = z.clone();
        for r in 0..a.rows() {
            self.spec.activation.apply_row(a.row_mut(r));
        }
        a
    }

    /// Hash of the parameter bits.
    pub fn checksum(&self) -> Fingerprint {
        Fingerprint::builder().f64s(self.weights.as_slice()).f64s(&self.bias).finish()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    pub layers: Vec<Dense>,
    pub seed: u64,
}

fn check_specs(specs: &[LayerSpec]) -> Result<()> {
    if specs.is_empty() {
        return Err(Error::BadConfig("network needs at least one layer".into()));
    }
    for (i, s) in specs.iter().enumerate() {
        if s.in_dim == 0 || s.out_dim == 0 {
            return Err(Error::DimChainBroken { layer: i });
        }
        if i > 0 && specs[i - 1].out_dim != s.in_dim {
            return Err(Error::DimChainBroken { layer: i });
        }
        if s.activation == Activation::Softmax && i + 1 != specs.len() {
            return Err(Error::MisplacedSoftmax { layer: i });
        }
    }
    Ok(())
}

/// Glorot-uniform weights `U(-s, s)`, `s = sqrt(6 / (in + out))`, zero biases.
pub fn init_network(specs: &[LayerSpec], seed: u64) -> Result<Network> {
    init_network_stream(specs, seed, rng::STREAM_INIT)
}

pub(crate) fn init_network_stream(specs: &[LayerSpec], seed: u64, stream: u64) -> Result<Network> {
    check_specs(specs)?;
    let mut r = rng::stream(seed, stream);
    let layers = specs
        .iter()
        .map(|&spec| {
            let s = math::sqrt(6.0 / (spec.in_dim + spec.out_dim) as f64);
            let data = (0..spec.in_dim * spec.out_dim).map(|_| r.random_range(-s..s)).collect();
            Dense {
                spec,
                weights: Matrix::from_vec(spec.out_dim, spec.in_dim, data).expect("sized above"),
                bias: vec![0.0; spec.out_dim],
            }
        })
        .collect();
    Ok(Network { layers, seed })
}

impl Network {
    /// Assembles a network from existing layers, checking the dim chain.
    pub fn from_layers(layers: Vec<Dense>, seed: u64) -> Result<Self> {
        let specs: Vec<LayerSpec> = layers.iter().map(|l| l.spec).collect();
        check_specs(&specs)?;
        for (i, l) in layers.iter().enumerate() {
            if l.weights.rows() != l.spec.out_dim || l.weights.cols() != l.spec.in_dim || l.bias.len() != l.spec.out_dim {
                return Err(Error::DimChainBroken { layer: i });
            }
        }
        Ok(Self { layers, seed })
    }

    pub fn specs(&self) -> Vec<LayerSpec> {
        self.layers.iter().map(|l| l.spec).collect()
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].spec.in_dim
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map_or(0, |l| l.spec.out_dim)
    }

    pub fn has_softmax_head(&self) -> bool {
        self.layers.last().is_some_and(|l| l.spec.activation == Activation::Softmax)
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.as_slice().len() + l.bias.len()).sum()
    }

    /// Number of leading frozen layers.
    pub fn frozen_prefix(&self) -> usize {
        self.layers.iter().take_while(|l| l.spec.frozen).count()
    }

    /// Outputs of every layer, in order.
    pub fn forward(&self, batch: &Matrix) -> Result<Vec<Matrix>> {
        Ok(self.forward_detailed_from(0, batch)?.into_iter().map(|(_, a)| a).collect())
    }

    /// Final-layer output.
    pub fn predict(&self, batch: &Matrix) -> Result<Matrix> {
        self.predict_range(0, self.layers.len(), batch)
    }

    /// Runs layers `from..to` on `input`, which must match layer `from`'s input.
    pub fn predict_range(&self, from: usize, to: usize, input: &Matrix) -> Result<Matrix> {
        if from >= to {
            return Ok(input.clone());
        }
        let expected = self.layers[from].spec.in_dim;
        if input.cols() != expected {
            return Err(Error::DimMismatch { expected, found: input.cols() });
        }
        let mut cur = self.layers[from].activate(&self.layers[from].affine(input));
        for l in &self.layers[from + 1..to] {
            cur = l.activate(&l.affine(&cur));
        }
        Ok(cur)
    }

    /// `(pre-activation, output)` pairs of layers `from..`.
    pub(crate) fn forward_detailed_from(&self, from: usize, input: &Matrix) -> Result<Vec<(Matrix, Matrix)>> {
        let expected = self.layers[from].spec.in_dim;
        if input.cols() != expected {
            return Err(Error::DimMismatch { expected, found: input.cols() });
        }
        let mut out: Vec<(Matrix, Matrix)> = Vec::with_capacity(self.layers.len() - from);
        for l in &self.layers[from..] {
            let x = out.last().map_or(input, |(_, a)| a);
            let z = l.affine(x);
            let a = l.activate(&z);
            out.push((z, a));
        }
        Ok(out)
    }
}

/// Parameter gradients, one slot per layer. Frozen layers hold exact zeros.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Matrix>,
    pub biases: Vec<Vec<f64>>,
}

fn one_hot(labels: &[usize], classes: usize) -> Result<Matrix> {
    let mut t = Matrix::zeros(labels.len(), classes);
    for (i, &c) in labels.iter().enumerate() {
        if c >= classes {
            return Err(Error::LabelOutOfRange { label: c, classes });
        }
        t.set(i, c, 1.0);
    }
    Ok(t)
}

/// Mean cross-entropy of a softmax head given its logits.
pub(crate) fn cross_entropy_from_logits(logits: &Matrix, targets: &Matrix) -> f64 {
    let mut total = 0.0;
    for (z, t) in logits.iter_rows().zip(targets.iter_rows()) {
        let lse = math::log_sum_exp(z);
        for (&zi, &ti) in z.iter().zip(t) {
            if ti != 0.0 {
                total -= ti * (zi - lse);
            }
        }
    }
    total / logits.rows() as f64
}

/// Mean cross-entropy of `net` on a labelled batch.
pub fn cross_entropy(net: &Network, batch: &Matrix, labels: &[usize]) -> Result<f64> {
    if !net.has_softmax_head() {
        return Err(Error::NoSoftmaxHead);
    }
    let n = net.layers.len();
    let hidden = net.predict_range(0, n - 1, batch)?;
    let logits = net.layers[n - 1].affine(&hidden);
    Ok(cross_entropy_from_logits(&logits, &one_hot(labels, net.output_dim())?))
}

/// Backpropagation from a detailed forward pass starting at layer `from`.
/// Returns `None` for layers that are frozen or below `from`.
pub(crate) fn backprop(
    net: &Network,
    from: usize,
    input: &Matrix,
    cache: &[(Matrix, Matrix)],
    targets: &Matrix,
) -> Vec<Option<(Matrix, Vec<f64>)>> {
    let n = net.layers.len();
    let batch = input.rows() as f64;
    let lowest = (from..n).find(|&i| !net.layers[i].spec.frozen).unwrap_or(n);
    let mut grads: Vec<Option<(Matrix, Vec<f64>)>> = (0..n).map(|_| None).collect();
    if lowest == n {
        return grads;
    }

    // softmax + cross-entropy: dL/dz = (p - y) / B
    let (_, probs) = &cache[n - 1 - from];
    let mut delta = Matrix::zeros(probs.rows(), probs.cols());
    for ((d, &p), &y) in delta.as_mut_slice().iter_mut().zip(probs.as_slice()).zip(targets.as_slice()) {
        *d = (p - y) / batch;
    }

    for l in (lowest..n).rev() {
        let layer = &net.layers[l];
        let prev = if l == from { input } else { &cache[l - 1 - from].1 };
        if !layer.spec.frozen {
            let mut gw = Matrix::zeros(layer.spec.out_dim, layer.spec.in_dim);
            let mut gb = vec![0.0; layer.spec.out_dim];
            for (b, drow) in delta.iter_rows().enumerate() {
                let x = prev.row(b);
                for (o, &d) in drow.iter().enumerate() {
                    if d != 0.0 {
                        axpy(d, x, gw.row_mut(o));
                    }
                    gb[o] += d;
                }
            }
            grads[l] = Some((gw, gb));
        }
        if l == lowest {
            break;
        }
        // delta for layer l-1: (delta W) * act'(z_{l-1})
        let below = &net.layers[l - 1];
        let (_, a_prev) = &cache[l - 1 - from];
        let mut next = Matrix::zeros(delta.rows(), layer.spec.in_dim);
        for (b, drow) in delta.iter_rows().enumerate() {
            let nrow = next.row_mut(b);
            for (o, &d) in drow.iter().enumerate() {
                if d != 0.0 {
                    axpy(d, layer.weights.row(o), nrow);
                }
            }
            match below.spec.activation {
                Activation::Sigmoid => {
                    for (v, &a) in nrow.iter_mut().zip(a_prev.row(b)) {
                        *v *= a * (1.0 - a);
                    }
                }
                Activation::Linear => {}
                Activation::Softmax => unreachable!("softmax only allowed as the head"),
            }
        }
        delta = next;
    }
    grads
}

/// Gradients of the mean cross-entropy against soft or one-hot `targets`.
pub fn grad_targets(net: &Network, batch: &Matrix, targets: &Matrix) -> Result<Gradients> {
    if !net.has_softmax_head() {
        return Err(Error::NoSoftmaxHead);
    }
    if targets.rows() != batch.rows() || targets.cols() != net.output_dim() {
        return Err(Error::ShapeMismatch);
    }
    let cache = net.forward_detailed_from(0, batch)?;
    let g = backprop(net, 0, batch, &cache, targets);
    let mut weights = Vec::with_capacity(g.len());
    let mut biases = Vec::with_capacity(g.len());
    for (slot, layer) in g.into_iter().zip(&net.layers) {
        let (w, b) = slot.unwrap_or_else(|| {
            (Matrix::zeros(layer.spec.out_dim, layer.spec.in_dim), vec![0.0; layer.spec.out_dim])
        });
        weights.push(w);
        biases.push(b);
    }
    Ok(Gradients { weights, biases })
}

/// Gradients of the mean cross-entropy against class indices.
pub fn grad(net: &Network, batch: &Matrix, labels: &[usize]) -> Result<Gradients> {
    if !net.has_softmax_head() {
        return Err(Error::NoSoftmaxHead);
    }
    if labels.len() != batch.rows() {
        return Err(Error::ShapeMismatch);
    }
    grad_targets(net, batch, &one_hot(labels, net.output_dim())?)
}

/// Classical momentum step: `v = m v + (g + wd w)`, then `w -= lr v`.
pub fn sgd_step(
    params: &mut [f64],
    grads: &[f64],
    velocity: &mut [f64],
    lr: f64,
    momentum: f64,
    weight_decay: f64,
) -> Result<()> {
    if params.len() != grads.len() || params.len() != velocity.len() {
        return Err(Error::ShapeMismatch);
    }
    for ((w, &g), v) in params.iter_mut().zip(grads).zip(velocity.iter_mut()) {
        *v = momentum * *v + (g + weight_decay * *w);
        *w -= lr * *v;
    }
    Ok(())
}
