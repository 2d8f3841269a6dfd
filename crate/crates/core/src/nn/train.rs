//! Mini-batch SGD with a staged learning-rate schedule and a stratified 4:1
//! train/validation split.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::time::Duration;

use rand::seq::SliceRandom;

use super::network::{backprop, cross_entropy_from_logits, Network};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub lr0: f64,
    pub momentum: f64,
    pub weight_decay: f64,
    pub batch_size: usize,
    /// Fraction of each class held out for validation (0.2 gives 4:1).
    pub val_ratio: f64,
    pub patience_epochs: usize,
    pub min_rel_improve: f64,
    pub n_lr_stages: usize,
    pub max_epochs_per_stage: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lr0: 0.005,
            momentum: 0.9,
            weight_decay: 0.0005,
            batch_size: 128,
            val_ratio: 0.2,
            patience_epochs: 5,
            min_rel_improve: 1e-3,
            n_lr_stages: 2,
            max_epochs_per_stage: 200,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr0 > 0.0) {
            return Err(Error::BadConfig("lr0 must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::BadConfig("momentum must lie in [0, 1)".into()));
        }
        if self.weight_decay < 0.0 || self.batch_size == 0 {
            return Err(Error::BadConfig("weight_decay >= 0 and batch_size >= 1 required".into()));
        }
        if !(0.0..1.0).contains(&self.val_ratio) {
            return Err(Error::BadConfig("val_ratio must lie in [0, 1)".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub stage: usize,
    pub lr: f64,
    /// Mean cross-entropy over the epoch's mini-batches.
    pub train_ce: f64,
    pub val_ce: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainReport {
    pub epochs: Vec<EpochRecord>,
    /// Index into `epochs` where each stage began.
    pub stage_starts: Vec<usize>,
    /// Epoch whose parameters were returned; `None` means the initial network.
    pub best_epoch: Option<usize>,
    pub n_train: usize,
    pub n_val: usize,
    /// Filled in by callers that have a clock.
    pub wall_time: Option<Duration>,
}

impl TrainReport {
    pub fn final_epoch(&self) -> usize {
        self.epochs.len()
    }

    pub fn stages_run(&self) -> usize {
        self.stage_starts.len()
    }
}

/// Per class: shuffle, then hold out `floor(n_c * val_ratio)` samples.
pub fn stratified_split(labels: &[usize], classes: usize, val_ratio: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut r = rng::stream(seed, rng::STREAM_SPLIT);
    let mut train = Vec::new();
    let mut val = Vec::new();
    for c in 0..classes {
        let mut idx: Vec<usize> = labels.iter().enumerate().filter(|(_, &l)| l == c).map(|(i, _)| i).collect();
        idx.shuffle(&mut r);
        let n_val = (idx.len() as f64 * val_ratio) as usize;
        val.extend_from_slice(&idx[..n_val]);
        train.extend_from_slice(&idx[n_val..]);
    }
    train.sort_unstable();
    val.sort_unstable();
    (train, val)
}

fn targets_for(labels: &[usize], idx: &[usize], classes: usize) -> Matrix {
    let mut t = Matrix::zeros(idx.len(), classes);
    for (r, &i) in idx.iter().enumerate() {
        t.set(r, labels[i], 1.0);
    }
    t
}

fn eval_ce(net: &Network, from: usize, inputs: &Matrix, targets: &Matrix) -> f64 {
    let n = net.layers.len();
    let hidden = net.predict_range(from, n - 1, inputs).expect("dims checked");
    let logits = net.layers[n - 1].affine(&hidden);
    cross_entropy_from_logits(&logits, targets)
}

/// Trains every unfrozen layer of `net` on `(features, labels)`.
///
/// Each stage runs at `lr0 / 10^stage` until the epoch-mean training
/// cross-entropy improves by less than `min_rel_improve` (relative) for
/// `patience_epochs` consecutive epochs, or `max_epochs_per_stage` is hit.
/// The returned network is the snapshot with the lowest validation
/// cross-entropy (the initial network counts); with an empty validation
/// split the last epoch's parameters are returned.
///
/// Outputs of a leading frozen block are computed once and cached, since
/// they cannot change.
pub fn train(net: &Network, features: &Matrix, labels: &[usize], cfg: &TrainConfig) -> Result<(Network, TrainReport)> {
    cfg.validate()?;
    if !net.has_softmax_head() {
        return Err(Error::NoSoftmaxHead);
    }
    let classes = net.output_dim();
    if classes < 2 {
        return Err(Error::DegenerateLabels);
    }
    if features.rows() != labels.len() {
        return Err(Error::DimMismatch { expected: features.rows(), found: labels.len() });
    }
    if features.cols() != net.input_dim() {
        return Err(Error::DimMismatch { expected: net.input_dim(), found: features.cols() });
    }
    if labels.is_empty() {
        return Err(Error::TooFewSamples("no training samples".into()));
    }
    if let Some(&bad) = labels.iter().find(|&&l| l >= classes) {
        return Err(Error::LabelOutOfRange { label: bad, classes });
    }
    let first = labels[0];
    if labels.iter().all(|&l| l == first) {
        return Err(Error::DegenerateLabels);
    }

    let (train_idx, val_idx) = stratified_split(labels, classes, cfg.val_ratio, cfg.seed);
    for c in 0..classes {
        if !train_idx.iter().any(|&i| labels[i] == c) {
            return Err(Error::TooFewSamples(format!("class {c} has no training samples")));
        }
    }

    let from = net.frozen_prefix().min(net.layers.len() - 1);
    let train_in = net.predict_range(0, from, &features.select_rows(&train_idx))?;
    let val_in = net.predict_range(0, from, &features.select_rows(&val_idx))?;
    let train_t = targets_for(labels, &train_idx, classes);
    let val_t = targets_for(labels, &val_idx, classes);

    let mut report = TrainReport { n_train: train_idx.len(), n_val: val_idx.len(), ..Default::default() };
    let mut cur = net.clone();
    let has_val = !val_idx.is_empty();
    let mut best = cur.clone();
    let mut best_val = if has_val { eval_ce(&cur, from, &val_in, &val_t) } else { f64::INFINITY };

    let mut shuffle_rng = rng::stream(cfg.seed, rng::STREAM_SHUFFLE);
    let mut order: Vec<usize> = (0..train_idx.len()).collect();

    for stage in 0..cfg.n_lr_stages {
        if cfg.max_epochs_per_stage == 0 {
            break;
        }
        let lr = cfg.lr0 / libm::pow(10.0, stage as f64);
        report.stage_starts.push(report.epochs.len());
        let mut velocity: Vec<(Vec<f64>, Vec<f64>)> = cur
            .layers
            .iter()
            .map(|l| {
                if l.spec.frozen {
                    (Vec::new(), Vec::new())
                } else {
                    (vec![0.0; l.weights.as_slice().len()], vec![0.0; l.bias.len()])
                }
            })
            .collect();
        let mut prev_ce: Option<f64> = None;
        let mut flat_epochs = 0;

        for _ in 0..cfg.max_epochs_per_stage {
            order.shuffle(&mut shuffle_rng);
            let mut loss_sum = 0.0;
            for chunk in order.chunks(cfg.batch_size) {
                let x = train_in.select_rows(chunk);
                let t = train_t.select_rows(chunk);
                let cache = cur.forward_detailed_from(from, &x)?;
                let logits = &cache.last().expect("non-empty").0;
                loss_sum += cross_entropy_from_logits(logits, &t) * chunk.len() as f64;
                let grads = backprop(&cur, from, &x, &cache, &t);
                for ((layer, g), (vw, vb)) in cur.layers.iter_mut().zip(grads).zip(velocity.iter_mut()) {
                    if let Some((gw, gb)) = g {
                        super::sgd_step(layer.weights.as_mut_slice(), gw.as_slice(), vw, lr, cfg.momentum, cfg.weight_decay)?;
                        super::sgd_step(&mut layer.bias, &gb, vb, lr, cfg.momentum, 0.0)?;
                    }
                }
            }
            let train_ce = loss_sum / train_idx.len() as f64;
            if !train_ce.is_finite() {
                return Err(Error::BadConfig(format!("training diverged (cross-entropy {train_ce})")));
            }
            let val_ce = has_val.then(|| eval_ce(&cur, from, &val_in, &val_t));
            report.epochs.push(EpochRecord { stage, lr, train_ce, val_ce });
            log::debug!("stage {stage} epoch {} train_ce {train_ce:.6} val_ce {val_ce:?}", report.epochs.len());

            match val_ce {
                Some(v) if v < best_val => {
                    best_val = v;
                    best = cur.clone();
                    report.best_epoch = Some(report.epochs.len() - 1);
                }
                Some(_) => {}
                None => {
                    best = cur.clone();
                    report.best_epoch = Some(report.epochs.len() - 1);
                }
            }

            if let Some(p) = prev_ce {
                let rel = (p - train_ce) / p.abs().max(f64::MIN_POSITIVE);
                if rel < cfg.min_rel_improve {
                    flat_epochs += 1;
                } else {
                    flat_epochs = 0;
                }
            }
            prev_ce = Some(train_ce);
            if flat_epochs >= cfg.patience_epochs {
                break;
            }
        }
    }

    for (i, (a, b)) in net.layers.iter().zip(&best.layers).enumerate() {
        if a.spec.frozen && (a.weights != b.weights || a.bias != b.bias) {
            return Err(Error::FrozenLayerModified(i));
        }
    }
    Ok((best, report))
}
