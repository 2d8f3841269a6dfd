//! Per-class diagonal-covariance Gaussian mixtures fitted by EM.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::seq::index;

use crate::error::{Error, Result};
use crate::frontend::FeatureMatrix;
use crate::linalg::{squared_distance, Matrix};
use crate::math;
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GmmInit {
    /// Means drawn from distinct random frames.
    RandomFrames,
    /// Random frames refined by a few Lloyd iterations.
    KMeans,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GmmOptions {
    pub components: usize,
    pub max_iter: usize,
    /// Stop when the relative log-likelihood gain falls below this.
    pub rel_tol: f64,
    /// Variance floor as a fraction of the global per-dim variance.
    pub var_floor_ratio: f64,
    pub init: GmmInit,
}

impl Default for GmmOptions {
    fn default() -> Self {
        Self { components: 512, max_iter: 200, rel_tol: 1e-6, var_floor_ratio: 1e-3, init: GmmInit::RandomFrames }
    }
}

const ABS_VAR_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct ClassGmm {
    pub weights: Vec<f64>,
    /// `K x d`
    pub means: Matrix,
    /// `K x d`
    pub variances: Matrix,
}

impl ClassGmm {
    pub fn components(&self) -> usize {
        self.weights.len()
    }

    /// `ln p(x)` under this mixture.
    pub fn log_likelihood(&self, x: &[f64]) -> f64 {
        let mut buf = vec![0.0; self.components()];
        self.component_log_joint(x, &mut buf);
        math::log_sum_exp(&buf)
    }

    /// `ln w_k + ln N(x; mu_k, sigma_k^2)` for every component.
    fn component_log_joint(&self, x: &[f64], out: &mut [f64]) {
        let ln2pi = math::ln(2.0 * PI);
        for (k, o) in out.iter_mut().enumerate() {
            let w = self.weights[k];
            if w <= 0.0 {
                *o = f64::NEG_INFINITY;
                continue;
            }
            let mut acc = 0.0;
            for ((&xi, &mu), &var) in x.iter().zip(self.means.row(k)).zip(self.variances.row(k)) {
                let d = xi - mu;
                acc += ln2pi + math::ln(var) + d * d / var;
            }
            *o = math::ln(w) - 0.5 * acc;
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GmmModel {
    pub classes: Vec<ClassGmm>,
    pub var_floor: Vec<f64>,
}

impl GmmModel {
    pub fn dims(&self) -> usize {
        self.var_floor.len()
    }
}

/// Total training log-likelihood after each EM iteration, per class.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct GmmFitReport {
    pub log_likelihood: Vec<Vec<f64>>,
}

fn global_variance(parts: &[&FeatureMatrix], dims: usize) -> Vec<f64> {
    let n: usize = parts.iter().map(|p| p.rows()).sum();
    let mut mean = vec![0.0; dims];
    for p in parts {
        for r in p.values.iter_rows() {
            for (m, &x) in mean.iter_mut().zip(r) {
                *m += x;
            }
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let mut var = vec![0.0; dims];
    for p in parts {
        for r in p.values.iter_rows() {
            for ((v, &x), &m) in var.iter_mut().zip(r).zip(&mean) {
                *v += (x - m) * (x - m);
            }
        }
    }
    var.iter_mut().for_each(|v| *v /= n as f64);
    var
}

fn kmeans_refine(data: &Matrix, means: &mut Matrix, iters: usize) {
    let k = means.rows();
    let d = data.cols();
    for _ in 0..iters {
        let mut sums = Matrix::zeros(k, d);
        let mut counts = vec![0usize; k];
        for x in data.iter_rows() {
            let mut best = 0;
            let mut best_d = f64::INFINITY;
            for c in 0..k {
                let dist = squared_distance(x, means.row(c));
                if dist < best_d {
                    best_d = dist;
                    best = c;
                }
            }
            counts[best] += 1;
            crate::linalg::axpy(1.0, x, sums.row_mut(best));
        }
        for c in 0..k {
            if counts[c] > 0 {
                let inv = 1.0 / counts[c] as f64;
                for (m, s) in means.row_mut(c).iter_mut().zip(sums.row(c)) {
                    *m = s * inv;
                }
            }
        }
    }
}

fn fit_class(data: &Matrix, opts: &GmmOptions, init_var: &[f64], floor: &[f64], seed: u64, class: usize) -> (ClassGmm, Vec<f64>) {
    let (n, d, k) = (data.rows(), data.cols(), opts.components);
    let mut r = rng::stream(seed ^ (class as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15), rng::STREAM_GMM);
    let mut picks = index::sample(&mut r, n, k).into_vec();
    picks.sort_unstable();
    let mut means = data.select_rows(&picks);
    if opts.init == GmmInit::KMeans {
        kmeans_refine(data, &mut means, 10);
    }
    let mut variances = Matrix::zeros(k, d);
    for c in 0..k {
        variances.row_mut(c).copy_from_slice(init_var);
    }
    let mut gmm = ClassGmm { weights: vec![1.0 / k as f64; k], means, variances };

    let mut history = Vec::new();
    let mut resp = Matrix::zeros(n, k);
    let mut prev: Option<f64> = None;
    for _ in 0..opts.max_iter {
        // E-step
        let mut ll = 0.0;
        for (t, x) in data.iter_rows().enumerate() {
            let row = resp.row_mut(t);
            gmm.component_log_joint(x, row);
            let lse = math::log_sum_exp(row);
            ll += lse;
            for v in row.iter_mut() {
                *v = math::exp(*v - lse);
            }
        }
        history.push(ll);
        if let Some(p) = prev {
            if (ll - p) / p.abs().max(f64::MIN_POSITIVE) < opts.rel_tol {
                break;
            }
        }
        prev = Some(ll);

        // M-step
        let mut nk = vec![0.0; k];
        let mut sum_x = Matrix::zeros(k, d);
        for (t, x) in data.iter_rows().enumerate() {
            for (c, &g) in resp.row(t).iter().enumerate() {
                if g > 0.0 {
                    nk[c] += g;
                    crate::linalg::axpy(g, x, sum_x.row_mut(c));
                }
            }
        }
        for c in 0..k {
            gmm.weights[c] = nk[c] / n as f64;
            if nk[c] > 0.0 {
                for (m, s) in gmm.means.row_mut(c).iter_mut().zip(sum_x.row(c)) {
                    *m = s / nk[c];
                }
            }
        }
        let mut sum_sq = Matrix::zeros(k, d);
        for (t, x) in data.iter_rows().enumerate() {
            for (c, &g) in resp.row(t).iter().enumerate() {
                if g > 0.0 {
                    for ((acc, &xi), &mu) in sum_sq.row_mut(c).iter_mut().zip(x).zip(gmm.means.row(c)) {
                        *acc += g * (xi - mu) * (xi - mu);
                    }
                }
            }
        }
        for c in 0..k {
            if nk[c] > 0.0 {
                for ((v, s), &f) in gmm.variances.row_mut(c).iter_mut().zip(sum_sq.row(c)).zip(floor) {
                    *v = (s / nk[c]).max(f);
                }
            }
        }
    }
    (gmm, history)
}

/// Fits one mixture per class. `features_per_class[c]` holds class `c`'s frames.
pub fn gmm_fit(features_per_class: &[&FeatureMatrix], opts: &GmmOptions, seed: u64) -> Result<(GmmModel, GmmFitReport)> {
    if features_per_class.is_empty() {
        return Err(Error::EmptyInput);
    }
    if opts.components == 0 {
        return Err(Error::BadConfig("GMM needs at least one component".into()));
    }
    let dims = features_per_class[0].dims();
    for (c, fm) in features_per_class.iter().enumerate() {
        fm.provenance.ensure_fit_safe("GMM")?;
        if fm.dims() != dims {
            return Err(Error::DimMismatch { expected: dims, found: fm.dims() });
        }
        if fm.rows() == 0 {
            return Err(Error::EmptyClass(c));
        }
        if fm.rows() < opts.components {
            return Err(Error::TooFewFrames { class: c, frames: fm.rows(), k: opts.components });
        }
    }
    let global = global_variance(features_per_class, dims);
    let floor: Vec<f64> = global.iter().map(|v| (v * opts.var_floor_ratio).max(ABS_VAR_FLOOR)).collect();
    let init_var: Vec<f64> = global.iter().zip(&floor).map(|(v, f)| v.max(*f)).collect();

    let mut classes = Vec::with_capacity(features_per_class.len());
    let mut report = GmmFitReport::default();
    for (c, fm) in features_per_class.iter().enumerate() {
        let (g, hist) = fit_class(&fm.values, opts, &init_var, &floor, seed, c);
        classes.push(g);
        report.log_likelihood.push(hist);
    }
    Ok((GmmModel { classes, var_floor: floor }, report))
}

/// Per-class `ln p(x | class)`.
pub fn gmm_frame_scores(model: &GmmModel, frame: &[f64]) -> Result<Vec<f64>> {
    if frame.len() != model.dims() {
        return Err(Error::DimMismatch { expected: model.dims(), found: frame.len() });
    }
    Ok(model.classes.iter().map(|g| g.log_likelihood(frame)).collect())
}
