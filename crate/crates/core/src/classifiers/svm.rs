//! One-vs-rest RBF support vector machines trained by SMO.
//!
//! The binary solver follows the usual maximal-violating-pair scheme with
//! second-order working-set selection. Kernel rows are computed on demand
//! and kept in a bounded FIFO cache, so memory stays linear in the number of
//! training frames.

use alloc::collections::{BTreeMap, VecDeque};
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::frontend::FeatureMatrix;
use crate::linalg::{squared_distance, Matrix};
use crate::math;
use crate::rng;

const TAU: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvmParams {
    /// Box constraint.
    pub c: f64,
    /// RBF width in `exp(-gamma ||x - y||^2)`.
    pub gamma: f64,
    /// KKT tolerance used as the stopping criterion.
    pub tol: f64,
    /// Upper bound on SMO pair updates; `0` picks `max(100_000, 100 n)`.
    pub max_iter: usize,
    /// Kernel rows kept in memory.
    pub cache_rows: usize,
    /// Stratified random subsample of training frames, if set.
    pub max_train_frames: Option<usize>,
}

impl Default for SvmParams {
    fn default() -> Self {
        Self { c: 10.0, gamma: 0.02, tol: 1e-3, max_iter: 0, cache_rows: 2048, max_train_frames: None }
    }
}

#[inline]
pub fn rbf(gamma: f64, a: &[f64], b: &[f64]) -> f64 {
    math::exp(-gamma * squared_distance(a, b))
}

struct KernelCache<'a> {
    x: &'a Matrix,
    gamma: f64,
    rows: BTreeMap<usize, Vec<f64>>,
    order: VecDeque<usize>,
    capacity: usize,
}

impl<'a> KernelCache<'a> {
    fn new(x: &'a Matrix, gamma: f64, capacity: usize) -> Self {
        Self { x, gamma, rows: BTreeMap::new(), order: VecDeque::new(), capacity: capacity.max(2) }
    }

    fn ensure(&mut self, i: usize) {
        if self.rows.contains_key(&i) {
            return;
        }
        if self.order.len() >= self.capacity {
            if let Some(old) = self.order.pop_front() {
                self.rows.remove(&old);
            }
        }
        let xi = self.x.row(i);
        let row = self.x.iter_rows().map(|xj| rbf(self.gamma, xi, xj)).collect();
        self.rows.insert(i, row);
        self.order.push_back(i);
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.rows[&i]
    }
}

/// Solution of the binary dual
/// `max sum(a) - 1/2 sum_ij a_i a_j y_i y_j K_ij`, `0 <= a <= C`, `sum a_i y_i = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoSolution {
    pub alpha: Vec<f64>,
    pub bias: f64,
    /// Dual objective at `alpha`.
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Binary SMO on rows of `x` with labels `y` in `{-1, +1}`.
pub fn smo_solve(x: &Matrix, y: &[f64], params: &SvmParams) -> Result<SmoSolution> {
    let n = x.rows();
    if n == 0 || y.len() != n {
        return Err(Error::DimMismatch { expected: n, found: y.len() });
    }
    if y.iter().any(|&v| v != 1.0 && v != -1.0) {
        return Err(Error::BadConfig("binary labels must be -1 or +1".into()));
    }
    if !(params.c > 0.0) || !(params.gamma > 0.0) || !(params.tol > 0.0) {
        return Err(Error::BadConfig("SVM needs C, gamma and tol > 0".into()));
    }
    let c = params.c;
    let max_iter = if params.max_iter == 0 { (100 * n).max(100_000) } else { params.max_iter };
    let mut cache = KernelCache::new(x, params.gamma, params.cache_rows);
    let mut alpha = vec![0.0; n];
    // gradient of 1/2 a'Qa - e'a
    let mut g = vec![-1.0; n];
    let in_up = |a: f64, yt: f64| (yt > 0.0 && a < c) || (yt < 0.0 && a > 0.0);
    let in_low = |a: f64, yt: f64| (yt > 0.0 && a > 0.0) || (yt < 0.0 && a < c);

    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        // i: maximal violator in I_up
        let mut gmax = f64::NEG_INFINITY;
        let mut i = usize::MAX;
        for t in 0..n {
            if in_up(alpha[t], y[t]) {
                let v = -y[t] * g[t];
                if v >= gmax {
                    gmax = v;
                    i = t;
                }
            }
        }
        // j: best second-order gain in I_low
        let mut gmax2 = f64::NEG_INFINITY;
        let mut j = usize::MAX;
        let mut best_obj = f64::INFINITY;
        if i != usize::MAX {
            cache.ensure(i);
        }
        for t in 0..n {
            if !in_low(alpha[t], y[t]) {
                continue;
            }
            let yg = y[t] * g[t];
            gmax2 = gmax2.max(yg);
            if i == usize::MAX {
                continue;
            }
            let diff = gmax + yg;
            if diff > 0.0 {
                let ki = cache.row(i);
                let quad = ki[i] + 1.0 - 2.0 * ki[t];
                let quad = if quad > 0.0 { quad } else { TAU };
                let obj = -(diff * diff) / quad;
                if obj <= best_obj {
                    best_obj = obj;
                    j = t;
                }
            }
        }
        if gmax + gmax2 < params.tol || j == usize::MAX || i == usize::MAX {
            converged = true;
            break;
        }
        iterations += 1;

        cache.ensure(j);
        let kij = cache.row(i)[j];
        let (old_i, old_j) = (alpha[i], alpha[j]);
        let quad = {
            let q = 2.0 - 2.0 * kij;
            if q > 0.0 { q } else { TAU }
        };
        if y[i] != y[j] {
            let delta = (-g[i] - g[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let delta = (g[i] - g[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        let (ki, kj) = (cache.row(i), cache.row(j));
        for t in 0..n {
            g[t] += y[t] * (y[i] * ki[t] * di + y[j] * kj[t] * dj);
        }
    }
    if !converged {
        log::warn!("SMO stopped after {iterations} iterations without reaching tolerance {}", params.tol);
    }

    // b = -y_i G_i on free vectors, else the midpoint of the feasible range
    let mut free_sum = 0.0;
    let mut free_n = 0usize;
    let mut upper = f64::NEG_INFINITY; // max over I_up of -y G
    let mut lower = f64::INFINITY; // min over I_low of -y G
    for t in 0..n {
        let v = -y[t] * g[t];
        if alpha[t] > 0.0 && alpha[t] < c {
            free_sum += v;
            free_n += 1;
        }
        if in_up(alpha[t], y[t]) {
            upper = upper.max(v);
        }
        if in_low(alpha[t], y[t]) {
            lower = lower.min(v);
        }
    }
    let bias = if free_n > 0 {
        free_sum / free_n as f64
    } else if upper.is_finite() && lower.is_finite() {
        0.5 * (upper + lower)
    } else if upper.is_finite() {
        upper
    } else {
        lower
    };
    let objective = -(0.5 * alpha.iter().zip(&g).map(|(a, gi)| a * gi).sum::<f64>() - 0.5 * alpha.iter().sum::<f64>());
    Ok(SmoSolution { alpha, bias, objective, iterations, converged })
}

/// Dual objective evaluated directly from the kernel.
pub fn dual_objective(x: &Matrix, y: &[f64], alpha: &[f64], gamma: f64) -> f64 {
    let mut quad = 0.0;
    for i in 0..x.rows() {
        for j in 0..x.rows() {
            quad += alpha[i] * alpha[j] * y[i] * y[j] * rbf(gamma, x.row(i), x.row(j));
        }
    }
    alpha.iter().sum::<f64>() - 0.5 * quad
}

/// A trained binary machine: `f(x) = sum_i coef_i k(sv_i, x) + bias`.
#[derive(Debug, Clone, PartialEq)]
pub struct BinarySvm {
    pub support: Matrix,
    /// `alpha_i * y_i`, within `[-C, C]`.
    pub coef: Vec<f64>,
    pub bias: f64,
}

impl BinarySvm {
    pub fn from_solution(x: &Matrix, y: &[f64], sol: &SmoSolution) -> Self {
        let idx: Vec<usize> = (0..x.rows()).filter(|&i| sol.alpha[i] > 0.0).collect();
        Self {
            support: x.select_rows(&idx),
            coef: idx.iter().map(|&i| sol.alpha[i] * y[i]).collect(),
            bias: sol.bias,
        }
    }

    pub fn decision(&self, gamma: f64, x: &[f64]) -> f64 {
        self.support.iter_rows().zip(&self.coef).map(|(sv, &a)| a * rbf(gamma, sv, x)).sum::<f64>() + self.bias
    }

    fn negated(&self) -> Self {
        Self { support: self.support.clone(), coef: self.coef.iter().map(|c| -c).collect(), bias: -self.bias }
    }
}

/// Largest KKT violation of a binary machine on its training set.
pub fn kkt_violation(machine: &BinarySvm, gamma: f64, c: f64, x: &Matrix, y: &[f64], alpha: &[f64]) -> f64 {
    let mut worst = 0.0f64;
    for (i, xi) in x.iter_rows().enumerate() {
        let m = y[i] * machine.decision(gamma, xi);
        let v = if alpha[i] <= 0.0 {
            (1.0 - m).max(0.0)
        } else if alpha[i] >= c {
            (m - 1.0).max(0.0)
        } else {
            (m - 1.0).abs()
        };
        worst = worst.max(v);
    }
    worst
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvmModel {
    /// One machine per class (class vs rest).
    pub machines: Vec<BinarySvm>,
    pub gamma: f64,
    pub c: f64,
}

impl SvmModel {
    pub fn dims(&self) -> Option<usize> {
        self.machines.first().map(|m| m.support.cols())
    }
}

fn subsample(labels: &[usize], classes: usize, max: usize, seed: u64) -> Vec<usize> {
    let n = labels.len();
    if max >= n {
        return (0..n).collect();
    }
    let mut r = rng::stream(seed, rng::STREAM_SVM);
    let mut keep = Vec::with_capacity(max);
    for c in 0..classes {
        let mut idx: Vec<usize> = (0..n).filter(|&i| labels[i] == c).collect();
        idx.shuffle(&mut r);
        let share = math::round((idx.len() * max) as f64 / n as f64).max(1.0) as usize;
        keep.extend_from_slice(&idx[..share.min(idx.len())]);
    }
    keep.sort_unstable();
    keep
}

/// Trains `classes` one-vs-rest machines. With two classes the second machine
/// is the exact negation of the first, since both solve the same problem.
pub fn svm_fit(features: &FeatureMatrix, labels: &[usize], classes: usize, params: &SvmParams, seed: u64) -> Result<SvmModel> {
    features.provenance.ensure_fit_safe("SVM")?;
    if features.rows() != labels.len() {
        return Err(Error::DimMismatch { expected: features.rows(), found: labels.len() });
    }
    if classes < 2 {
        return Err(Error::DegenerateLabels);
    }
    if let Some(&bad) = labels.iter().find(|&&l| l >= classes) {
        return Err(Error::LabelOutOfRange { label: bad, classes });
    }
    for c in 0..classes {
        if !labels.contains(&c) {
            return Err(Error::TooFewSamples(format!("class {c} has no training frames")));
        }
    }
    let keep = match params.max_train_frames {
        Some(m) => subsample(labels, classes, m, seed),
        None => (0..labels.len()).collect(),
    };
    let x = features.values.select_rows(&keep);
    let lab: Vec<usize> = keep.iter().map(|&i| labels[i]).collect();

    let mut machines = Vec::with_capacity(classes);
    for c in 0..classes {
        if classes == 2 && c == 1 {
            let neg = machines.first().map(BinarySvm::negated).expect("machine 0 trained");
            machines.push(neg);
            break;
        }
        let y: Vec<f64> = lab.iter().map(|&l| if l == c { 1.0 } else { -1.0 }).collect();
        let sol = smo_solve(&x, &y, params)?;
        log::debug!("svm class {c}: {} iterations, objective {:.6}", sol.iterations, sol.objective);
        machines.push(BinarySvm::from_solution(&x, &y, &sol));
    }
    Ok(SvmModel { machines, gamma: params.gamma, c: params.c })
}

/// Decision value of every class machine.
pub fn svm_frame_scores(model: &SvmModel, frame: &[f64]) -> Result<Vec<f64>> {
    let dims = model.dims().ok_or(Error::EmptyModel)?;
    if frame.len() != dims {
        return Err(Error::DimMismatch { expected: dims, found: frame.len() });
    }
    Ok(model.machines.iter().map(|m| m.decision(model.gamma, frame)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lone_support_vector_scores_kernel_identity() {
        let m = SvmModel {
            machines: vec![BinarySvm { support: Matrix::from_rows(&[[0.2, -0.4]]).unwrap(), coef: vec![1.0], bias: 0.0 }],
            gamma: 0.7,
            c: 1.0,
        };
        assert_eq!(svm_frame_scores(&m, &[0.2, -0.4]).unwrap(), vec![1.0]);
        let empty = SvmModel { machines: vec![], gamma: 1.0, c: 1.0 };
        assert_eq!(svm_frame_scores(&empty, &[0.0]), Err(Error::EmptyModel));
    }

    #[test]
    fn two_point_symmetry() {
        let x = Matrix::from_rows(&[[-1.0], [1.0]]).unwrap();
        let sol = smo_solve(&x, &[-1.0, 1.0], &SvmParams { c: 1e3, gamma: 0.5, ..Default::default() }).unwrap();
        let m = BinarySvm::from_solution(&x, &[-1.0, 1.0], &sol);
        assert!(m.decision(0.5, &[0.5]) > 0.0);
        assert!(m.decision(0.5, &[-0.5]) < 0.0);
        assert!(m.decision(0.5, &[0.0]).abs() < 1e-9);
    }

    #[test]
    fn conflicting_duplicates_stay_bounded() {
        let x = Matrix::from_rows(&[[0.0], [0.0], [1.0], [1.0]]).unwrap();
        let y = [1.0, -1.0, 1.0, -1.0];
        let p = SvmParams { c: 2.0, gamma: 1.0, ..Default::default() };
        let sol = smo_solve(&x, &y, &p).unwrap();
        assert!(sol.alpha.iter().all(|&a| (0.0..=2.0).contains(&a)));
        assert!(sol.bias.is_finite());
    }

    #[test]
    fn fit_errors() {
        let fm = FeatureMatrix::from_matrix(Matrix::zeros(2, 1));
        let p = SvmParams::default();
        assert_eq!(svm_fit(&fm, &[0, 0], 1, &p, 0), Err(Error::DegenerateLabels));
        assert!(matches!(svm_fit(&fm, &[0, 0], 2, &p, 0), Err(Error::TooFewSamples(_))));
    }
}
