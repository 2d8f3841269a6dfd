#![allow(dead_code)]

use aec_core::linalg::Matrix;
use aec_core::rng::{self, Rng};
use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};

pub fn rng(seed: u64) -> Rng {
    rng::stream(seed, 1000)
}

pub fn uniform_vec(r: &mut Rng, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|_| r.random_range(lo..hi)).collect()
}

pub fn normal(r: &mut Rng) -> f64 {
    StandardNormal.sample(r)
}

pub fn normal_matrix(r: &mut Rng, rows: usize, cols: usize, scale: f64) -> Matrix {
    let data = (0..rows * cols).map(|_| scale * normal(r)).collect();
    Matrix::from_vec(rows, cols, data).unwrap()
}

/// Two well-separated Gaussian clouds in `dims` dimensions, centred on
/// `+-offset` along every axis.
pub fn blobs(r: &mut Rng, per_class: usize, dims: usize, offset: f64) -> (Matrix, Vec<usize>) {
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for c in 0..2 {
        let centre = if c == 0 { -offset } else { offset };
        for _ in 0..per_class {
            rows.push((0..dims).map(|_| centre + normal(r)).collect::<Vec<_>>());
            labels.push(c);
        }
    }
    (Matrix::from_rows(&rows).unwrap(), labels)
}

/// `classes` Gaussian clusters with unit-variance noise around random
/// centres spaced at least `spacing` apart on a coordinate lattice.
pub fn clusters(r: &mut Rng, classes: usize, per_class: usize, dims: usize, spacing: f64) -> (Matrix, Vec<usize>) {
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for c in 0..classes {
        let mut centre = vec![0.0; dims];
        centre[c % dims] = spacing * (1 + c / dims) as f64;
        for _ in 0..per_class {
            rows.push(centre.iter().map(|m| m + 0.5 * normal(r)).collect::<Vec<_>>());
            labels.push(c);
        }
    }
    (Matrix::from_rows(&rows).unwrap(), labels)
}
