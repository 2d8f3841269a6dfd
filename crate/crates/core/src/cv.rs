//! Stratified k-fold cross-validation over a hyperparameter grid.

use alloc::format;
use alloc::vec::Vec;

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::rng;

/// Assigns each sample to one of `k` folds. Within each class, samples are
/// shuffled and dealt round-robin, continuing where the previous class left
/// off so fold sizes differ by at most one.
pub fn stratified_folds(labels: &[usize], k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k < 2 {
        return Err(Error::BadConfig("cross-validation needs k >= 2".into()));
    }
    let classes = labels.iter().copied().max().map_or(0, |m| m + 1);
    let mut r = rng::stream(seed, rng::STREAM_FOLDS);
    let mut folds: Vec<Vec<usize>> = (0..k).map(|_| Vec::new()).collect();
    let mut next = 0;
    for c in 0..classes {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == c).collect();
        if idx.is_empty() {
            continue;
        }
        if idx.len() < k {
            return Err(Error::TooFewSamples(format!("class {c} has {} samples, fewer than {k} folds", idx.len())));
        }
        idx.shuffle(&mut r);
        for i in idx {
            folds[next].push(i);
            next = (next + 1) % k;
        }
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    Ok(folds)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvResult<P> {
    pub best_index: usize,
    pub best: P,
    /// `fold_scores[g][f]`: score of grid point `g` on fold `f`.
    pub fold_scores: Vec<Vec<f64>>,
    pub mean_scores: Vec<f64>,
}

/// Scores every grid point on every fold with `evaluate(params, train, test)`
/// and picks the highest mean; ties go to the earliest grid point.
pub fn cross_validate<P: Clone, F>(labels: &[usize], grid: &[P], k: usize, seed: u64, mut evaluate: F) -> Result<CvResult<P>>
where
    F: FnMut(&P, &[usize], &[usize]) -> Result<f64>,
{
    if grid.is_empty() {
        return Err(Error::BadConfig("empty hyperparameter grid".into()));
    }
    let folds = stratified_folds(labels, k, seed)?;
    let mut fold_scores = Vec::with_capacity(grid.len());
    let mut mean_scores = Vec::with_capacity(grid.len());
    for p in grid {
        let mut scores = Vec::with_capacity(k);
        for f in 0..k {
            let train: Vec<usize> = folds.iter().enumerate().filter(|(g, _)| *g != f).flat_map(|(_, v)| v.iter().copied()).collect();
            let mut train = train;
            train.sort_unstable();
            scores.push(evaluate(p, &train, &folds[f])?);
        }
        mean_scores.push(scores.iter().sum::<f64>() / k as f64);
        fold_scores.push(scores);
    }
    let mut best_index = 0;
    for (i, &m) in mean_scores.iter().enumerate() {
        if m > mean_scores[best_index] {
            best_index = i;
        }
    }
    Ok(CvResult { best_index, best: grid[best_index].clone(), fold_scores, mean_scores })
}
