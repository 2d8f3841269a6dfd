use alloc::vec::Vec;

use crate::error::Result;
use crate::frontend::FeatureMatrix;
use crate::linalg::Matrix;
use crate::nn::{self, Network, TrainConfig, TrainReport};
use crate::transfer::classifier_specs;

pub const DEFAULT_HIDDEN: [usize; 3] = [300, 300, 100];

/// Sigmoid feed-forward classifier with a softmax head.
#[derive(Debug, Clone, PartialEq)]
pub struct DnnClassifier {
    pub network: Network,
}

impl DnnClassifier {
    pub fn frame_scores(&self, frames: &Matrix) -> Result<Matrix> {
        self.network.predict(frames)
    }
}

pub fn dnn_classifier_fit(
    features: &FeatureMatrix,
    labels: &[usize],
    classes: usize,
    hidden: &[usize],
    cfg: &TrainConfig,
) -> Result<(DnnClassifier, TrainReport)> {
    features.provenance.ensure_fit_safe("DNN classifier")?;
    let specs: Vec<_> = classifier_specs(features.dims(), hidden, classes);
    let net = nn::init_network(&specs, cfg.seed)?;
    let (network, report) = nn::train(&net, &features.values, labels, cfg)?;
    Ok((DnnClassifier { network }, report))
}
