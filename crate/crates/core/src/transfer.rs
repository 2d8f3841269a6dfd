//! Network surgery for transfer learning and the DNN filter used as a
//! non-linear feature extractor.
//!
//! A source network (SL#1-3 + softmax) is trained on the large source task.
//! Its head is stripped, the trunk frozen, and two sigmoid adaptation layers
//! (TL#1-2) plus a new softmax head are trained on the target task. The
//! filter is the five hidden layers with the head removed; features are read
//! from TL#2.

use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::fingerprint::Fingerprint;
use crate::frontend::{FeatureKind, FeatureMatrix};
use crate::nn::{self, init_network_stream, Activation, LayerSpec, Network, TrainConfig, TrainReport};
use crate::rng;

/// Hidden widths of the filter stack.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FilterArch {
    pub source_hidden: Vec<usize>,
    pub tl1: usize,
    pub tl2: usize,
}

impl Default for FilterArch {
    fn default() -> Self {
        Self { source_hidden: alloc::vec![1024, 1024, 1024], tl1: 512, tl2: 150 }
    }
}

/// Sigmoid hidden layers followed by a softmax head.
pub fn classifier_specs(input_dim: usize, hidden: &[usize], classes: usize) -> Vec<LayerSpec> {
    let mut specs = Vec::with_capacity(hidden.len() + 1);
    let mut prev = input_dim;
    for &h in hidden {
        specs.push(LayerSpec::new(prev, h, Activation::Sigmoid));
        prev = h;
    }
    specs.push(LayerSpec::new(prev, classes, Activation::Softmax));
    specs
}

/// A network trained on the source task with its class list and the
/// fingerprint of the normalization its inputs used.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceModel {
    pub network: Network,
    pub classes: Vec<String>,
    pub norm_fingerprint: Fingerprint,
}

impl SourceModel {
    pub fn new(network: Network, classes: Vec<String>, norm_fingerprint: Fingerprint) -> Result<Self> {
        if !network.has_softmax_head() {
            return Err(Error::NoSoftmaxHead);
        }
        if network.output_dim() != classes.len() {
            return Err(Error::DimMismatch { expected: network.output_dim(), found: classes.len() });
        }
        Ok(Self { network, classes, norm_fingerprint })
    }

    /// Trains the source network from scratch.
    pub fn train(
        features: &FeatureMatrix,
        labels: &[usize],
        classes: Vec<String>,
        hidden: &[usize],
        cfg: &TrainConfig,
    ) -> Result<(Self, TrainReport)> {
        features.provenance.ensure_fit_safe("source training")?;
        let fp = features.norm_fingerprint.ok_or(Error::NotNormalized)?;
        let specs = classifier_specs(features.dims(), hidden, classes.len());
        let net = nn::init_network(&specs, cfg.seed)?;
        let (net, report) = nn::train(&net, &features.values, labels, cfg)?;
        Ok((Self::new(net, classes, fp)?, report))
    }
}

/// Removes the softmax output layer, leaving the hidden trunk untouched.
pub fn strip_output(net: &Network) -> Result<Network> {
    if net.layers.len() < 2 || !net.has_softmax_head() {
        return Err(Error::NoHead);
    }
    Network::from_layers(net.layers[..net.layers.len() - 1].to_vec(), net.seed)
}

/// Freezes `trunk` and appends sigmoid TL#1, sigmoid TL#2 and a softmax head.
/// New layers are initialized from `seed`.
pub fn append_adaptation(trunk: &Network, tl1: usize, tl2: usize, classes: usize, seed: u64) -> Result<Network> {
    if tl1 == 0 || tl2 == 0 || classes == 0 {
        return Err(Error::DimChainBroken { layer: trunk.layers.len() });
    }
    if trunk.has_softmax_head() {
        return Err(Error::MisplacedSoftmax { layer: trunk.layers.len() - 1 });
    }
    let head = init_network_stream(
        &[
            LayerSpec::new(trunk.output_dim(), tl1, Activation::Sigmoid),
            LayerSpec::new(tl1, tl2, Activation::Sigmoid),
            LayerSpec::new(tl2, classes, Activation::Softmax),
        ],
        seed,
        rng::STREAM_ADAPT_INIT,
    )?;
    let mut layers = trunk.layers.clone();
    for l in &mut layers {
        l.spec.frozen = true;
    }
    layers.extend(head.layers);
    Network::from_layers(layers, seed)
}

/// Trains the adaptation layers on normalized target features. Frozen layers
/// come back bit-identical.
pub fn adapt(composite: &Network, target: &FeatureMatrix, labels: &[usize], cfg: &TrainConfig) -> Result<(Network, TrainReport)> {
    target.provenance.ensure_fit_safe("target adaptation")?;
    if target.rows() == 0 {
        return Err(Error::TooFewSamples("empty target set".into()));
    }
    if !target.normalized {
        return Err(Error::NotNormalized);
    }
    nn::train(composite, &target.values, labels, cfg)
}

/// Ablation without transfer: the full stack (source-width trunk, TL#1-2,
/// head) trained from scratch on target data only.
pub fn train_without_transfer(
    arch: &FilterArch,
    target: &FeatureMatrix,
    labels: &[usize],
    classes: usize,
    cfg: &TrainConfig,
) -> Result<(Network, TrainReport)> {
    target.provenance.ensure_fit_safe("target training")?;
    if target.rows() == 0 {
        return Err(Error::TooFewSamples("empty target set".into()));
    }
    if !target.normalized {
        return Err(Error::NotNormalized);
    }
    let mut hidden = arch.source_hidden.clone();
    hidden.extend([arch.tl1, arch.tl2]);
    let specs = classifier_specs(target.dims(), &hidden, classes);
    let net = init_network_stream(&specs, cfg.seed, rng::STREAM_SCRATCH_INIT)?;
    nn::train(&net, &target.values, labels, cfg)
}

/// How features are tapped from a trained composite.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FilterVariant {
    /// [C] head removed, last hidden layer read before its activation.
    Proposed,
    /// [A] head removed, last hidden layer read after its sigmoid.
    WithActivation,
    /// [A], alternative reading: softmax posteriors of the full network.
    WithActivationPosterior,
    /// [B] tapped like [C], but the composite was trained without transfer.
    NoTransfer,
}

impl FilterVariant {
    pub fn from_name(s: &str) -> Result<Self> {
        match s {
            "C" | "c" | "proposed" => Ok(Self::Proposed),
            "A" | "a" | "with-activation" => Ok(Self::WithActivation),
            "A-posterior" | "a-posterior" => Ok(Self::WithActivationPosterior),
            "B" | "b" | "no-transfer" => Ok(Self::NoTransfer),
            other => Err(Error::UnknownVariant(other.into())),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Proposed => "C",
            Self::WithActivation => "A",
            Self::WithActivationPosterior => "A-posterior",
            Self::NoTransfer => "B",
        }
    }
}

/// Feature extractor built from a trained composite.
#[derive(Debug, Clone, PartialEq)]
pub struct DnnFilter {
    pub network: Network,
    pub variant: FilterVariant,
    /// Inputs must have been normalized with these statistics.
    pub norm_fingerprint: Option<Fingerprint>,
}

impl DnnFilter {
    pub fn input_dim(&self) -> usize {
        self.network.input_dim()
    }

    pub fn tap_dim(&self) -> usize {
        self.network.output_dim()
    }
}

pub fn build_filter(composite: &Network, variant: FilterVariant, norm_fingerprint: Option<Fingerprint>) -> Result<DnnFilter> {
    let network = match variant {
        FilterVariant::WithActivationPosterior => {
            if !composite.has_softmax_head() {
                return Err(Error::NoSoftmaxHead);
            }
            composite.clone()
        }
        FilterVariant::WithActivation => strip_output(composite)?,
        FilterVariant::Proposed | FilterVariant::NoTransfer => {
            let mut net = strip_output(composite)?;
            net.layers.last_mut().expect("strip leaves >= 1 layer").spec.activation = Activation::Linear;
            net
        }
    };
    Ok(DnnFilter { network, variant, norm_fingerprint })
}

/// Runs the filter over every frame. Rows are independent, so the output does
/// not depend on how frames are batched.
pub fn extract(filter: &DnnFilter, fm: &FeatureMatrix) -> Result<FeatureMatrix> {
    if fm.dims() != filter.input_dim() {
        return Err(Error::DimMismatch { expected: filter.input_dim(), found: fm.dims() });
    }
    if let Some(expected) = filter.norm_fingerprint {
        match fm.norm_fingerprint {
            Some(found) if found == expected => {}
            Some(found) => return Err(Error::FingerprintMismatch { expected, found }),
            None => return Err(Error::NotNormalized),
        }
    }
    let values = filter.network.predict(&fm.values)?;
    Ok(fm.map_values(values, FeatureKind::Filter))
}
