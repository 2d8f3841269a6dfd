//! Run configuration, read from a JSON document.

use std::path::{Path, PathBuf};

use aec_core::classifiers::{Accumulation, GmmInit, GmmOptions, SvmParams};
use aec_core::frontend::{FrontendConfig, InputMode, Window};
use aec_core::nn::TrainConfig;
use aec_core::transfer::{FilterArch, FilterVariant};
use aec_core::Fingerprint;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("invalid config: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowName {
    Hamming,
    Rectangular,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputModeName {
    DftMag,
    Waveform,
    DftRealImag,
    Concat,
}

impl From<InputModeName> for InputMode {
    fn from(m: InputModeName) -> Self {
        match m {
            InputModeName::DftMag => InputMode::DftMag,
            InputModeName::Waveform => InputMode::Waveform,
            InputModeName::DftRealImag => InputMode::DftRealImag,
            InputModeName::Concat => InputMode::Concat,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FrontendSection {
    pub frame_len: usize,
    pub hop: usize,
    pub window: WindowName,
    pub input_mode: InputModeName,
    pub splice_context: usize,
}

impl Default for FrontendSection {
    fn default() -> Self {
        Self { frame_len: 1024, hop: 512, window: WindowName::Hamming, input_mode: InputModeName::DftMag, splice_context: 3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetworkSection {
    pub source_hidden: Vec<usize>,
    pub tl1: usize,
    pub tl2: usize,
}

impl Default for NetworkSection {
    fn default() -> Self {
        let a = FilterArch::default();
        Self { source_hidden: a.source_hidden, tl1: a.tl1, tl2: a.tl2 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub lr0: f64,
    pub momentum: f64,
    pub weight_decay: f64,
    pub batch_size: usize,
    pub val_ratio: f64,
    pub patience_epochs: usize,
    pub min_rel_improve: f64,
    pub n_lr_stages: usize,
    pub max_epochs_per_stage: usize,
}

impl Default for TrainSection {
    fn default() -> Self {
        let t = TrainConfig::default();
        Self {
            lr0: t.lr0,
            momentum: t.momentum,
            weight_decay: t.weight_decay,
            batch_size: t.batch_size,
            val_ratio: t.val_ratio,
            patience_epochs: t.patience_epochs,
            min_rel_improve: t.min_rel_improve,
            n_lr_stages: t.n_lr_stages,
            max_epochs_per_stage: t.max_epochs_per_stage,
        }
    }
}

impl TrainSection {
    pub fn to_core(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            lr0: self.lr0,
            momentum: self.momentum,
            weight_decay: self.weight_decay,
            batch_size: self.batch_size,
            val_ratio: self.val_ratio,
            patience_epochs: self.patience_epochs,
            min_rel_improve: self.min_rel_improve,
            n_lr_stages: self.n_lr_stages,
            max_epochs_per_stage: self.max_epochs_per_stage,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TransformSection {
    None,
    Dct {
        #[serde(default = "default_keep")]
        n_keep: usize,
    },
    Pca {
        #[serde(default = "default_keep")]
        out_dim: usize,
    },
}

fn default_keep() -> usize {
    50
}

impl Default for TransformSection {
    fn default() -> Self {
        TransformSection::Dct { n_keep: default_keep() }
    }
}

impl TransformSection {
    pub fn name(&self) -> &'static str {
        match self {
            TransformSection::None => "none",
            TransformSection::Dct { .. } => "dct",
            TransformSection::Pca { .. } => "pca",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GmmInitName {
    RandomFrames,
    Kmeans,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ClassifierSection {
    Gmm {
        #[serde(default = "default_components")]
        components: usize,
        #[serde(default = "default_gmm_iter")]
        max_iter: usize,
        #[serde(default = "default_gmm_init")]
        init: GmmInitName,
    },
    Svm {
        #[serde(default = "default_c")]
        c: f64,
        #[serde(default = "default_gamma")]
        gamma: f64,
        #[serde(default)]
        max_train_frames: Option<usize>,
    },
    Dnn {
        #[serde(default = "default_dnn_hidden")]
        hidden: Vec<usize>,
        #[serde(default)]
        training: TrainSection,
    },
}

fn default_components() -> usize {
    GmmOptions::default().components
}
fn default_gmm_iter() -> usize {
    GmmOptions::default().max_iter
}
fn default_gmm_init() -> GmmInitName {
    GmmInitName::RandomFrames
}
fn default_c() -> f64 {
    SvmParams::default().c
}
fn default_gamma() -> f64 {
    SvmParams::default().gamma
}
fn default_dnn_hidden() -> Vec<usize> {
    aec_core::classifiers::DEFAULT_HIDDEN.to_vec()
}

impl Default for ClassifierSection {
    fn default() -> Self {
        ClassifierSection::Svm { c: default_c(), gamma: default_gamma(), max_train_frames: None }
    }
}

impl ClassifierSection {
    pub fn name(&self) -> &'static str {
        match self {
            ClassifierSection::Gmm { .. } => "gmm",
            ClassifierSection::Svm { .. } => "svm",
            ClassifierSection::Dnn { .. } => "dnn",
        }
    }

    pub fn gmm_options(&self) -> Option<GmmOptions> {
        match *self {
            ClassifierSection::Gmm { components, max_iter, init } => Some(GmmOptions {
                components,
                max_iter,
                init: match init {
                    GmmInitName::RandomFrames => GmmInit::RandomFrames,
                    GmmInitName::Kmeans => GmmInit::KMeans,
                },
                ..Default::default()
            }),
            _ => None,
        }
    }

    pub fn svm_params(&self) -> Option<SvmParams> {
        match *self {
            ClassifierSection::Svm { c, gamma, max_train_frames } => {
                Some(SvmParams { c, gamma, max_train_frames, ..Default::default() })
            }
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum AccumulationName {
    #[default]
    LogSum,
    ProbabilitySum,
}

impl From<AccumulationName> for Accumulation {
    fn from(a: AccumulationName) -> Self {
        match a {
            AccumulationName::LogSum => Accumulation::LogSum,
            AccumulationName::ProbabilitySum => Accumulation::ProbabilitySum,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PrepareSection {
    /// Per-class audio budget for the source domain.
    pub source_seconds: f64,
    pub rt60_s: f64,
    pub rir_length_s: f64,
    pub snrs_db: Vec<f64>,
    /// Evaluation segments longer than this are rejected.
    pub eval_segment_s: f64,
}

impl Default for PrepareSection {
    fn default() -> Self {
        Self { source_seconds: 800.0, rt60_s: 0.7, rir_length_s: 1.0, snrs_db: vec![5.0, 10.0, 15.0], eval_segment_s: 3.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CvSection {
    pub k: usize,
    pub svm_c: Vec<f64>,
    pub svm_gamma: Vec<f64>,
    pub gmm_components: Vec<usize>,
}

impl Default for CvSection {
    fn default() -> Self {
        Self { k: 5, svm_c: vec![1.0, 10.0, 100.0], svm_gamma: vec![0.005, 0.02, 0.1], gmm_components: vec![32, 128, 512] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    #[serde(default)]
    pub frontend: FrontendSection,
    #[serde(default)]
    pub network: NetworkSection,
    #[serde(default)]
    pub source_training: TrainSection,
    #[serde(default)]
    pub adaptation_training: TrainSection,
    #[serde(default)]
    pub transform: TransformSection,
    #[serde(default)]
    pub classifier: ClassifierSection,
    #[serde(default = "default_variant")]
    pub variant: String,
    #[serde(default)]
    pub accumulation: AccumulationName,
    #[serde(default)]
    pub prepare: PrepareSection,
    #[serde(default)]
    pub cv: CvSection,
    /// Where artifacts go; the `--out` flag overrides it.
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    /// Worker threads for per-segment work. Results do not depend on it.
    #[serde(default)]
    pub workers: Option<usize>,
}

fn default_variant() -> String {
    "C".into()
}

/// Offsets mixed into the run seed so stages draw unrelated streams.
pub mod seed_offset {
    pub const SOURCE: u64 = 0;
    pub const ADAPT: u64 = 1;
    pub const CLASSIFIER: u64 = 2;
    pub const PREPARE: u64 = 3;
    pub const CV: u64 = 4;
}

impl RunConfig {
    pub fn with_seed(seed: u64) -> Self {
        serde_json::from_value(serde_json::json!({ "seed": seed })).expect("defaults are valid")
    }

    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.into(), source })?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn stage_seed(&self, offset: u64) -> u64 {
        self.seed.wrapping_add(offset)
    }

    pub fn frontend(&self) -> FrontendConfig {
        let f = &self.frontend;
        FrontendConfig {
            frame_len: f.frame_len,
            hop: f.hop,
            window: match f.window {
                WindowName::Hamming => Window::Hamming,
                WindowName::Rectangular => Window::Rectangular,
            },
            input_mode: f.input_mode.into(),
            splice_context: f.splice_context,
        }
    }

    pub fn arch(&self) -> FilterArch {
        FilterArch { source_hidden: self.network.source_hidden.clone(), tl1: self.network.tl1, tl2: self.network.tl2 }
    }

    pub fn variant(&self) -> Result<FilterVariant, ConfigError> {
        FilterVariant::from_name(&self.variant).map_err(|_| ConfigError::Invalid(format!("unknown filter variant {:?}", self.variant)))
    }

    /// Width of the features the filter emits, when known without data.
    pub fn tap_dim(&self) -> Option<usize> {
        match self.variant().ok()? {
            FilterVariant::WithActivationPosterior => None,
            _ => Some(self.network.tl2),
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        self.frontend().validate().map_err(|e| ConfigError::Invalid(format!("frontend: {e}")))?;
        if self.network.source_hidden.is_empty() || self.network.source_hidden.contains(&0) {
            return bad("network.source_hidden needs at least one non-zero width".into());
        }
        if self.network.tl1 == 0 || self.network.tl2 == 0 {
            return bad("network.tl1 and network.tl2 must be non-zero".into());
        }
        self.variant()?;
        for (name, t) in [("source_training", &self.source_training), ("adaptation_training", &self.adaptation_training)] {
            t.to_core(0).validate().map_err(|e| ConfigError::Invalid(format!("{name}: {e}")))?;
        }
        let keep = match self.transform {
            TransformSection::None => None,
            TransformSection::Dct { n_keep } => Some(n_keep),
            TransformSection::Pca { out_dim } => Some(out_dim),
        };
        if let Some(k) = keep {
            if k == 0 {
                return bad("transform keeps zero dimensions".into());
            }
            if let Some(tap) = self.tap_dim() {
                if k > tap {
                    return bad(format!("transform keeps {k} dimensions but the filter emits {tap}"));
                }
            }
        }
        match &self.classifier {
            ClassifierSection::Gmm { components, .. } if *components == 0 => return bad("gmm needs components > 0".into()),
            ClassifierSection::Svm { c, gamma, .. } if !(*c > 0.0 && *gamma > 0.0) => {
                return bad("svm needs c > 0 and gamma > 0".into())
            }
            ClassifierSection::Dnn { hidden, training } => {
                if hidden.contains(&0) {
                    return bad("dnn hidden widths must be non-zero".into());
                }
                training.to_core(0).validate().map_err(|e| ConfigError::Invalid(format!("classifier.training: {e}")))?;
            }
            _ => {}
        }
        let p = &self.prepare;
        if !(p.source_seconds > 0.0 && p.rt60_s > 0.0 && p.rir_length_s > 0.0 && p.eval_segment_s > 0.0) {
            return bad("prepare durations must be positive".into());
        }
        if self.cv.k < 2 {
            return bad("cv.k must be at least 2".into());
        }
        if self.workers == Some(0) {
            return bad("workers must be at least 1".into());
        }
        Ok(())
    }

    /// Hash of everything that affects results. Output location and worker
    /// count are excluded.
    pub fn fingerprint(&self) -> Fingerprint {
        let mut c = self.clone();
        c.output_dir = None;
        c.workers = None;
        let text = serde_json::to_string(&c).expect("config serializes");
        Fingerprint::builder().bytes(b"run-config").bytes(text.as_bytes()).finish()
    }
}
