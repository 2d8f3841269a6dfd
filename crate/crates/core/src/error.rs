use alloc::string::String;

use crate::fingerprint::Fingerprint;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("segment has {len} samples, shorter than one frame of {frame_len}")]
    SegmentTooShort { len: usize, frame_len: usize },
    #[error("sample rate {0} Hz is not supported (expected 16000 Hz)")]
    BadSampleRate(u32),
    #[error("frame length {0} is not a power of two >= 2")]
    BadFrameLength(usize),
    #[error("invalid configuration: {0}")]
    BadConfig(String),
    #[error("splice context {0} must be odd and >= 1")]
    BadContext(usize),
    #[error("sample {index} is not finite or outside [-1, 1]")]
    BadSample { index: usize },
    #[error("no frames to process")]
    EmptyInput,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimMismatch { expected: usize, found: usize },
    #[error("noise has zero power")]
    SilentNoise,
    #[error("signal has zero power")]
    SilentSignal,
    #[error("noise has {noise} samples but signal needs {signal}")]
    NoiseTooShort { noise: usize, signal: usize },
    #[error("room impulse response is empty")]
    EmptyRir,
    #[error("layer {layer} input dim does not match the previous layer's output dim")]
    DimChainBroken { layer: usize },
    #[error("softmax is only allowed as the final layer (layer {layer})")]
    MisplacedSoftmax { layer: usize },
    #[error("network has no softmax output layer")]
    NoSoftmaxHead,
    #[error("parameter shapes do not agree")]
    ShapeMismatch,
    #[error("too few samples: {0}")]
    TooFewSamples(String),
    #[error("labels cover fewer than two classes")]
    DegenerateLabels,
    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },
    #[error("network has no output layer to strip")]
    NoHead,
    #[error("unknown filter variant `{0}`")]
    UnknownVariant(String),
    #[error("features must be normalized with the pooled statistics first")]
    NotNormalized,
    #[error("normalization fingerprint mismatch: expected {expected}, found {found}")]
    FingerprintMismatch { expected: Fingerprint, found: Fingerprint },
    #[error("need at least {needed} rows, found {rows}")]
    TooFewRows { rows: usize, needed: usize },
    #[error("all rows are identical; nothing to decompose")]
    ZeroVariance,
    #[error("class {class} has {frames} frames, fewer than {k} mixture components; use a smaller K")]
    TooFewFrames { class: usize, frames: usize, k: usize },
    #[error("class {0} has no training frames")]
    EmptyClass(usize),
    #[error("model has no trained machines")]
    EmptyModel,
    #[error("segment has no frames")]
    EmptyFrames,
    #[error("evaluation data reached a fitting stage ({0})")]
    EvalLeakage(&'static str),
    #[error("frozen layer {0} changed during training")]
    FrozenLayerModified(usize),
}

pub type Result<T> = core::result::Result<T, Error>;
