//! Framing, windowing, spectral representations, splicing and normalization
//! of 16 kHz mono segments, plus noise/reverberation augmentation.

mod augment;
mod fft;
mod norm;

pub use augment::{convolve_rir, measure_snr_db, mix_noise, synth_rir, Augmented, MixOutcome};
pub use fft::{dft_magnitude, Fft};
pub use norm::{apply_norm, fit_norm_stats, NormStats, STD_FLOOR};

use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{Error, Result};
use crate::fingerprint::Fingerprint;
use crate::linalg::Matrix;
use crate::math;

pub const SAMPLE_RATE: u32 = 16_000;

/// A mono clip at 16 kHz with samples in `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioSegment {
    samples: Vec<f64>,
    sample_rate: u32,
    pub label: Option<String>,
    pub source_path: String,
}

impl AudioSegment {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self> {
        if sample_rate != SAMPLE_RATE {
            return Err(Error::BadSampleRate(sample_rate));
        }
        if let Some(index) = samples.iter().position(|s| !s.is_finite() || s.abs() > 1.0) {
            return Err(Error::BadSample { index });
        }
        Ok(Self { samples, sample_rate, label: None, source_path: String::new() })
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn with_source_path(mut self, path: impl Into<String>) -> Self {
        self.source_path = path.into();
        self
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    /// Same metadata, new samples (clamped to `[-1, 1]` by the caller).
    pub(crate) fn with_samples(&self, samples: Vec<f64>) -> Self {
        Self {
            samples,
            sample_rate: self.sample_rate,
            label: self.label.clone(),
            source_path: self.source_path.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Window {
    Hamming,
    Rectangular,
}

impl Window {
    pub fn coefficients(self, n: usize) -> Vec<f64> {
        match self {
            Window::Rectangular => alloc::vec![1.0; n],
            Window::Hamming if n == 1 => alloc::vec![1.0],
            Window::Hamming => (0..n)
                .map(|i| 0.54 - 0.46 * math::cos(2.0 * PI * i as f64 / (n - 1) as f64))
                .collect(),
        }
    }
}

/// Per-frame representation fed to the network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum InputMode {
    /// One-sided DFT magnitude, `frame_len / 2` bins.
    DftMag,
    /// Windowed time samples, `frame_len` values.
    Waveform,
    /// Real parts of bins `0..frame_len/2`, then imaginary parts.
    DftRealImag,
    /// Magnitude, waveform, then real/imaginary, concatenated.
    Concat,
}

impl InputMode {
    pub fn dims(self, frame_len: usize) -> usize {
        match self {
            InputMode::DftMag => frame_len / 2,
            InputMode::Waveform | InputMode::DftRealImag => frame_len,
            InputMode::Concat => frame_len / 2 + 2 * frame_len,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            InputMode::DftMag => "dft_mag",
            InputMode::Waveform => "waveform",
            InputMode::DftRealImag => "dft_real_imag",
            InputMode::Concat => "concat",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrontendConfig {
    pub frame_len: usize,
    pub hop: usize,
    pub window: Window,
    pub input_mode: InputMode,
    pub splice_context: usize,
}

impl Default for FrontendConfig {
    fn default() -> Self {
        Self {
            frame_len: 1024,
            hop: 512,
            window: Window::Hamming,
            input_mode: InputMode::DftMag,
            splice_context: 3,
        }
    }
}

impl FrontendConfig {
    pub fn validate(&self) -> Result<()> {
        if self.hop == 0 || self.frame_len < self.hop {
            return Err(Error::BadConfig("need frame_len >= hop >= 1".into()));
        }
        if self.input_mode != InputMode::Waveform && !self.frame_len.is_power_of_two() {
            return Err(Error::BadFrameLength(self.frame_len));
        }
        check_context(self.splice_context)
    }

    /// Per-frame dims before splicing.
    pub fn base_dims(&self) -> usize {
        self.input_mode.dims(self.frame_len)
    }

    /// Per-frame dims after splicing.
    pub fn input_dims(&self) -> usize {
        self.base_dims() * self.splice_context
    }

    pub fn fingerprint(&self) -> Fingerprint {
        Fingerprint::builder()
            .u64(self.frame_len as u64)
            .u64(self.hop as u64)
            .bytes(match self.window {
                Window::Hamming => b"hamming",
                Window::Rectangular => b"rectangular",
            })
            .bytes(self.input_mode.name().as_bytes())
            .u64(self.splice_context as u64)
            .finish()
    }
}

fn check_context(n: usize) -> Result<()> {
    if n == 0 || n % 2 == 0 {
        Err(Error::BadContext(n))
    } else {
        Ok(())
    }
}

/// Which data partitions contributed rows to a matrix. Fitting stages refuse
/// anything carrying an evaluation tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Provenance(u8);

impl Provenance {
    pub const UNTAGGED: Self = Self(0);
    pub const SOURCE_TRAIN: Self = Self(1);
    pub const TARGET_TRAIN: Self = Self(2);
    pub const SOURCE_EVAL: Self = Self(4);
    pub const TARGET_EVAL: Self = Self(8);

    pub fn union(self, other: Self) -> Self {
        Self(self.0 | other.0)
    }

    pub fn contains(self, other: Self) -> bool {
        self.0 & other.0 == other.0 && other.0 != 0
    }

    pub fn has_eval(self) -> bool {
        self.0 & (Self::SOURCE_EVAL.0 | Self::TARGET_EVAL.0) != 0
    }

    pub fn bits(self) -> u8 {
        self.0
    }

    pub fn from_bits(bits: u8) -> Self {
        Self(bits & 0x0f)
    }

    /// Fails with `EvalLeakage` if evaluation rows are present.
    pub fn ensure_fit_safe(self, stage: &'static str) -> Result<()> {
        if self.has_eval() {
            Err(Error::EvalLeakage(stage))
        } else {
            Ok(())
        }
    }
}

/// What produced the columns of a [`FeatureMatrix`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureKind {
    Frontend { mode: InputMode, context: usize },
    Filter,
    Reduced,
}

/// Frames x dims feature block with its provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub values: Matrix,
    pub kind: FeatureKind,
    pub normalized: bool,
    pub norm_fingerprint: Option<Fingerprint>,
    pub provenance: Provenance,
}

impl FeatureMatrix {
    /// Wraps an arbitrary matrix (untagged, unnormalized, filter-kind).
    pub fn from_matrix(values: Matrix) -> Self {
        Self {
            values,
            kind: FeatureKind::Filter,
            normalized: false,
            norm_fingerprint: None,
            provenance: Provenance::UNTAGGED,
        }
    }

    pub fn with_provenance(mut self, p: Provenance) -> Self {
        self.provenance = p;
        self
    }

    pub fn rows(&self) -> usize {
        self.values.rows()
    }

    pub fn dims(&self) -> usize {
        self.values.cols()
    }

    /// Same metadata, new values.
    pub fn map_values(&self, values: Matrix, kind: FeatureKind) -> Self {
        Self {
            values,
            kind,
            normalized: self.normalized,
            norm_fingerprint: self.norm_fingerprint,
            provenance: self.provenance,
        }
    }

    /// Vertically stacks blocks, merging provenance. Kinds must agree.
    pub fn stack(parts: &[&FeatureMatrix]) -> Result<Self> {
        let first = parts.first().ok_or(Error::EmptyInput)?;
        let values = Matrix::vstack(parts.iter().map(|p| &p.values))?;
        let provenance = parts.iter().fold(Provenance::UNTAGGED, |p, m| p.union(m.provenance));
        let same_norm = parts.iter().all(|p| p.norm_fingerprint == first.norm_fingerprint);
        Ok(Self {
            values,
            kind: first.kind,
            normalized: parts.iter().all(|p| p.normalized),
            norm_fingerprint: if same_norm { first.norm_fingerprint } else { None },
            provenance,
        })
    }
}

/// Cuts a segment into windowed frames of `frame_len` with step `hop`.
pub fn frame_signal(segment: &AudioSegment, cfg: &FrontendConfig) -> Result<Matrix> {
    if segment.sample_rate() != SAMPLE_RATE {
        return Err(Error::BadSampleRate(segment.sample_rate()));
    }
    if cfg.hop == 0 || cfg.frame_len < cfg.hop {
        return Err(Error::BadConfig("need frame_len >= hop >= 1".into()));
    }
    let len = segment.len();
    if len < cfg.frame_len {
        return Err(Error::SegmentTooShort { len, frame_len: cfg.frame_len });
    }
    let n_frames = (len - cfg.frame_len) / cfg.hop + 1;
    let window = cfg.window.coefficients(cfg.frame_len);
    let mut out = Matrix::zeros(n_frames, cfg.frame_len);
    let x = segment.samples();
    for t in 0..n_frames {
        let start = t * cfg.hop;
        for ((o, &s), &w) in out.row_mut(t).iter_mut().zip(&x[start..start + cfg.frame_len]).zip(&window) {
            *o = s * w;
        }
    }
    Ok(out)
}

/// Frames a segment and converts each frame into the configured representation.
/// The result is unspliced and unnormalized.
pub fn make_frontend_features(segment: &AudioSegment, cfg: &FrontendConfig) -> Result<FeatureMatrix> {
    cfg.validate()?;
    let frames = frame_signal(segment, cfg)?;
    let dims = cfg.base_dims();
    let half = cfg.frame_len / 2;
    let fft = match cfg.input_mode {
        InputMode::Waveform => None,
        _ => Some(Fft::new(cfg.frame_len)?),
    };
    let mut out = Matrix::zeros(frames.rows(), dims);
    for (t, frame) in frames.iter_rows().enumerate() {
        let row = out.row_mut(t);
        match cfg.input_mode {
            InputMode::Waveform => row.copy_from_slice(frame),
            InputMode::DftMag => {
                let (re, im) = fft.as_ref().unwrap().half_spectrum(frame)?;
                for ((o, r), i) in row.iter_mut().zip(&re).zip(&im) {
                    *o = math::hypot(*r, *i);
                }
            }
            InputMode::DftRealImag => {
                let (re, im) = fft.as_ref().unwrap().half_spectrum(frame)?;
                row[..half].copy_from_slice(&re);
                row[half..].copy_from_slice(&im);
            }
            InputMode::Concat => {
                let (re, im) = fft.as_ref().unwrap().half_spectrum(frame)?;
                for ((o, r), i) in row[..half].iter_mut().zip(&re).zip(&im) {
                    *o = math::hypot(*r, *i);
                }
                let n = cfg.frame_len;
                row[half..half + n].copy_from_slice(frame);
                row[half + n..2 * half + n].copy_from_slice(&re);
                row[2 * half + n..].copy_from_slice(&im);
            }
        }
    }
    Ok(FeatureMatrix {
        values: out,
        kind: FeatureKind::Frontend { mode: cfg.input_mode, context: 1 },
        normalized: false,
        norm_fingerprint: None,
        provenance: Provenance::UNTAGGED,
    })
}

/// Concatenates each frame with its `(context - 1) / 2` neighbours on either
/// side. Indices past the ends repeat the first or last frame.
pub fn splice(fm: &FeatureMatrix, context: usize) -> Result<FeatureMatrix> {
    check_context(context)?;
    if fm.rows() == 0 {
        return Err(Error::EmptyInput);
    }
    let kind = match fm.kind {
        FeatureKind::Frontend { mode, context: c } => FeatureKind::Frontend { mode, context: c * context },
        k => k,
    };
    if context == 1 {
        return Ok(fm.map_values(fm.values.clone(), kind));
    }
    let (rows, dims) = (fm.rows(), fm.dims());
    let half = (context - 1) / 2;
    let mut out = Matrix::zeros(rows, dims * context);
    for t in 0..rows {
        let row = out.row_mut(t);
        for j in 0..context {
            let src = (t + j).saturating_sub(half).min(rows - 1);
            row[j * dims..(j + 1) * dims].copy_from_slice(fm.values.row(src));
        }
    }
    Ok(fm.map_values(out, kind))
}
