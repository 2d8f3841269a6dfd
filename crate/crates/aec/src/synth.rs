//! Bundled synthetic dataset: classes of band-pass filtered Gaussian noise
//! with distinct resonances, plus two coloured background noises.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use aec_core::frontend::{AudioSegment, SAMPLE_RATE};
use aec_core::rng;
use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};

use crate::audio::{self, derive_seed};
use crate::error::Result;
use crate::manifest::{save_manifest, Domain, Manifest, ManifestEntry, Split};

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub source_classes: usize,
    pub target_classes: usize,
    /// Nominal source segments per class; actual counts vary by one either
    /// way so budgeting has classes to cut and classes to extend.
    pub source_per_class: usize,
    pub target_train_per_class: usize,
    pub target_eval_per_class: usize,
    pub segment_s: f64,
    pub noise_s: f64,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            source_classes: 8,
            target_classes: 4,
            source_per_class: 8,
            target_train_per_class: 20,
            target_eval_per_class: 10,
            segment_s: 3.0,
            noise_s: 4.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SynthDataset {
    pub manifest_path: PathBuf,
    pub noises: Vec<(String, PathBuf)>,
}

/// Two resonances per class. Centres are log-spaced; source and target
/// classes interleave so neither domain covers the band alone.
fn class_resonances(index: usize, total: usize) -> (f64, f64) {
    let (lo, hi): (f64, f64) = (250.0, 6000.0);
    let f = |k: usize| lo * (hi / lo).powf(k as f64 / (total - 1).max(1) as f64);
    (f(index), f((index * 5 + 3) % total))
}

struct Biquad {
    b: [f64; 3],
    a: [f64; 2],
}

impl Biquad {
    fn bandpass(centre_hz: f64, q: f64) -> Self {
        let w0 = 2.0 * PI * centre_hz / f64::from(SAMPLE_RATE);
        let alpha = w0.sin() / (2.0 * q);
        let a0 = 1.0 + alpha;
        Self { b: [alpha / a0, 0.0, -alpha / a0], a: [-2.0 * w0.cos() / a0, (1.0 - alpha) / a0] }
    }

    fn lowpass(cut_hz: f64) -> Self {
        let w0 = 2.0 * PI * cut_hz / f64::from(SAMPLE_RATE);
        let alpha = w0.sin() / 2f64.sqrt();
        let a0 = 1.0 + alpha;
        let c = (1.0 - w0.cos()) / a0;
        Self { b: [c / 2.0, c, c / 2.0], a: [-2.0 * w0.cos() / a0, (1.0 - alpha) / a0] }
    }

    fn run(&self, x: &[f64]) -> Vec<f64> {
        let (mut x1, mut x2, mut y1, mut y2) = (0.0, 0.0, 0.0, 0.0);
        x.iter()
            .map(|&v| {
                let y = self.b[0] * v + self.b[1] * x1 + self.b[2] * x2 - self.a[0] * y1 - self.a[1] * y2;
                (x2, x1, y2, y1) = (x1, v, y1, y);
                y
            })
            .collect()
    }
}

fn scale_to_rms(mut x: Vec<f64>, rms: f64) -> Vec<f64> {
    let cur = (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt();
    let g = if cur > 0.0 { rms / cur } else { 0.0 };
    for v in &mut x {
        *v = (*v * g).clamp(-1.0, 1.0);
    }
    x
}

fn white(r: &mut rng::Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| StandardNormal.sample(r)).collect()
}

/// One segment of class `index` out of `total` resonance slots.
pub fn class_segment(index: usize, total: usize, samples: usize, seed: u64) -> AudioSegment {
    let mut r = rng::stream(seed, 200);
    let (f1, f2) = class_resonances(index, total);
    let jitter = 1.0 + r.random_range(-0.03..0.03);
    let x = white(&mut r, samples);
    let a = Biquad::bandpass(f1 * jitter, 6.0).run(&x);
    let b = Biquad::bandpass(f2 * jitter, 6.0).run(&x);
    let mix: Vec<f64> = a.iter().zip(&b).map(|(p, q)| p + 0.5 * q).collect();
    let rms = r.random_range(0.06..0.12);
    AudioSegment::new(scale_to_rms(mix, rms), SAMPLE_RATE).expect("bounded samples")
}

/// Background noise: `0` is low-passed (a rumbling room), anything else is
/// white noise shaped by a broad mid-band resonance.
pub fn background_noise(kind: usize, samples: usize, seed: u64) -> AudioSegment {
    let mut r = rng::stream(seed, 201);
    let x = white(&mut r, samples);
    let y = if kind == 0 { Biquad::lowpass(400.0).run(&x) } else { Biquad::bandpass(1500.0, 0.7).run(&x) };
    AudioSegment::new(scale_to_rms(y, 0.08), SAMPLE_RATE).expect("bounded samples")
}

/// Writes the dataset under `dir` and returns the manifest location.
pub fn generate(spec: &SynthSpec, dir: &Path) -> Result<SynthDataset> {
    let seg_len = (spec.segment_s * f64::from(SAMPLE_RATE)).round() as usize;
    let total = spec.source_classes + spec.target_classes;
    // every third slot goes to the target domain
    let mut source_slots = Vec::new();
    let mut target_slots = Vec::new();
    for k in 0..total {
        if k % 3 == 1 && target_slots.len() < spec.target_classes || source_slots.len() == spec.source_classes {
            target_slots.push(k);
        } else {
            source_slots.push(k);
        }
    }
    let mut m = Manifest::default();
    let mut push = |path: PathBuf, label: String, domain, split| {
        m.entries.push(ManifestEntry { path, label, domain, split, condition: "clean".into() });
    };
    for (c, &slot) in source_slots.iter().enumerate() {
        let label = format!("src{c:02}");
        let count = (spec.source_per_class + c % 3).saturating_sub(1).max(1);
        for i in 0..count {
            let seg = class_segment(slot, total, seg_len, derive_seed(spec.seed, &[0, c as u64, i as u64]));
            let path = dir.join("source").join(&label).join(format!("{i:03}.wav"));
            audio::write(&path, &seg)?;
            push(path, label.clone(), Domain::Source, Split::Train);
        }
    }
    for (c, &slot) in target_slots.iter().enumerate() {
        let label = format!("event{c:02}");
        for (split, n, tag) in [(Split::Train, spec.target_train_per_class, 1), (Split::Eval, spec.target_eval_per_class, 2)] {
            for i in 0..n {
                let seg = class_segment(slot, total, seg_len, derive_seed(spec.seed, &[tag, c as u64, i as u64]));
                let sub = if split == Split::Train { "train" } else { "eval" };
                let path = dir.join("target").join(sub).join(&label).join(format!("{i:03}.wav"));
                audio::write(&path, &seg)?;
                push(path, label.clone(), Domain::Target, split);
            }
        }
    }
    let noise_len = (spec.noise_s * f64::from(SAMPLE_RATE)).round() as usize;
    let mut noises = Vec::new();
    for (k, name) in ["living", "office"].into_iter().enumerate() {
        let path = dir.join("noise").join(format!("{name}.wav"));
        audio::write(&path, &background_noise(k, noise_len, derive_seed(spec.seed, &[3, k as u64])))?;
        noises.push((name.to_string(), path));
    }
    let manifest_path = dir.join("manifest.csv");
    save_manifest(&manifest_path, &m)?;
    Ok(SynthDataset { manifest_path, noises })
}
