//! Dataset preparation: per-class duration budgeting of the source domain
//! and noisy evaluation conditions for the target domain.

use std::path::{Path, PathBuf};

use aec_core::frontend::{convolve_rir, measure_snr_db, mix_noise, synth_rir, AudioSegment, SAMPLE_RATE};
use aec_core::rng;
use log::{info, warn};
use rand::seq::SliceRandom;
use rand::Rng as _;

use crate::audio::{self, derive_seed, sanitize};
use crate::error::{Error, Result};
use crate::manifest::{Domain, Manifest, ManifestEntry, Split};

/// Largest allowed gap between requested and re-measured SNR.
pub const SNR_TOLERANCE_DB: f64 = 0.01;

/// Room response used to lengthen short source classes.
#[derive(Debug, Clone, PartialEq)]
pub enum RirChoice {
    /// Exponentially decaying noise, a fresh draw for every copy.
    Synthetic { rt60_s: f64, length_s: f64 },
    /// One measured response for every copy.
    Given(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassBudget {
    pub label: String,
    pub original_samples: usize,
    pub kept_samples: usize,
    pub augmented_samples: usize,
    pub files: usize,
}

/// Brings every source class to roughly `budget_s` seconds. Classes over
/// budget keep whole files in a seeded random order plus one random
/// contiguous cut of the last file; classes under budget keep everything and
/// append reverberated copies until the budget is met. Target entries pass
/// through unchanged.
pub fn prepare_source(
    manifest: &Manifest,
    out_dir: &Path,
    budget_s: f64,
    rir: &RirChoice,
    seed: u64,
) -> Result<(Manifest, Vec<ClassBudget>)> {
    let classes = manifest.classes(Domain::Source);
    if classes.is_empty() {
        return Err(Error::MissingData("source-domain"));
    }
    let budget = (budget_s * f64::from(SAMPLE_RATE)).round() as usize;
    let min_piece = 1024;
    let mut out = Manifest::default();
    let mut summary = Vec::with_capacity(classes.len());
    for (ci, label) in classes.iter().enumerate() {
        let entries: Vec<&ManifestEntry> = manifest.entries.iter().filter(|e| e.domain == Domain::Source && &e.label == label).collect();
        let audio: Vec<AudioSegment> = entries.iter().map(|e| audio::read(&e.path)).collect::<Result<_>>()?;
        let total: usize = audio.iter().map(AudioSegment::len).sum();
        if total == 0 {
            return Err(Error::EmptyClass(label.clone()));
        }
        let mut r = rng::stream(derive_seed(seed, &[ci as u64]), 100);
        let mut order: Vec<usize> = (0..audio.len()).collect();
        order.shuffle(&mut r);
        let dir = out_dir.join(sanitize(label));
        let mut written: Vec<(AudioSegment, &'static str)> = Vec::new();
        let kept;
        let mut augmented = 0;
        if total >= budget {
            let mut remaining = budget;
            for &i in &order {
                let seg = &audio[i];
                if seg.len() <= remaining {
                    remaining -= seg.len();
                    written.push((seg.clone(), "clean"));
                } else {
                    if remaining >= min_piece {
                        let start = r.random_range(0..=seg.len() - remaining);
                        let cut = AudioSegment::new(seg.samples()[start..start + remaining].to_vec(), SAMPLE_RATE)?;
                        written.push((cut, "clean"));
                        remaining = 0;
                    }
                    break;
                }
            }
            kept = budget - remaining;
        } else {
            for &i in &order {
                written.push((audio[i].clone(), "clean"));
            }
            kept = total;
            let mut copy = 0u64;
            'fill: loop {
                for &i in &order {
                    if kept + augmented >= budget {
                        break 'fill;
                    }
                    let h = match rir {
                        RirChoice::Synthetic { rt60_s, length_s } => {
                            synth_rir(*rt60_s, *length_s, SAMPLE_RATE, derive_seed(seed, &[ci as u64, copy]))?
                        }
                        RirChoice::Given(h) => h.clone(),
                    };
                    let rev = convolve_rir(&audio[i], &h)?;
                    augmented += rev.segment.len();
                    written.push((rev.segment, "reverb"));
                    copy += 1;
                }
            }
        }
        for (k, (seg, cond)) in written.iter().enumerate() {
            let path = dir.join(format!("{k:05}.wav"));
            audio::write(&path, seg)?;
            out.entries.push(ManifestEntry {
                path,
                label: label.clone(),
                domain: Domain::Source,
                split: Split::Train,
                condition: (*cond).into(),
            });
        }
        info!(
            "source class {label}: {:.1} s available, {:.1} s kept, {:.1} s reverberated",
            total as f64 / f64::from(SAMPLE_RATE),
            kept as f64 / f64::from(SAMPLE_RATE),
            augmented as f64 / f64::from(SAMPLE_RATE)
        );
        summary.push(ClassBudget {
            label: label.clone(),
            original_samples: total,
            kept_samples: kept,
            augmented_samples: augmented,
            files: written.len(),
        });
    }
    out.entries.extend(manifest.entries.iter().filter(|e| e.domain == Domain::Target).cloned());
    Ok((out, summary))
}

#[derive(Debug, Clone)]
pub struct NoiseSource {
    pub name: String,
    pub audio: AudioSegment,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SnrCheck {
    pub path: PathBuf,
    pub condition: String,
    pub requested_db: f64,
    pub measured_db: f64,
    pub clipped: usize,
}

/// Condition tag for one noise at one SNR, e.g. `office_5dB`.
pub fn condition_tag(noise: &str, snr_db: f64) -> String {
    if snr_db.fract() == 0.0 {
        format!("{}_{}dB", sanitize(noise), snr_db as i64)
    } else {
        format!("{}_{snr_db}dB", sanitize(noise))
    }
}

/// Adds every noise at every SNR to each clean target-eval segment, writes
/// the mixtures and appends them to the manifest. The written files are read
/// back and their SNR re-measured against the clean originals.
pub fn prepare_conditions(
    manifest: &Manifest,
    noises: &[NoiseSource],
    snrs_db: &[f64],
    out_dir: &Path,
    seed: u64,
) -> Result<(Manifest, Vec<SnrCheck>)> {
    let clean: Vec<&ManifestEntry> = manifest.select(Domain::Target, Split::Eval).filter(|e| e.condition == "clean").collect();
    if clean.is_empty() && !noises.is_empty() {
        return Err(Error::MissingData("clean target-eval"));
    }
    let mut out = manifest.clone();
    let mut checks = Vec::new();
    let signals: Vec<AudioSegment> = clean.iter().map(|e| audio::read(&e.path)).collect::<Result<_>>()?;
    for (ni, noise) in noises.iter().enumerate() {
        for (si, &snr) in snrs_db.iter().enumerate() {
            let tag = condition_tag(&noise.name, snr);
            for (ei, (entry, signal)) in clean.iter().zip(&signals).enumerate() {
                let mix = mix_noise(signal, &noise.audio, snr, derive_seed(seed, &[ni as u64, si as u64, ei as u64]))?;
                let stem = entry.path.file_stem().map_or_else(|| format!("{ei}"), |s| s.to_string_lossy().into_owned());
                let path = out_dir.join(&tag).join(sanitize(&entry.label)).join(format!("{ei:05}_{stem}.wav"));
                audio::write(&path, &mix.segment)?;
                let back = audio::read(&path)?;
                let measured = measure_snr_db(signal.samples(), back.samples());
                if mix.clipped > 0 {
                    warn!("{}: {} samples clipped, SNR check skipped", path.display(), mix.clipped);
                } else if (measured - snr).abs() > SNR_TOLERANCE_DB {
                    return Err(Error::SnrCheck { path, requested: snr, measured });
                }
                checks.push(SnrCheck { path: path.clone(), condition: tag.clone(), requested_db: snr, measured_db: measured, clipped: mix.clipped });
                out.entries.push(ManifestEntry { path, condition: tag.clone(), ..(*entry).clone() });
            }
        }
    }
    Ok((out, checks))
}
