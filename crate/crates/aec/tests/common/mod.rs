#![allow(dead_code)]

use std::path::{Path, PathBuf};

use aec::audio;
use aec::config::{seed_offset, RunConfig};
use aec::manifest::{load_manifest, save_manifest, Manifest};
use aec::prepare::{prepare_conditions, prepare_source, NoiseSource, RirChoice};
use aec::synth::{generate, SynthSpec};

/// Small widths and short schedules so the synthetic run finishes quickly.
pub fn fast_config(seed: u64, variant: &str) -> RunConfig {
    let text = format!(
        r#"{{
        "seed": {seed},
        "variant": "{variant}",
        "network": {{ "source_hidden": [64, 64, 64], "tl1": 64, "tl2": 150 }},
        "source_training": {{ "lr0": 0.05, "batch_size": 64, "max_epochs_per_stage": 8 }},
        "adaptation_training": {{ "lr0": 0.05, "batch_size": 64, "max_epochs_per_stage": 8 }},
        "transform": {{ "kind": "dct", "n_keep": 50 }},
        "classifier": {{ "kind": "svm", "c": 10, "gamma": 0.02, "max_train_frames": 2000 }},
        "prepare": {{ "source_seconds": 24 }}
    }}"#
    );
    RunConfig::from_json(&text).unwrap()
}

pub struct Prepared {
    pub manifest: Manifest,
    pub manifest_path: PathBuf,
    pub noises: Vec<NoiseSource>,
}

/// Synthetic corpus with the source domain budgeted and the eval segments
/// mixed with both background noises at every configured SNR.
pub fn prepare_synth(dir: &Path, cfg: &RunConfig) -> Prepared {
    let ds = generate(&SynthSpec { seed: cfg.seed, ..Default::default() }, &dir.join("synth")).unwrap();
    let raw = load_manifest(&ds.manifest_path).unwrap();
    let seed = cfg.stage_seed(seed_offset::PREPARE);
    let rir = RirChoice::Synthetic { rt60_s: cfg.prepare.rt60_s, length_s: cfg.prepare.rir_length_s };
    let (budgeted, _) = prepare_source(&raw, &dir.join("source"), cfg.prepare.source_seconds, &rir, seed).unwrap();
    let noises: Vec<NoiseSource> = ds
        .noises
        .iter()
        .map(|(name, path)| NoiseSource { name: name.clone(), audio: audio::read(path).unwrap() })
        .collect();
    let (manifest, _) = prepare_conditions(&budgeted, &noises, &cfg.prepare.snrs_db, &dir.join("conditions"), seed).unwrap();
    let manifest_path = dir.join("manifest.csv");
    save_manifest(&manifest_path, &manifest).unwrap();
    Prepared { manifest: load_manifest(&manifest_path).unwrap(), manifest_path, noises }
}

/// A few one-second clips per class, clean only. For stage-level tests.
pub fn small_synth(dir: &Path, seed: u64) -> Manifest {
    let spec = SynthSpec {
        source_classes: 3,
        target_classes: 2,
        source_per_class: 3,
        target_train_per_class: 6,
        target_eval_per_class: 3,
        segment_s: 1.0,
        noise_s: 1.5,
        seed,
    };
    let ds = generate(&spec, dir).unwrap();
    load_manifest(&ds.manifest_path).unwrap()
}

pub fn small_config(seed: u64, variant: &str) -> RunConfig {
    let mut cfg = fast_config(seed, variant);
    cfg.network.source_hidden = vec![16, 16];
    cfg.network.tl1 = 16;
    cfg.network.tl2 = 24;
    cfg.transform = aec::config::TransformSection::Dct { n_keep: 12 };
    cfg.source_training.max_epochs_per_stage = 3;
    cfg.adaptation_training.max_epochs_per_stage = 3;
    cfg.cv.k = 3;
    cfg.validate().unwrap();
    cfg
}
