//! Stage functions and the end-to-end run.
//!
//! Order: frontend, normalization statistics (source plus target train),
//! source training, surgery and adaptation, filter tap, transform fit,
//! classifier fit, per-condition evaluation. Each stage is a plain function
//! so the CLI can run them one at a time from artifacts on disk.

use std::path::{Path, PathBuf};
use std::time::Instant;

use aec_core::classifiers::{dnn_classifier_fit, gmm_fit, svm_fit, ClassifierModel};
use aec_core::cv::cross_validate;
use aec_core::frontend::{
    apply_norm, fit_norm_stats, make_frontend_features, splice, AudioSegment, FeatureMatrix, NormStats, Provenance,
    SAMPLE_RATE,
};
use aec_core::nn::{Network, TrainReport};
use aec_core::transfer::{self, build_filter, extract, strip_output, DnnFilter, FilterVariant, SourceModel};
use aec_core::transforms::{pca_fit, DctSpec, TransformModel};
use log::{info, warn};
use serde::{Deserialize, Serialize};

use crate::audio::{self, par_map};
use crate::config::{seed_offset, ClassifierSection, RunConfig, TransformSection};
use crate::error::{Error, Result, Stage, StageExt};
use crate::features::{FeatureItem, FeatureSet};
use crate::manifest::{Domain, Manifest, Split};
use crate::model_io::{self, Artifact, Stamp};

#[derive(Debug, Clone)]
pub struct Segment {
    pub path: PathBuf,
    pub label: usize,
    pub split: Split,
    pub condition: String,
    pub audio: AudioSegment,
}

/// Audio of a manifest, grouped by role. Classes are sorted label names.
#[derive(Debug, Clone, Default)]
pub struct Dataset {
    pub source_classes: Vec<String>,
    pub target_classes: Vec<String>,
    pub source: Vec<Segment>,
    /// Target train followed by target eval, each in manifest order.
    pub target: Vec<Segment>,
}

/// Loads audio for the target domain and, when `with_source` is set, the
/// source domain. Evaluation segments longer than the configured length are
/// rejected.
pub fn load_dataset(manifest: &Manifest, cfg: &RunConfig, with_source: bool, workers: usize) -> Result<Dataset> {
    let source_classes = manifest.classes(Domain::Source);
    let target_classes = manifest.classes(Domain::Target);
    if target_classes.is_empty() {
        return Err(Error::MissingData("target-domain"));
    }
    if manifest.select(Domain::Target, Split::Train).next().is_none() {
        return Err(Error::MissingData("target train"));
    }
    if with_source && source_classes.is_empty() {
        return Err(Error::MissingData("source-domain"));
    }
    let mut wanted: Vec<(&crate::manifest::ManifestEntry, usize)> = Vec::new();
    if with_source {
        for e in manifest.select(Domain::Source, Split::Train).chain(manifest.select(Domain::Source, Split::Eval)) {
            wanted.push((e, source_classes.binary_search(&e.label).expect("label listed")));
        }
    }
    let n_source = wanted.len();
    for e in manifest.select(Domain::Target, Split::Train).chain(manifest.select(Domain::Target, Split::Eval)) {
        wanted.push((e, target_classes.binary_search(&e.label).expect("label listed")));
    }
    let limit = cfg.prepare.eval_segment_s;
    let max_len = (limit * f64::from(SAMPLE_RATE)).round() as usize;
    let loaded = par_map(&wanted, workers, |(e, label)| -> Result<Segment> {
        let audio = audio::read(&e.path)?;
        if e.domain == Domain::Target && e.split == Split::Eval && audio.len() > max_len {
            return Err(Error::SegmentTooLong { path: e.path.clone(), seconds: audio.duration_s(), limit });
        }
        Ok(Segment { path: e.path.clone(), label: *label, split: e.split, condition: e.condition.clone(), audio })
    });
    let mut segs = loaded.into_iter().collect::<Result<Vec<_>>>()?;
    let target = segs.split_off(n_source);
    Ok(Dataset { source_classes, target_classes, source: segs, target })
}

fn provenance(domain: Domain, split: Split) -> Provenance {
    match (domain, split) {
        (Domain::Source, Split::Train) => Provenance::SOURCE_TRAIN,
        (Domain::Source, Split::Eval) => Provenance::SOURCE_EVAL,
        (Domain::Target, Split::Train) => Provenance::TARGET_TRAIN,
        (Domain::Target, Split::Eval) => Provenance::TARGET_EVAL,
    }
}

/// Normalized, spliced frontend features.
#[derive(Debug, Clone)]
pub struct FrontendFeatures {
    pub norm: NormStats,
    /// `(label, features)` per source segment.
    pub source: Vec<(usize, FeatureMatrix)>,
    pub target: FeatureSet,
}

fn raw_features(segs: &[Segment], domain: Domain, cfg: &RunConfig, workers: usize) -> Result<Vec<FeatureMatrix>> {
    let fcfg = cfg.frontend();
    par_map(segs, workers, |s| -> Result<FeatureMatrix> {
        let fm = make_frontend_features(&s.audio, &fcfg).map_err(Error::from)?;
        Ok(fm.with_provenance(provenance(domain, s.split)))
    })
    .into_iter()
    .collect()
}

/// Runs the frontend. Without `norm`, statistics are fitted on source frames
/// (when loaded) pooled with target-train frames.
pub fn frontend_stage(data: &Dataset, cfg: &RunConfig, norm: Option<NormStats>, workers: usize) -> Result<FrontendFeatures> {
    let source_raw = raw_features(&data.source, Domain::Source, cfg, workers)?;
    let target_raw = raw_features(&data.target, Domain::Target, cfg, workers)?;
    let norm = match norm {
        Some(n) => n,
        None => {
            let mut pool: Vec<&FeatureMatrix> = source_raw.iter().filter(|f| !f.provenance.has_eval()).collect();
            pool.extend(target_raw.iter().filter(|f| !f.provenance.has_eval()));
            fit_norm_stats(&pool)?
        }
    };
    let context = cfg.frontend.splice_context;
    let finish = |fm: &FeatureMatrix| -> Result<FeatureMatrix> { Ok(splice(&apply_norm(fm, &norm)?, context)?) };
    let source = data.source.iter().zip(&source_raw).map(|(s, f)| Ok((s.label, finish(f)?))).collect::<Result<_>>()?;
    let items = data
        .target
        .iter()
        .zip(&target_raw)
        .map(|(s, f)| {
            Ok(FeatureItem {
                path: s.path.display().to_string(),
                label: s.label,
                split: s.split,
                condition: s.condition.clone(),
                features: finish(f)?,
            })
        })
        .collect::<Result<_>>()?;
    Ok(FrontendFeatures { norm, source, target: FeatureSet { classes: data.target_classes.clone(), items } })
}

pub fn train_source_stage(ff: &FrontendFeatures, classes: &[String], cfg: &RunConfig) -> Result<(SourceModel, TrainReport)> {
    let parts: Vec<&FeatureMatrix> = ff.source.iter().map(|(_, f)| f).collect();
    let labels: Vec<usize> = ff.source.iter().flat_map(|(l, f)| std::iter::repeat_n(*l, f.rows())).collect();
    let stacked = FeatureMatrix::stack(&parts)?;
    let tcfg = cfg.source_training.to_core(cfg.stage_seed(seed_offset::SOURCE));
    let t = Instant::now();
    let (model, report) = SourceModel::train(&stacked, &labels, classes.to_vec(), &cfg.network.source_hidden, &tcfg)?;
    info!(
        "source network trained on {} frames, {} epochs, {:.1?}",
        labels.len(),
        report.epochs.len(),
        t.elapsed()
    );
    Ok((model, report))
}

/// Adapts the frozen source trunk to the target task, or for variant B
/// trains the whole stack on target data alone.
pub fn adapt_stage(source: Option<&SourceModel>, target: &FeatureSet, cfg: &RunConfig) -> Result<(Network, TrainReport)> {
    let (fm, labels) = FeatureSet::stack(target.split(Split::Train))?;
    let tcfg = cfg.adaptation_training.to_core(cfg.stage_seed(seed_offset::ADAPT));
    let classes = target.classes.len();
    let t = Instant::now();
    let out = if cfg.variant()? == FilterVariant::NoTransfer {
        let n = cfg.network.source_hidden.len() + 2;
        info!("variant B: source training skipped, training the {n}-layer stack on target data only");
        transfer::train_without_transfer(&cfg.arch(), &fm, &labels, classes, &tcfg)?
    } else {
        let source = source.ok_or(Error::MissingData("source model for"))?;
        let found = fm.norm_fingerprint.ok_or(aec_core::Error::NotNormalized)?;
        if found != source.norm_fingerprint {
            return Err(aec_core::Error::FingerprintMismatch { expected: source.norm_fingerprint, found }.into());
        }
        let trunk = strip_output(&source.network)?;
        let composite = transfer::append_adaptation(&trunk, cfg.network.tl1, cfg.network.tl2, classes, tcfg.seed)?;
        transfer::adapt(&composite, &fm, &labels, &tcfg)?
    };
    info!("adaptation on {} frames, {} epochs, {:.1?}", labels.len(), out.1.epochs.len(), t.elapsed());
    Ok(out)
}

pub fn extract_stage(composite: &Network, target: &FeatureSet, norm: &NormStats, cfg: &RunConfig) -> Result<(DnnFilter, FeatureSet)> {
    let filter = build_filter(composite, cfg.variant()?, Some(norm.fingerprint()))?;
    let items = target
        .items
        .iter()
        .map(|i| Ok(FeatureItem { features: extract(&filter, &i.features)?, ..i.clone() }))
        .collect::<Result<_>>()?;
    Ok((filter, FeatureSet { classes: target.classes.clone(), items }))
}

/// Fits the transform on target-train filter features only.
pub fn fit_transform_stage(features: &FeatureSet, cfg: &RunConfig) -> Result<TransformModel> {
    let (fm, _) = FeatureSet::stack(features.split(Split::Train))?;
    Ok(match cfg.transform {
        TransformSection::None => TransformModel::Identity,
        TransformSection::Dct { n_keep } => TransformModel::Dct(DctSpec::new(fm.dims(), n_keep)?),
        TransformSection::Pca { out_dim } => TransformModel::Pca(pca_fit(&fm, out_dim)?),
    })
}

fn fit_classifier_on(items: &[&FeatureItem], classes: usize, section: &ClassifierSection, seed: u64) -> Result<ClassifierModel> {
    let (fm, labels) = FeatureSet::stack(items.iter().copied())?;
    Ok(match section {
        ClassifierSection::Gmm { .. } => {
            let opts = section.gmm_options().expect("gmm section");
            let mut per_class: Vec<FeatureMatrix> = Vec::with_capacity(classes);
            for c in 0..classes {
                let idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == c).collect();
                per_class.push(fm.map_values(fm.values.select_rows(&idx), fm.kind));
            }
            let refs: Vec<&FeatureMatrix> = per_class.iter().collect();
            ClassifierModel::Gmm(gmm_fit(&refs, &opts, seed)?.0)
        }
        ClassifierSection::Svm { .. } => {
            ClassifierModel::Svm(svm_fit(&fm, &labels, classes, &section.svm_params().expect("svm section"), seed)?)
        }
        ClassifierSection::Dnn { hidden, training } => {
            ClassifierModel::Dnn(dnn_classifier_fit(&fm, &labels, classes, hidden, &training.to_core(seed))?.0)
        }
    })
}

/// `features` must already be transformed.
pub fn fit_classifier_stage(features: &FeatureSet, cfg: &RunConfig) -> Result<ClassifierModel> {
    let items: Vec<&FeatureItem> = features.split(Split::Train).collect();
    let t = Instant::now();
    let model = fit_classifier_on(&items, features.classes.len(), &cfg.classifier, cfg.stage_seed(seed_offset::CLASSIFIER))?;
    info!("{} classifier fitted in {:.1?}", cfg.classifier.name(), t.elapsed());
    Ok(model)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionResult {
    pub name: String,
    pub n_segments: usize,
    /// Segment-weighted accuracy in percent.
    pub accuracy: f64,
    /// Mean of per-class accuracies in percent.
    pub macro_accuracy: f64,
    /// Per-class accuracy in percent; `None` for classes with no segments.
    pub per_class: Vec<Option<f64>>,
    /// `confusion[true][predicted]` segment counts.
    pub confusion: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    /// Row label used when rendering tables.
    pub method: String,
    pub variant: String,
    pub input_mode: String,
    pub splice_context: usize,
    pub transform: String,
    pub classifier: String,
    pub config_fingerprint: String,
    pub seed: u64,
    pub classes: Vec<String>,
    pub conditions: Vec<ConditionResult>,
    /// Unweighted mean of the per-condition segment-weighted accuracies.
    pub grand_average: f64,
    /// Unweighted mean of the per-condition class-averaged accuracies.
    pub grand_average_macro: f64,
}

impl EvalReport {
    pub fn condition(&self, name: &str) -> Option<&ConditionResult> {
        self.conditions.iter().find(|c| c.name == name)
    }
}

/// Condition names of eval items: first-appearance order, `clean` last.
pub fn condition_order(features: &FeatureSet) -> Vec<String> {
    let mut names: Vec<String> = Vec::new();
    for i in features.split(Split::Eval) {
        if !names.contains(&i.condition) {
            names.push(i.condition.clone());
        }
    }
    if let Some(p) = names.iter().position(|n| n == "clean") {
        let c = names.remove(p);
        names.push(c);
    }
    names
}

fn mean(xs: impl IntoIterator<Item = f64>) -> f64 {
    let (s, n) = xs.into_iter().fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        0.0
    } else {
        s / n as f64
    }
}

/// Classifies every eval segment. `features` must already be transformed.
pub fn evaluate_stage(features: &FeatureSet, model: &ClassifierModel, cfg: &RunConfig, workers: usize) -> Result<EvalReport> {
    let eval: Vec<&FeatureItem> = features.split(Split::Eval).collect();
    if eval.is_empty() {
        return Err(Error::MissingData("target eval"));
    }
    let rule = cfg.accumulation.into();
    let decisions = par_map(&eval, workers, |i| model.classify(&i.features, rule).map(|d| d.winner))
        .into_iter()
        .collect::<aec_core::Result<Vec<usize>>>()?;
    let k = features.classes.len();
    let mut conditions = Vec::new();
    for name in condition_order(features) {
        let mut confusion = vec![vec![0usize; k]; k];
        for (item, &pred) in eval.iter().zip(&decisions) {
            if item.condition == name {
                confusion[item.label][pred] += 1;
            }
        }
        let n: usize = confusion.iter().flatten().sum();
        let hits: usize = (0..k).map(|c| confusion[c][c]).sum();
        let per_class: Vec<Option<f64>> = (0..k)
            .map(|c| {
                let row: usize = confusion[c].iter().sum();
                (row > 0).then(|| 100.0 * confusion[c][c] as f64 / row as f64)
            })
            .collect();
        conditions.push(ConditionResult {
            accuracy: 100.0 * hits as f64 / n as f64,
            macro_accuracy: mean(per_class.iter().flatten().copied()),
            name,
            n_segments: n,
            per_class,
            confusion,
        });
    }
    let variant = cfg.variant()?;
    Ok(EvalReport {
        method: format!("[{}]", variant.name()),
        variant: variant.name().into(),
        input_mode: cfg.frontend().input_mode.name().into(),
        splice_context: cfg.frontend.splice_context,
        transform: cfg.transform.name().into(),
        classifier: cfg.classifier.name().into(),
        config_fingerprint: cfg.fingerprint().to_hex(),
        seed: cfg.seed,
        classes: features.classes.clone(),
        grand_average: mean(conditions.iter().map(|c| c.accuracy)),
        grand_average_macro: mean(conditions.iter().map(|c| c.macro_accuracy)),
        conditions,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvTable {
    pub k: usize,
    pub grid: Vec<String>,
    /// `fold_accuracy[g][f]` in percent.
    pub fold_accuracy: Vec<Vec<f64>>,
    pub mean_accuracy: Vec<f64>,
    pub best_index: usize,
    pub best: String,
}

/// Classifier settings to try: the configured section with one grid value
/// substituted at a time.
pub fn cv_grid(cfg: &RunConfig) -> Vec<ClassifierSection> {
    match &cfg.classifier {
        ClassifierSection::Svm { max_train_frames, .. } => cfg
            .cv
            .svm_c
            .iter()
            .flat_map(|&c| cfg.cv.svm_gamma.iter().map(move |&gamma| ClassifierSection::Svm { c, gamma, max_train_frames: *max_train_frames }))
            .collect(),
        ClassifierSection::Gmm { max_iter, init, .. } => cfg
            .cv
            .gmm_components
            .iter()
            .map(|&components| ClassifierSection::Gmm { components, max_iter: *max_iter, init: *init })
            .collect(),
        dnn => vec![dnn.clone()],
    }
}

fn describe(s: &ClassifierSection) -> String {
    match s {
        ClassifierSection::Svm { c, gamma, .. } => format!("svm c={c} gamma={gamma}"),
        ClassifierSection::Gmm { components, .. } => format!("gmm k={components}"),
        ClassifierSection::Dnn { hidden, .. } => format!("dnn hidden={hidden:?}"),
    }
}

/// Stratified k-fold over target-train segments. Folds split segments, never
/// frames of one segment. `features` must already be transformed.
pub fn cross_validate_stage(features: &FeatureSet, cfg: &RunConfig) -> Result<CvTable> {
    let train: Vec<&FeatureItem> = features.split(Split::Train).collect();
    let labels: Vec<usize> = train.iter().map(|i| i.label).collect();
    let grid = cv_grid(cfg);
    let classes = features.classes.len();
    let rule = cfg.accumulation.into();
    let seed = cfg.stage_seed(seed_offset::CV);
    let res = cross_validate(&labels, &grid, cfg.cv.k, seed, |section, tr, te| {
        let fit: Vec<&FeatureItem> = tr.iter().map(|&i| train[i]).collect();
        let model = fit_classifier_on(&fit, classes, section, seed).map_err(|e| match e {
            Error::Core(c) => c,
            other => aec_core::Error::BadConfig(other.to_string()),
        })?;
        let mut hits = 0;
        for &i in te {
            hits += usize::from(model.classify(&train[i].features, rule)?.winner == train[i].label);
        }
        Ok(100.0 * hits as f64 / te.len() as f64)
    })?;
    Ok(CvTable {
        k: cfg.cv.k,
        grid: grid.iter().map(describe).collect(),
        fold_accuracy: res.fold_scores,
        mean_accuracy: res.mean_scores,
        best_index: res.best_index,
        best: describe(&res.best),
    })
}

/// Artifact file names inside the output directory.
pub mod files {
    pub const NORM: &str = "norm.aecf";
    pub const SOURCE: &str = "source.aecf";
    pub const COMPOSITE: &str = "composite.aecf";
    pub const FILTER: &str = "filter.aecf";
    pub const FEATURES: &str = "features.aecf";
    pub const TRANSFORM: &str = "transform.aecf";
    pub const CLASSIFIER: &str = "classifier.aecf";
    pub const REPORT: &str = "report.json";
    pub const CV: &str = "cv.json";
    pub const CONFIG: &str = "config.json";
}

pub fn stamp(cfg: &RunConfig) -> Stamp {
    Stamp { config_fingerprint: Some(cfg.fingerprint()), seed: Some(cfg.seed) }
}

pub fn save_artifact(out: &Path, name: &str, a: &Artifact, cfg: &RunConfig) -> Result<()> {
    model_io::save(&out.join(name), a, stamp(cfg))?;
    Ok(())
}

/// Warns when an artifact on disk came from a different configuration.
pub fn check_stamp(what: &str, s: &Stamp, cfg: &RunConfig) {
    if s.config_fingerprint.is_some_and(|f| f != cfg.fingerprint()) {
        warn!("{what} was produced under a different configuration");
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("serializable");
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub report: EvalReport,
    pub source_report: Option<TrainReport>,
    pub adapt_report: TrainReport,
}

/// Runs every stage on a prepared manifest and writes all artifacts and the
/// report under `out`.
pub fn run_pipeline(cfg: &RunConfig, manifest: &Manifest, out: &Path, workers: usize) -> Result<RunOutcome> {
    cfg.validate().stage(Stage::Load)?;
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e)).stage(Stage::Load)?;
    std::fs::write(out.join(files::CONFIG), cfg.to_json()).map_err(|e| Error::io(out, e)).stage(Stage::Load)?;
    let transfer = cfg.variant().stage(Stage::Load)? != FilterVariant::NoTransfer;
    let data = load_dataset(manifest, cfg, transfer, workers).stage(Stage::Load)?;
    let ff = frontend_stage(&data, cfg, None, workers).stage(Stage::Frontend)?;
    save_artifact(out, files::NORM, &Artifact::Norm(ff.norm.clone()), cfg).stage(Stage::Frontend)?;

    let (source, source_report) = if transfer {
        let (m, r) = train_source_stage(&ff, &data.source_classes, cfg).stage(Stage::TrainSource)?;
        save_artifact(out, files::SOURCE, &Artifact::Source(m.clone()), cfg).stage(Stage::TrainSource)?;
        (Some(m), Some(r))
    } else {
        (None, None)
    };
    let (composite, adapt_report) = adapt_stage(source.as_ref(), &ff.target, cfg).stage(Stage::Adapt)?;
    save_artifact(out, files::COMPOSITE, &Artifact::Network(composite.clone()), cfg).stage(Stage::Adapt)?;

    let (filter, feats) = extract_stage(&composite, &ff.target, &ff.norm, cfg).stage(Stage::Extract)?;
    save_artifact(out, files::FILTER, &Artifact::Filter(filter), cfg).stage(Stage::Extract)?;
    save_artifact(out, files::FEATURES, &Artifact::Features(feats.clone()), cfg).stage(Stage::Extract)?;

    let transform = fit_transform_stage(&feats, cfg).stage(Stage::FitTransform)?;
    save_artifact(out, files::TRANSFORM, &Artifact::Transform(transform.clone()), cfg).stage(Stage::FitTransform)?;
    let reduced = feats.transformed(&transform).stage(Stage::FitTransform)?;

    let classifier = fit_classifier_stage(&reduced, cfg).stage(Stage::FitClassifier)?;
    save_artifact(out, files::CLASSIFIER, &Artifact::Classifier(classifier.clone()), cfg).stage(Stage::FitClassifier)?;

    let report = evaluate_stage(&reduced, &classifier, cfg, workers).stage(Stage::Evaluate)?;
    write_json(&out.join(files::REPORT), &report).stage(Stage::Evaluate)?;
    Ok(RunOutcome { report, source_report, adapt_report })
}
