use std::fmt;
use std::path::PathBuf;

use thiserror::Error;

use crate::config::ConfigError;
use crate::manifest::ManifestError;
use crate::model_io::ModelIoError;
use crate::wav::WavError;

/// Pipeline stages, named as on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    PrepareSource,
    PrepareConditions,
    Load,
    Frontend,
    TrainSource,
    Adapt,
    Extract,
    FitTransform,
    FitClassifier,
    Evaluate,
    Report,
    CrossValidate,
    Synth,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::PrepareSource => "prepare-source",
            Stage::PrepareConditions => "prepare-conditions",
            Stage::Load => "load",
            Stage::Frontend => "frontend",
            Stage::TrainSource => "train-source",
            Stage::Adapt => "adapt",
            Stage::Extract => "extract",
            Stage::FitTransform => "fit-transform",
            Stage::FitClassifier => "fit-classifier",
            Stage::Evaluate => "evaluate",
            Stage::Report => "report",
            Stage::CrossValidate => "cross-validate",
            Stage::Synth => "synth",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] aec_core::Error),
    #[error(transparent)]
    Manifest(#[from] ManifestError),
    #[error(transparent)]
    Model(#[from] ModelIoError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{path}: {source}")]
    Wav { path: PathBuf, source: WavError },
    #[error("i/o error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("class {0:?} has no source audio")]
    EmptyClass(String),
    #[error("{path}: evaluation segment lasts {seconds:.3} s, longer than {limit} s")]
    SegmentTooLong { path: PathBuf, seconds: f64, limit: f64 },
    #[error("{path}: SNR after mixing is {measured:.4} dB, requested {requested} dB")]
    SnrCheck { path: PathBuf, requested: f64, measured: f64 },
    #[error("manifest has no {0} entries")]
    MissingData(&'static str),
    #[error("class {label:?} is not among the model's classes")]
    UnknownClass { label: String },
    #[error("{what} was produced by config {found}, current config is {expected}")]
    StaleArtifact { what: &'static str, expected: String, found: String },
    #[error("report has no rows")]
    EmptyReport,
    #[error("stage {stage} failed: {source}")]
    Stage { stage: Stage, source: Box<Error> },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub fn wav(path: impl Into<PathBuf>, source: WavError) -> Self {
        Error::Wav { path: path.into(), source }
    }

    /// The stage an error was raised in, if it carries one.
    pub fn stage(&self) -> Option<Stage> {
        match self {
            Error::Stage { stage, .. } => Some(*stage),
            _ => None,
        }
    }

    /// Innermost error beneath any stage wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            e => e,
        }
    }
}

/// Attaches a stage name to an error.
pub trait StageExt<T> {
    fn stage(self, stage: Stage) -> Result<T>;
}

impl<T, E: Into<Error>> StageExt<T> for std::result::Result<T, E> {
    fn stage(self, stage: Stage) -> Result<T> {
        self.map_err(|e| match e.into() {
            e @ Error::Stage { .. } => e,
            e => Error::Stage { stage, source: Box::new(e) },
        })
    }
}
