//! Dataset handling, file formats and pipeline orchestration around
//! [`aec_core`]: WAV and manifest IO, artifact serialization, source-domain
//! budgeting and noisy conditions, the staged train/adapt/extract/evaluate
//! pipeline, cross-validation and accuracy tables.

pub mod audio;
pub mod config;
pub mod error;
pub mod features;
pub mod manifest;
pub mod model_io;
pub mod pipeline;
pub mod prepare;
pub mod report;
pub mod synth;
pub mod wav;

pub use config::RunConfig;
pub use error::{Error, Result, Stage};
pub use pipeline::{run_pipeline, EvalReport};
