//! Frame-level back-end classifiers and segment-level decisions.

mod dnn;
mod gmm;
mod segment;
mod svm;

pub use dnn::{dnn_classifier_fit, DnnClassifier, DEFAULT_HIDDEN};
pub use gmm::{gmm_fit, gmm_frame_scores, ClassGmm, GmmFitReport, GmmInit, GmmModel, GmmOptions};
pub use segment::{classify_segment, Accumulation, ScoreKind, SegmentDecision};
pub use svm::{
    dual_objective, kkt_violation, rbf, smo_solve, svm_fit, svm_frame_scores, BinarySvm, SmoSolution, SvmModel,
    SvmParams,
};

use crate::error::{Error, Result};
use crate::frontend::FeatureMatrix;
use crate::linalg::Matrix;

#[derive(Debug, Clone, PartialEq)]
pub enum ClassifierModel {
    Gmm(GmmModel),
    Svm(SvmModel),
    Dnn(DnnClassifier),
}

impl ClassifierModel {
    pub fn score_kind(&self) -> ScoreKind {
        match self {
            ClassifierModel::Gmm(_) => ScoreKind::LogLikelihood,
            ClassifierModel::Svm(_) => ScoreKind::DecisionValue,
            ClassifierModel::Dnn(_) => ScoreKind::Softmax,
        }
    }

    pub fn classes(&self) -> usize {
        match self {
            ClassifierModel::Gmm(m) => m.classes.len(),
            ClassifierModel::Svm(m) => m.machines.len(),
            ClassifierModel::Dnn(m) => m.network.output_dim(),
        }
    }

    /// Frames x classes score matrix.
    pub fn frame_scores(&self, frames: &Matrix) -> Result<Matrix> {
        match self {
            ClassifierModel::Dnn(m) => m.frame_scores(frames),
            ClassifierModel::Gmm(m) => {
                let rows: Result<alloc::vec::Vec<_>> = frames.iter_rows().map(|f| gmm_frame_scores(m, f)).collect();
                Matrix::from_rows(&rows?)
            }
            ClassifierModel::Svm(m) => {
                if frames.rows() == 0 {
                    return Ok(Matrix::zeros(0, m.machines.len()));
                }
                let rows: Result<alloc::vec::Vec<_>> = frames.iter_rows().map(|f| svm_frame_scores(m, f)).collect();
                Matrix::from_rows(&rows?)
            }
        }
    }

    pub fn classify(&self, segment: &FeatureMatrix, rule: Accumulation) -> Result<SegmentDecision> {
        if segment.rows() == 0 {
            return Err(Error::EmptyFrames);
        }
        classify_segment(&self.frame_scores(&segment.values)?, self.score_kind(), rule)
    }
}
