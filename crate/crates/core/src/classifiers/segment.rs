use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{argmax, Matrix};
use crate::math;

/// What a per-frame score matrix holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScoreKind {
    LogLikelihood,
    DecisionValue,
    Softmax,
}

/// How per-frame scores are combined over a segment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Accumulation {
    /// Sum of log-likelihoods / decision values / log posteriors.
    #[default]
    LogSum,
    /// Sum of per-frame probabilities (GMM log-likelihoods are first turned
    /// into class posteriors). Decision values are summed as-is.
    ProbabilitySum,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SegmentDecision {
    pub scores: Vec<f64>,
    pub winner: usize,
    pub n_frames: usize,
}

/// Accumulates `frame_scores` (frames x classes) into one decision. Ties go
/// to the lowest class index.
pub fn classify_segment(frame_scores: &Matrix, kind: ScoreKind, rule: Accumulation) -> Result<SegmentDecision> {
    if frame_scores.rows() == 0 {
        return Err(Error::EmptyFrames);
    }
    let mut acc = vec![0.0; frame_scores.cols()];
    let mut buf = vec![0.0; frame_scores.cols()];
    for row in frame_scores.iter_rows() {
        match (kind, rule) {
            (ScoreKind::DecisionValue, _) | (ScoreKind::LogLikelihood, Accumulation::LogSum) => {
                buf.copy_from_slice(row);
            }
            (ScoreKind::Softmax, Accumulation::LogSum) => {
                for (b, &p) in buf.iter_mut().zip(row) {
                    *b = math::ln(p.max(f64::MIN_POSITIVE));
                }
            }
            (ScoreKind::Softmax, Accumulation::ProbabilitySum) => buf.copy_from_slice(row),
            (ScoreKind::LogLikelihood, Accumulation::ProbabilitySum) => {
                buf.copy_from_slice(row);
                math::softmax_in_place(&mut buf);
            }
        }
        for (a, &b) in acc.iter_mut().zip(&buf) {
            *a += b;
        }
    }
    Ok(SegmentDecision { winner: argmax(&acc), scores: acc, n_frames: frame_scores.rows() })
}
