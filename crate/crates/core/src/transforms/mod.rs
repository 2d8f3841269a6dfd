//! Redundancy reduction applied to tapped filter features.

mod dct;
mod eigen;
mod pca;

pub use dct::{dct_apply, DctSpec};
pub use eigen::symmetric_eigen;
pub use pca::{pca_apply, pca_fit, PcaModel};

use crate::error::Result;
use crate::frontend::FeatureMatrix;

#[derive(Debug, Clone, PartialEq)]
pub enum TransformModel {
    Identity,
    Dct(DctSpec),
    Pca(PcaModel),
}

impl TransformModel {
    pub fn apply(&self, fm: &FeatureMatrix) -> Result<FeatureMatrix> {
        match self {
            TransformModel::Identity => Ok(fm.clone()),
            TransformModel::Dct(spec) => dct_apply(spec, fm),
            TransformModel::Pca(model) => pca_apply(model, fm),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            TransformModel::Identity => "none",
            TransformModel::Dct(_) => "dct",
            TransformModel::Pca(_) => "pca",
        }
    }
}
