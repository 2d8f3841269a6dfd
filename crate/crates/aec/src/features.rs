//! Per-segment feature blocks carried between pipeline stages.

use aec_core::frontend::FeatureMatrix;
use aec_core::transforms::TransformModel;

use crate::manifest::Split;

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureItem {
    pub path: String,
    pub label: usize,
    pub split: Split,
    pub condition: String,
    pub features: FeatureMatrix,
}

/// Target-domain segments with their labels, in manifest order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FeatureSet {
    pub classes: Vec<String>,
    pub items: Vec<FeatureItem>,
}

impl FeatureSet {
    pub fn split(&self, split: Split) -> impl Iterator<Item = &FeatureItem> {
        self.items.iter().filter(move |i| i.split == split)
    }

    /// Frames of the given items stacked, with one label per frame.
    pub fn stack<'a>(items: impl IntoIterator<Item = &'a FeatureItem>) -> aec_core::Result<(FeatureMatrix, Vec<usize>)> {
        let items: Vec<&FeatureItem> = items.into_iter().collect();
        let parts: Vec<&FeatureMatrix> = items.iter().map(|i| &i.features).collect();
        let labels = items.iter().flat_map(|i| std::iter::repeat_n(i.label, i.features.rows())).collect();
        Ok((FeatureMatrix::stack(&parts)?, labels))
    }

    pub fn transformed(&self, t: &TransformModel) -> aec_core::Result<Self> {
        let items = self
            .items
            .iter()
            .map(|i| Ok(FeatureItem { features: t.apply(&i.features)?, ..i.clone() }))
            .collect::<aec_core::Result<_>>()?;
        Ok(Self { classes: self.classes.clone(), items })
    }
}
