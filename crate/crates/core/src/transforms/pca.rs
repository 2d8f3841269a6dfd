use alloc::vec;
use alloc::vec::Vec;

use super::eigen::symmetric_eigen;
use crate::error::{Error, Result};
use crate::frontend::{FeatureKind, FeatureMatrix};
use crate::linalg::{dot, Matrix};

/// Principal-component projection fitted on training features.
#[derive(Debug, Clone, PartialEq)]
pub struct PcaModel {
    pub mean: Vec<f64>,
    /// `out_dim x dims`, unit rows ordered by descending eigenvalue.
    pub components: Matrix,
    pub eigenvalues: Vec<f64>,
}

impl PcaModel {
    pub fn out_dim(&self) -> usize {
        self.components.rows()
    }

    pub fn project(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.mean.len() {
            return Err(Error::DimMismatch { expected: self.mean.len(), found: x.len() });
        }
        let centered: Vec<f64> = x.iter().zip(&self.mean).map(|(a, m)| a - m).collect();
        Ok(self.components.iter_rows().map(|c| dot(c, &centered)).collect())
    }
}

/// Top-`out_dim` eigenvectors of the sample covariance (denominator `rows - 1`).
/// Each component's largest-magnitude entry is made positive.
pub fn pca_fit(fm: &FeatureMatrix, out_dim: usize) -> Result<PcaModel> {
    fm.provenance.ensure_fit_safe("PCA")?;
    let (rows, dims) = (fm.rows(), fm.dims());
    if out_dim == 0 || dims < out_dim {
        return Err(Error::BadConfig("PCA needs 1 <= out_dim <= feature dims".into()));
    }
    if rows < out_dim + 1 {
        return Err(Error::TooFewRows { rows, needed: out_dim + 1 });
    }
    let mut mean = vec![0.0; dims];
    for r in fm.values.iter_rows() {
        for (m, &x) in mean.iter_mut().zip(r) {
            *m += x;
        }
    }
    mean.iter_mut().for_each(|m| *m /= rows as f64);

    let mut cov = Matrix::zeros(dims, dims);
    let mut centered = vec![0.0; dims];
    for r in fm.values.iter_rows() {
        for ((c, &x), &m) in centered.iter_mut().zip(r).zip(&mean) {
            *c = x - m;
        }
        for i in 0..dims {
            let ci = centered[i];
            if ci == 0.0 {
                continue;
            }
            let row = cov.row_mut(i);
            for j in i..dims {
                row[j] += ci * centered[j];
            }
        }
    }
    let denom = (rows - 1) as f64;
    for i in 0..dims {
        for j in i..dims {
            let v = cov.get(i, j) / denom;
            cov.set(i, j, v);
            cov.set(j, i, v);
        }
    }
    if cov.as_slice().iter().all(|&v| v == 0.0) {
        return Err(Error::ZeroVariance);
    }

    let (values, vectors) = symmetric_eigen(&cov, 1e-12, 200);
    let mut components = Matrix::zeros(out_dim, dims);
    for k in 0..out_dim {
        let v = vectors.row(k);
        let mut lead = 0;
        for (i, x) in v.iter().enumerate() {
            if x.abs() > v[lead].abs() {
                lead = i;
            }
        }
        let sign = if v[lead] < 0.0 { -1.0 } else { 1.0 };
        for (c, &x) in components.row_mut(k).iter_mut().zip(v) {
            *c = sign * x;
        }
    }
    let eigenvalues = values[..out_dim].iter().map(|&v| v.max(0.0)).collect();
    Ok(PcaModel { mean, components, eigenvalues })
}

/// `components (x - mean)` for every row.
pub fn pca_apply(model: &PcaModel, fm: &FeatureMatrix) -> Result<FeatureMatrix> {
    let dims = model.mean.len();
    if fm.dims() != dims {
        return Err(Error::DimMismatch { expected: dims, found: fm.dims() });
    }
    let mut out = Matrix::zeros(fm.rows(), model.out_dim());
    for (t, x) in fm.values.iter_rows().enumerate() {
        let y = model.project(x)?;
        out.row_mut(t).copy_from_slice(&y);
    }
    Ok(fm.map_values(out, FeatureKind::Reduced))
}
