use core::f64::consts::PI;

use crate::error::{Error, Result};
use crate::frontend::{FeatureKind, FeatureMatrix};
use crate::linalg::{dot, Matrix};
use crate::math;

/// Orthonormal DCT-II restricted to its leading `n_keep` coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct DctSpec {
    pub n_points: usize,
    pub n_keep: usize,
    /// `n_keep x n_points`, `C[k][n] = s_k cos(pi (2n + 1) k / 2N)`.
    pub basis: Matrix,
}

impl Default for DctSpec {
    fn default() -> Self {
        Self::new(150, 50).expect("valid default")
    }
}

impl DctSpec {
    pub fn new(n_points: usize, n_keep: usize) -> Result<Self> {
        if n_points == 0 || n_keep == 0 || n_keep > n_points {
            return Err(Error::BadConfig("need 1 <= n_keep <= n_points".into()));
        }
        let n = n_points as f64;
        let mut basis = Matrix::zeros(n_keep, n_points);
        for k in 0..n_keep {
            let s = if k == 0 { math::sqrt(1.0 / n) } else { math::sqrt(2.0 / n) };
            for (i, b) in basis.row_mut(k).iter_mut().enumerate() {
                *b = s * math::cos(PI * (2 * i + 1) as f64 * k as f64 / (2.0 * n));
            }
        }
        Ok(Self { n_points, n_keep, basis })
    }

    pub fn forward(&self, x: &[f64]) -> Result<alloc::vec::Vec<f64>> {
        if x.len() != self.n_points {
            return Err(Error::DimMismatch { expected: self.n_points, found: x.len() });
        }
        Ok(self.basis.iter_rows().map(|row| dot(row, x)).collect())
    }

    /// `C_keep^T y`; exact inverse when `n_keep == n_points`.
    pub fn inverse(&self, y: &[f64]) -> Result<alloc::vec::Vec<f64>> {
        if y.len() != self.n_keep {
            return Err(Error::DimMismatch { expected: self.n_keep, found: y.len() });
        }
        let mut x = alloc::vec![0.0; self.n_points];
        for (row, &c) in self.basis.iter_rows().zip(y) {
            crate::linalg::axpy(c, row, &mut x);
        }
        Ok(x)
    }
}

/// Applies the DCT to every row and keeps the leading coefficients.
pub fn dct_apply(spec: &DctSpec, fm: &FeatureMatrix) -> Result<FeatureMatrix> {
    if fm.dims() != spec.n_points {
        return Err(Error::DimMismatch { expected: spec.n_points, found: fm.dims() });
    }
    let mut out = Matrix::zeros(fm.rows(), spec.n_keep);
    for (t, x) in fm.values.iter_rows().enumerate() {
        for (o, row) in out.row_mut(t).iter_mut().zip(spec.basis.iter_rows()) {
            *o = dot(row, x);
        }
    }
    Ok(fm.map_values(out, FeatureKind::Reduced))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_vector_is_dc_only() {
        let spec = DctSpec::default();
        let c = 0.7;
        let y = spec.forward(&[c; 150]).unwrap();
        assert!((y[0] - c * 150f64.sqrt()).abs() < 1e-10);
        assert!(y[1..].iter().all(|v| v.abs() <= 1e-10));
        assert!(spec.forward(&[0.0; 150]).unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(DctSpec::new(10, 11).is_err());
        let fm = FeatureMatrix::from_matrix(Matrix::zeros(2, 149));
        assert_eq!(dct_apply(&DctSpec::default(), &fm), Err(Error::DimMismatch { expected: 150, found: 149 }));
    }
}
