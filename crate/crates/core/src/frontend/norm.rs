use alloc::vec;
use alloc::vec::Vec;

use super::{FeatureMatrix, Provenance};
use crate::error::{Error, Result};
use crate::fingerprint::Fingerprint;
use crate::linalg::Matrix;
use crate::math;

/// Lower bound applied to every per-dimension standard deviation.
pub const STD_FLOOR: f64 = 1e-8;

/// Per-dimension z-score statistics pooled over training frames.
#[derive(Debug, Clone, PartialEq)]
pub struct NormStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    pub n_frames: usize,
    pub source_tags: Provenance,
}

impl NormStats {
    pub fn dims(&self) -> usize {
        self.mean.len()
    }

    pub fn fingerprint(&self) -> Fingerprint {
        Fingerprint::builder()
            .bytes(b"norm")
            .f64s(&self.mean)
            .f64s(&self.std)
            .u64(self.n_frames as u64)
            .finish()
    }
}

/// Pools every row of `matrices` and computes the per-dimension mean and
/// population standard deviation (floored at [`STD_FLOOR`]).
pub fn fit_norm_stats(matrices: &[&FeatureMatrix]) -> Result<NormStats> {
    let dims = matrices.first().ok_or(Error::EmptyInput)?.dims();
    let mut tags = Provenance::UNTAGGED;
    let mut n = 0usize;
    for m in matrices {
        if m.dims() != dims {
            return Err(Error::DimMismatch { expected: dims, found: m.dims() });
        }
        tags = tags.union(m.provenance);
        n += m.rows();
    }
    tags.ensure_fit_safe("normalization statistics")?;
    if n == 0 {
        return Err(Error::EmptyInput);
    }

    let mut mean = vec![0.0; dims];
    for m in matrices {
        for row in m.values.iter_rows() {
            for (a, &x) in mean.iter_mut().zip(row) {
                *a += x;
            }
        }
    }
    for a in &mut mean {
        *a /= n as f64;
    }
    // second pass on centered values avoids cancellation
    let mut var = vec![0.0; dims];
    for m in matrices {
        for row in m.values.iter_rows() {
            for ((v, &x), &mu) in var.iter_mut().zip(row).zip(&mean) {
                let d = x - mu;
                *v += d * d;
            }
        }
    }
    let std = var.iter().map(|v| math::sqrt(v / n as f64).max(STD_FLOOR)).collect();
    Ok(NormStats { mean, std, n_frames: n, source_tags: tags })
}

/// `(x - mean) / std` per dimension. Marks the result normalized and stamps
/// it with the statistics' fingerprint.
pub fn apply_norm(fm: &FeatureMatrix, stats: &NormStats) -> Result<FeatureMatrix> {
    if fm.dims() != stats.dims() {
        return Err(Error::DimMismatch { expected: stats.dims(), found: fm.dims() });
    }
    let mut values = Matrix::zeros(fm.rows(), fm.dims());
    for (t, row) in fm.values.iter_rows().enumerate() {
        for (((o, &x), &mu), &sd) in values.row_mut(t).iter_mut().zip(row).zip(&stats.mean).zip(&stats.std) {
            *o = (x - mu) / sd;
        }
    }
    let mut out = fm.map_values(values, fm.kind);
    out.normalized = true;
    out.norm_fingerprint = Some(stats.fingerprint());
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fm(rows: &[[f64; 1]]) -> FeatureMatrix {
        FeatureMatrix::from_matrix(Matrix::from_rows(rows).unwrap())
    }

    #[test]
    fn pooled_population_stats() {
        let a = fm(&[[0.0], [2.0]]);
        let b = fm(&[[4.0], [6.0]]);
        let s = fit_norm_stats(&[&a, &b]).unwrap();
        assert_eq!(s.mean, [3.0]);
        // population std of {0,2,4,6} = sqrt(5)
        assert!((s.std[0] - 2.2360679).abs() < 1e-7);
        assert_eq!(s.n_frames, 4);
    }

    #[test]
    fn z_score_and_constant_dim() {
        let stats = NormStats { mean: vec![2.0, 5.0], std: vec![2.0, STD_FLOOR], n_frames: 1, source_tags: Provenance::UNTAGGED };
        let x = FeatureMatrix::from_matrix(Matrix::from_rows(&[[4.0, 5.0]]).unwrap());
        let y = apply_norm(&x, &stats).unwrap();
        assert_eq!(y.values.row(0), &[1.0, 0.0]);
        assert!(y.normalized);
        assert_eq!(y.norm_fingerprint, Some(stats.fingerprint()));

        let c = fm(&[[3.0], [3.0]]);
        let s = fit_norm_stats(&[&c]).unwrap();
        assert_eq!(s.std[0], STD_FLOOR);
        assert_eq!(apply_norm(&c, &s).unwrap().values.as_slice(), &[0.0, 0.0]);
    }

    #[test]
    fn errors() {
        assert_eq!(fit_norm_stats(&[]), Err(Error::EmptyInput));
        let empty = FeatureMatrix::from_matrix(Matrix::zeros(0, 2));
        assert_eq!(fit_norm_stats(&[&empty]), Err(Error::EmptyInput));
        let a = fm(&[[1.0]]);
        let b = FeatureMatrix::from_matrix(Matrix::zeros(1, 2));
        assert_eq!(fit_norm_stats(&[&a, &b]), Err(Error::DimMismatch { expected: 1, found: 2 }));
        let eval = fm(&[[1.0]]).with_provenance(Provenance::TARGET_EVAL);
        assert!(matches!(fit_norm_stats(&[&a, &eval]), Err(Error::EvalLeakage(_))));
    }
}
