mod common;

use aec_core::frontend::{
    apply_norm, fit_norm_stats, make_frontend_features, splice, AudioSegment, FeatureMatrix, FrontendConfig, InputMode,
    Provenance, SAMPLE_RATE,
};
use aec_core::linalg::Matrix;
use aec_core::math::softmax_in_place;
use aec_core::Error;
use proptest::prelude::*;

fn matrix(rows: usize, cols: usize, seed: u64, scale: f64) -> Matrix {
    let mut r = common::rng(seed);
    common::normal_matrix(&mut r, rows, cols, scale)
}

#[test]
fn frame_counts_and_dims_per_mode() {
    let seg = AudioSegment::new(vec![0.01; 3 * 16_000], SAMPLE_RATE).unwrap();
    for (mode, dims) in [(InputMode::DftMag, 512), (InputMode::Waveform, 1024), (InputMode::DftRealImag, 1024), (InputMode::Concat, 2560)] {
        let cfg = FrontendConfig { input_mode: mode, ..Default::default() };
        let fm = make_frontend_features(&seg, &cfg).unwrap();
        assert_eq!((fm.rows(), fm.dims()), (92, dims));
        assert_eq!(splice(&fm, 3).unwrap().dims(), 3 * dims);
        assert!(matches!(splice(&fm, 2), Err(Error::BadContext(2))));
    }
    let short = AudioSegment::new(vec![0.0; 1000], SAMPLE_RATE).unwrap();
    assert!(matches!(make_frontend_features(&short, &FrontendConfig::default()), Err(Error::SegmentTooShort { .. })));
    assert!(matches!(AudioSegment::new(vec![0.0; 2000], 44_100), Err(Error::BadSampleRate(44_100))));
}

#[test]
fn normalization_refuses_eval_rows() {
    let fm = FeatureMatrix::from_matrix(matrix(10, 3, 1, 1.0)).with_provenance(Provenance::TARGET_EVAL);
    assert!(matches!(fit_norm_stats(&[&fm]), Err(Error::EvalLeakage(_))));
}

proptest! {
    #[test]
    fn splice_one_is_identity(rows in 1usize..30, cols in 1usize..8, seed in 0u64..1000) {
        let fm = FeatureMatrix::from_matrix(matrix(rows, cols, seed, 1.0));
        let out = splice(&fm, 1).unwrap();
        prop_assert_eq!(out.values, fm.values);
    }

    #[test]
    fn splice_centre_block_is_original(rows in 1usize..30, cols in 1usize..6, k in 1usize..4, seed in 0u64..1000) {
        let fm = FeatureMatrix::from_matrix(matrix(rows, cols, seed, 1.0));
        let out = splice(&fm, 2 * k + 1).unwrap();
        prop_assert_eq!(out.rows(), rows);
        prop_assert_eq!(out.dims(), (2 * k + 1) * cols);
        for t in 0..rows {
            prop_assert_eq!(&out.values.row(t)[k * cols..(k + 1) * cols], fm.values.row(t));
            // first block is the frame k steps back, replicated at the edge
            let src = t.saturating_sub(k);
            prop_assert_eq!(&out.values.row(t)[..cols], fm.values.row(src));
        }
    }

    #[test]
    fn normalized_training_data_is_standard(rows in 2usize..60, cols in 1usize..6, seed in 0u64..1000, scale in 0.01f64..100.0) {
        let mut x = matrix(rows, cols, seed, scale);
        // keep every column non-constant
        for j in 0..cols {
            x.set(0, j, x.get(0, j) + scale);
        }
        let fm = FeatureMatrix::from_matrix(x);
        let stats = fit_norm_stats(&[&fm]).unwrap();
        let out = apply_norm(&fm, &stats).unwrap();
        prop_assert!(out.normalized);
        for j in 0..cols {
            let col: Vec<f64> = out.values.iter_rows().map(|r| r[j]).collect();
            let mean = col.iter().sum::<f64>() / rows as f64;
            let std = (col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / rows as f64).sqrt();
            prop_assert!(mean.abs() <= 1e-9, "mean {}", mean);
            prop_assert!((std - 1.0).abs() <= 1e-6, "std {}", std);
        }
    }

    #[test]
    fn softmax_sums_to_one(v in prop::collection::vec(-800.0f64..800.0, 1..30)) {
        let mut v = v;
        softmax_in_place(&mut v);
        prop_assert!((v.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(v.iter().all(|p| p.is_finite() && *p >= 0.0));
    }
}
