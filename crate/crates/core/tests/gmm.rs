mod common;

use aec_core::classifiers::{gmm_fit, gmm_frame_scores, GmmInit, GmmOptions};
use aec_core::frontend::FeatureMatrix;
use aec_core::linalg::Matrix;

fn opts(k: usize) -> GmmOptions {
    GmmOptions { components: k, ..Default::default() }
}

#[test]
fn single_component_is_the_gaussian_mle() {
    let mut r = common::rng(40);
    let x = common::normal_matrix(&mut r, 300, 3, 2.0);
    let fm = FeatureMatrix::from_matrix(x.clone());
    let (model, _) = gmm_fit(&[&fm], &opts(1), 0).unwrap();
    let g = &model.classes[0];
    assert_eq!(g.weights, vec![1.0]);
    for j in 0..3 {
        let mean = x.iter_rows().map(|row| row[j]).sum::<f64>() / 300.0;
        let var = x.iter_rows().map(|row| (row[j] - mean).powi(2)).sum::<f64>() / 300.0;
        assert!((g.means.get(0, j) - mean).abs() < 1e-10);
        assert!((g.variances.get(0, j) - var).abs() < 1e-10);
    }
    // closed-form diagonal Gaussian density
    let p = [0.3, -1.0, 2.0];
    let mut ll = 0.0;
    for j in 0..3 {
        let (m, v) = (g.means.get(0, j), g.variances.get(0, j));
        ll += -0.5 * ((2.0 * std::f64::consts::PI * v).ln() + (p[j] - m).powi(2) / v);
    }
    assert!((gmm_frame_scores(&model, &p).unwrap()[0] - ll).abs() < 1e-10);
}

#[test]
fn recovers_two_separated_modes() {
    let mut r = common::rng(41);
    let rows: Vec<Vec<f64>> = (0..1000).map(|i| vec![if i % 2 == 0 { 0.0 } else { 10.0 } + common::normal(&mut r)]).collect();
    let fm = FeatureMatrix::from_matrix(Matrix::from_rows(&rows).unwrap());
    for init in [GmmInit::RandomFrames, GmmInit::KMeans] {
        let (model, _) = gmm_fit(&[&fm], &GmmOptions { init, ..opts(2) }, 3).unwrap();
        let mut means: Vec<f64> = (0..2).map(|k| model.classes[0].means.get(k, 0)).collect();
        means.sort_by(f64::total_cmp);
        assert!(means[0].abs() < 0.2 && (means[1] - 10.0).abs() < 0.2, "{means:?}");
        assert!(model.classes[0].weights.iter().all(|w| (w - 0.5).abs() < 0.05));
    }
}

#[test]
fn em_log_likelihood_never_decreases() {
    let mut r = common::rng(42);
    let (x, _) = common::clusters(&mut r, 5, 80, 4, 3.0);
    let fm = FeatureMatrix::from_matrix(x);
    for seed in 0..5 {
        let (_, report) = gmm_fit(&[&fm], &GmmOptions { rel_tol: 0.0, max_iter: 60, ..opts(6) }, seed).unwrap();
        let ll = &report.log_likelihood[0];
        assert!(ll.len() > 1);
        for w in ll.windows(2) {
            assert!(w[1] >= w[0] - 1e-9 * w[0].abs(), "{} -> {}", w[0], w[1]);
        }
    }
}

#[test]
fn per_class_models_separate_classes() {
    let mut r = common::rng(43);
    let a = FeatureMatrix::from_matrix(common::normal_matrix(&mut r, 200, 2, 1.0));
    let b_rows: Vec<Vec<f64>> = (0..200).map(|_| vec![4.0 + common::normal(&mut r), common::normal(&mut r)]).collect();
    let b = FeatureMatrix::from_matrix(Matrix::from_rows(&b_rows).unwrap());
    let (model, _) = gmm_fit(&[&a, &b], &opts(2), 1).unwrap();
    assert_eq!(model.classes.len(), 2);
    let s = gmm_frame_scores(&model, &[4.0, 0.0]).unwrap();
    assert!(s[1] > s[0]);
}
