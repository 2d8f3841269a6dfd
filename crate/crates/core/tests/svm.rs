mod common;

use aec_core::classifiers::{dual_objective, kkt_violation, rbf, smo_solve, svm_fit, svm_frame_scores, BinarySvm, SvmParams};
use aec_core::cv::cross_validate;
use aec_core::frontend::FeatureMatrix;
use aec_core::linalg::{argmax, Matrix};
use rand::Rng as _;

#[test]
fn two_point_dual_matches_grid_search() {
    let x = Matrix::from_rows(&[[0.0, 0.0], [1.0, 0.5]]).unwrap();
    let y = [1.0, -1.0];
    for (c, gamma) in [(10.0, 1.0), (0.5, 1.0), (10.0, 0.1), (3.0, 2.0)] {
        let params = SvmParams { c, gamma, tol: 1e-8, ..Default::default() };
        let sol = smo_solve(&x, &y, &params).unwrap();
        // equality constraint forces a1 = a2 = a; scan a over [0, C]
        let steps = 1_000_000;
        let (mut best_a, mut best_obj) = (0.0, f64::NEG_INFINITY);
        for s in 0..=steps {
            let a = c * s as f64 / steps as f64;
            let obj = dual_objective(&x, &y, &[a, a], gamma);
            if obj > best_obj {
                best_obj = obj;
                best_a = a;
            }
        }
        assert!((sol.alpha[0] - best_a).abs() < 1e-4, "C={c} g={gamma}: {} vs {best_a}", sol.alpha[0]);
        assert!((sol.objective - best_obj).abs() < 1e-4);
        assert!(sol.converged);
    }
}

#[test]
fn kkt_conditions_hold_on_random_problems() {
    let mut r = common::rng(50);
    for trial in 0..10 {
        let x = common::normal_matrix(&mut r, 50, 3, 1.0);
        let y: Vec<f64> = x.iter_rows().map(|row| if row[0] + 0.5 * row[1] + 0.3 * common::normal(&mut r) > 0.0 { 1.0 } else { -1.0 }).collect();
        let params = SvmParams { c: r.random_range(0.5..20.0), gamma: r.random_range(0.05..2.0), ..Default::default() };
        let sol = smo_solve(&x, &y, &params).unwrap();
        assert!(sol.converged);
        let m = BinarySvm::from_solution(&x, &y, &sol);
        let v = kkt_violation(&m, params.gamma, params.c, &x, &y, &sol.alpha);
        assert!(v <= 1e-3 * 1.01, "trial {trial}: violation {v:e}");
        let eq: f64 = sol.alpha.iter().zip(&y).map(|(a, b)| a * b).sum();
        assert!(eq.abs() < 1e-9);
        assert!(sol.alpha.iter().all(|&a| (0.0..=params.c).contains(&a)));
    }
}

#[test]
fn two_class_scores_are_antisymmetric() {
    let mut r = common::rng(51);
    let (x, labels) = common::blobs(&mut r, 30, 2, 1.5);
    let model = svm_fit(&FeatureMatrix::from_matrix(x), &labels, 2, &SvmParams { gamma: 0.5, ..Default::default() }, 0).unwrap();
    for _ in 0..20 {
        let p = common::uniform_vec(&mut r, 2, -4.0, 4.0);
        let s = svm_frame_scores(&model, &p).unwrap();
        assert_eq!(s[0], -s[1]);
    }
}

#[test]
fn one_vs_rest_separates_clusters() {
    let mut r = common::rng(52);
    let (x, labels) = common::clusters(&mut r, 4, 40, 3, 4.0);
    let (test, test_labels) = common::clusters(&mut r, 4, 20, 3, 4.0);
    let model = svm_fit(&FeatureMatrix::from_matrix(x), &labels, 4, &SvmParams { gamma: 0.2, ..Default::default() }, 0).unwrap();
    let hits = test.iter_rows().zip(&test_labels).filter(|(row, &l)| argmax(&svm_frame_scores(&model, row).unwrap()) == l).count();
    assert!(hits as f64 / test_labels.len() as f64 > 0.95);
}

/// Concentric rings: a near-linear kernel cannot separate them, a moderate
/// RBF width can.
#[test]
fn cross_validation_prefers_the_better_gamma() {
    let mut r = common::rng(53);
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for i in 0..120 {
        let c = i % 2;
        let radius = if c == 0 { 1.0 } else { 3.0 } + 0.2 * common::normal(&mut r);
        let t: f64 = r.random_range(0.0..std::f64::consts::TAU);
        rows.push(vec![radius * t.cos(), radius * t.sin()]);
        labels.push(c);
    }
    let x = Matrix::from_rows(&rows).unwrap();
    let grid = [1e-4, 0.5];
    let cv = cross_validate(&labels, &grid, 5, 7, |&gamma, train, test| {
        let fm = FeatureMatrix::from_matrix(x.select_rows(train));
        let tl: Vec<usize> = train.iter().map(|&i| labels[i]).collect();
        let model = svm_fit(&fm, &tl, 2, &SvmParams { gamma, c: 1.0, ..Default::default() }, 0)?;
        let mut hits = 0;
        for &i in test {
            hits += usize::from(argmax(&svm_frame_scores(&model, x.row(i))?) == labels[i]);
        }
        Ok(hits as f64 / test.len() as f64)
    })
    .unwrap();
    assert_eq!(cv.best_index, 1, "{:?}", cv.mean_scores);
    assert!(cv.mean_scores[1] > 0.95);
    assert_eq!(rbf(0.5, &[0.0, 0.0], &[1.0, 1.0]), (-1.0f64).exp());
}
