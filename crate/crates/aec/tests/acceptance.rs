//! One line per acceptance criterion. Exits non-zero if any fails.

mod common;

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use aec::pipeline::{files, run_pipeline, EvalReport};
use aec::report::{render_report, ReportRow, ReportStyle, ReportTable};
use aec_core::classifiers::{gmm_fit, smo_solve, GmmInit, GmmOptions, SvmParams};
use aec_core::frontend::{apply_norm, fit_norm_stats, mix_noise, AudioSegment, FeatureMatrix, Fft, Provenance};
use aec_core::linalg::Matrix;
use aec_core::nn::{cross_entropy, grad, init_network, Activation, LayerSpec, Network, TrainConfig};
use aec_core::rng::{self, Rng};
use aec_core::transfer::{adapt, append_adaptation, build_filter, extract, strip_output, FilterVariant, SourceModel};
use aec_core::transforms::{pca_fit, DctSpec, TransformModel};
use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};

type Outcome = Result<String, String>;

fn rng(seed: u64) -> Rng {
    rng::stream(seed, 7000)
}

fn normal(r: &mut Rng) -> f64 {
    StandardNormal.sample(r)
}

fn normal_matrix(r: &mut Rng, rows: usize, cols: usize) -> Matrix {
    Matrix::from_vec(rows, cols, (0..rows * cols).map(|_| normal(r)).collect()).unwrap()
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// Gaussian clusters with centres drawn at `spread` scale.
fn clusters(r: &mut Rng, classes: usize, per_class: usize, dims: usize, spread: f64) -> (Matrix, Vec<usize>) {
    let centres: Vec<Vec<f64>> = (0..classes).map(|_| (0..dims).map(|_| spread * normal(r)).collect()).collect();
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for i in 0..classes * per_class {
        let c = i % classes;
        rows.push(centres[c].iter().map(|m| m + normal(r)).collect::<Vec<f64>>());
        labels.push(c);
    }
    (Matrix::from_rows(&rows).unwrap(), labels)
}

fn gradient_oracle() -> Outcome {
    const H: f64 = 1e-5;
    let start = Instant::now();
    let mut r = rng(1);
    let mut worst: f64 = 0.0;
    let nets = 24;
    for trial in 0..nets {
        let depth = r.random_range(1..=3);
        let dims: Vec<usize> = (0..=depth).map(|_| r.random_range(2..=16)).collect();
        let specs: Vec<LayerSpec> = (0..depth)
            .map(|i| {
                let act = if i + 1 == depth { Activation::Softmax } else { Activation::Sigmoid };
                LayerSpec::new(dims[i], dims[i + 1], act)
            })
            .collect();
        let mut net = init_network(&specs, trial).unwrap();
        for l in &mut net.layers {
            l.bias.iter_mut().for_each(|b| *b = r.random_range(-0.5..0.5));
        }
        let batch = r.random_range(1..=6);
        let x = normal_matrix(&mut r, batch, dims[0]);
        let labels: Vec<usize> = (0..batch).map(|_| r.random_range(0..dims[depth])).collect();
        let g = grad(&net, &x, &labels).unwrap();
        let ce = |n: &Network| cross_entropy(n, &x, &labels).unwrap();
        for l in 0..net.layers.len() {
            for p in 0..net.layers[l].weights.as_slice().len() + net.layers[l].bias.len() {
                let nw = net.layers[l].weights.as_slice().len();
                let bump = |n: &mut Network, d: f64| {
                    if p < nw {
                        n.layers[l].weights.as_mut_slice()[p] += d;
                    } else {
                        n.layers[l].bias[p - nw] += d;
                    }
                };
                let (mut plus, mut minus) = (net.clone(), net.clone());
                bump(&mut plus, H);
                bump(&mut minus, -H);
                let fd = (ce(&plus) - ce(&minus)) / (2.0 * H);
                let an = if p < nw { g.weights[l].as_slice()[p] } else { g.biases[l][p - nw] };
                worst = worst.max((an - fd).abs() / an.abs().max(fd.abs()).max(1e-6));
            }
        }
    }
    let t = start.elapsed();
    check(worst < 1e-4 && t < Duration::from_secs(10), format!("{nets} nets, max rel err {worst:.2e}, {t:.2?}"))
}

fn dft_oracle() -> Outcome {
    let n = 1024;
    let cos: Vec<f64> = (0..n).map(|m| (2.0 * PI * m as f64 / n as f64).cos()).collect();
    let sin: Vec<f64> = (0..n).map(|m| (2.0 * PI * m as f64 / n as f64).sin()).collect();
    let fft = Fft::new(n).unwrap();
    let mut r = rng(2);
    let (mut worst, mut parseval): (f64, f64) = (0.0, 0.0);
    for _ in 0..100 {
        let x: Vec<f64> = (0..n).map(|_| r.random_range(-1.0..1.0)).collect();
        let mag = fft.magnitude(&x).unwrap();
        let mut energy = 0.0;
        for k in 0..n {
            let (mut re, mut im) = (0.0, 0.0);
            for (t, &v) in x.iter().enumerate() {
                re += v * cos[(k * t) % n];
                im -= v * sin[(k * t) % n];
            }
            energy += re * re + im * im;
            if k < mag.len() {
                worst = worst.max((mag[k] - re.hypot(im)).abs());
            }
        }
        let time = n as f64 * x.iter().map(|v| v * v).sum::<f64>();
        parseval = parseval.max(((energy - time) / time).abs());
        let mut re = x.clone();
        let mut im = vec![0.0; n];
        fft.forward(&mut re, &mut im);
        let fast: f64 = re.iter().zip(&im).map(|(a, b)| a * a + b * b).sum();
        parseval = parseval.max(((fast - time) / time).abs());
    }
    check(worst <= 1e-9 && parseval <= 1e-6, format!("100 frames, max |diff| {worst:.2e}, Parseval rel {parseval:.2e}"))
}

fn normalized(x: Matrix, p: Provenance) -> FeatureMatrix {
    let fm = FeatureMatrix::from_matrix(x);
    let stats = fit_norm_stats(&[&fm]).unwrap();
    apply_norm(&fm, &stats).unwrap().with_provenance(p)
}

fn small_source(seed: u64) -> SourceModel {
    let mut r = rng(30 + seed);
    let (x, labels) = clusters(&mut r, 5, 40, 8, 3.0);
    let cfg = TrainConfig { lr0: 0.05, batch_size: 16, max_epochs_per_stage: 20, seed, ..Default::default() };
    let classes = (0..5).map(|c| format!("s{c}")).collect();
    SourceModel::train(&normalized(x, Provenance::SOURCE_TRAIN), &labels, classes, &[12, 12, 12], &cfg).unwrap().0
}

fn freeze_invariant() -> Outcome {
    let src = small_source(3);
    let mut r = rng(4);
    let (x, labels) = clusters(&mut r, 3, 40, 8, 3.0);
    let target = normalized(x, Provenance::TARGET_TRAIN);
    let composite = append_adaptation(&strip_output(&src.network).unwrap(), 10, 10, 3, 5).unwrap();
    let cfg = TrainConfig {
        lr0: 0.05,
        batch_size: 16,
        n_lr_stages: 1,
        max_epochs_per_stage: 60,
        patience_epochs: 1000,
        seed: 6,
        ..Default::default()
    };
    let (adapted, report) = adapt(&composite, &target, &labels, &cfg).unwrap();
    let same = (0..3).all(|l| {
        let (a, b) = (&adapted.layers[l], &src.network.layers[l]);
        let bits = |m: &Matrix| m.as_slice().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        bits(&a.weights) == bits(&b.weights) && a.bias.iter().zip(&b.bias).all(|(p, q)| p.to_bits() == q.to_bits())
    });
    let moved = adapted.layers[3].weights != composite.layers[3].weights;
    let epochs = report.epochs.len();
    check(same && moved && epochs >= 50, format!("{epochs} epochs, trunk bit-identical: {same}, adaptation layers updated: {moved}"))
}

fn em_monotonicity() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut fits = 0;
    for d in 0..10u64 {
        let mut r = rng(100 + d);
        let dims = r.random_range(1..=4);
        let (x, _) = clusters(&mut r, 3, 60, dims, 4.0);
        let n = x.rows() as f64;
        let fm = FeatureMatrix::from_matrix(x);
        for k in [1, 2, 8] {
            for init in [GmmInit::RandomFrames, GmmInit::KMeans] {
                let opts = GmmOptions { components: k, max_iter: 50, rel_tol: 0.0, init, ..Default::default() };
                let (_, rep) = gmm_fit(&[&fm], &opts, d).unwrap();
                // per-frame log-likelihood
                for w in rep.log_likelihood[0].windows(2) {
                    worst = worst.max((w[0] - w[1]) / n);
                }
                fits += 1;
            }
        }
    }
    check(worst <= 1e-8, format!("{fits} fits, largest per-frame decrease {worst:.2e}"))
}

/// Dual objective written out for two points with opposite labels, where the
/// equality constraint forces both multipliers to the same value `a`.
fn two_point_dual(a: f64, k12: f64) -> f64 {
    2.0 * a - a * a * (1.0 - k12)
}

fn svm_oracle() -> Outcome {
    let positions = [[-1.0, 0.0], [0.0, 0.0], [1.5, 0.0], [-1.0, 1.0], [0.0, 1.0], [1.5, 1.0]];
    let mut worst: f64 = 0.0;
    let mut problems = 0;
    for i in 0..positions.len() {
        for j in i + 1..positions.len() {
            for c in [0.1, 1.0, 10.0] {
                for gamma in [0.5, 2.0] {
                    let x = Matrix::from_rows(&[positions[i], positions[j]]).unwrap();
                    let sol = smo_solve(&x, &[1.0, -1.0], &SvmParams { c, gamma, tol: 1e-8, ..Default::default() }).unwrap();
                    let d2: f64 = positions[i].iter().zip(&positions[j]).map(|(a, b)| (a - b) * (a - b)).sum();
                    let k12 = (-gamma * d2).exp();
                    let steps = 200_000;
                    let best = (0..=steps).map(|s| two_point_dual(c * s as f64 / steps as f64, k12)).fold(f64::NEG_INFINITY, f64::max);
                    let mine = two_point_dual(sol.alpha[0], k12);
                    worst = worst.max((mine - best).abs()).max((sol.objective - best).abs());
                    problems += 1;
                }
            }
        }
    }
    let mut r = rng(5);
    let mut kkt: f64 = 0.0;
    for _ in 0..10 {
        let x = normal_matrix(&mut r, 50, 3);
        let y: Vec<f64> = x.iter_rows().map(|row| if row[0] + 0.5 * row[1] + 0.4 * normal(&mut r) > 0.0 { 1.0 } else { -1.0 }).collect();
        let (c, gamma) = (r.random_range(0.5..20.0), r.random_range(0.05..2.0));
        let sol = smo_solve(&x, &y, &SvmParams { c, gamma, ..Default::default() }).unwrap();
        for i in 0..50 {
            let f: f64 = (0..50)
                .map(|j| {
                    let d2: f64 = x.row(i).iter().zip(x.row(j)).map(|(a, b)| (a - b) * (a - b)).sum();
                    sol.alpha[j] * y[j] * (-gamma * d2).exp()
                })
                .sum::<f64>()
                + sol.bias;
            let m = y[i] * f;
            let a = sol.alpha[i];
            let v = if a <= 1e-12 {
                (1.0 - m).max(0.0)
            } else if a >= c - 1e-12 {
                (m - 1.0).max(0.0)
            } else {
                (m - 1.0).abs()
            };
            kkt = kkt.max(v);
        }
    }
    check(
        worst <= 1e-4 && kkt <= 1e-3,
        format!("{problems} two-point problems, max dual gap {worst:.2e}; 10 x 50-point problems, max KKT residual {kkt:.2e}"),
    )
}

fn transforms() -> Outcome {
    let dct = DctSpec::new(150, 150).unwrap();
    let mut ortho: f64 = 0.0;
    for a in 0..150 {
        for b in 0..150 {
            let dot: f64 = dct.basis.row(a).iter().zip(dct.basis.row(b)).map(|(p, q)| p * q).sum();
            ortho = ortho.max((dot - if a == b { 1.0 } else { 0.0 }).abs());
        }
    }
    let mut r = rng(6);
    let mut round: f64 = 0.0;
    for _ in 0..20 {
        let x: Vec<f64> = (0..150).map(|_| normal(&mut r)).collect();
        let back = dct.inverse(&dct.forward(&x).unwrap()).unwrap();
        round = round.max(x.iter().zip(&back).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
    }
    // correlated data: random mixing of independent sources
    let mix = normal_matrix(&mut r, 12, 12);
    let src = normal_matrix(&mut r, 500, 12);
    let data: Vec<Vec<f64>> = src
        .iter_rows()
        .map(|s| (0..12).map(|j| (0..12).map(|i| s[i] * mix.get(i, j)).sum()).collect())
        .collect();
    let fm = FeatureMatrix::from_matrix(Matrix::from_rows(&data).unwrap());
    let pca = pca_fit(&fm, 8).unwrap();
    let proj = TransformModel::Pca(pca.clone()).apply(&fm).unwrap().values;
    let n = proj.rows() as f64;
    let means: Vec<f64> = (0..8).map(|j| proj.iter_rows().map(|p| p[j]).sum::<f64>() / n).collect();
    let mut off: f64 = 0.0;
    for a in 0..8 {
        for b in 0..a {
            let cov = proj.iter_rows().map(|p| (p[a] - means[a]) * (p[b] - means[b])).sum::<f64>() / n;
            off = off.max(cov.abs());
        }
    }
    let rel = off / pca.eigenvalues[0];
    check(
        ortho <= 1e-10 && round <= 1e-9 && rel < 1e-6,
        format!("DCT-150 orthonormality {ortho:.2e}, round trip {round:.2e}, PCA off-diagonal / top eigenvalue {rel:.2e}"),
    )
}

fn snr_mixer() -> Outcome {
    let mut r = rng(7);
    let mut worst: f64 = 0.0;
    let mut mixes = 0;
    for pair in 0..50u64 {
        let n = r.random_range(4000..16000);
        let amp = r.random_range(0.02..0.08);
        let s: Vec<f64> = (0..n).map(|_| amp * normal(&mut r)).collect();
        let noise_len = n + r.random_range(0..8000);
        let q: Vec<f64> = (0..noise_len).map(|t| 0.1 * normal(&mut r) + 0.05 * (t as f64 * 0.01).sin()).collect();
        let signal = AudioSegment::new(s.clone(), 16_000).unwrap();
        let noise = AudioSegment::new(q, 16_000).unwrap();
        for snr in [5.0, 10.0, 15.0] {
            let m = mix_noise(&signal, &noise, snr, pair).unwrap();
            if m.clipped > 0 {
                return Err(format!("pair {pair} clipped at {snr} dB"));
            }
            let ps: f64 = s.iter().map(|v| v * v).sum();
            let pn: f64 = m.segment.samples().iter().zip(&s).map(|(y, x)| (y - x) * (y - x)).sum();
            worst = worst.max((10.0 * (ps / pn).log10() - snr).abs());
            mixes += 1;
        }
    }
    check(worst <= 0.01, format!("{mixes} mixtures, max |measured - requested| {worst:.2e} dB"))
}

fn artifacts_equal(a: &std::path::Path, b: &std::path::Path) -> bool {
    [files::NORM, files::SOURCE, files::COMPOSITE, files::FILTER, files::FEATURES, files::TRANSFORM, files::CLASSIFIER, files::REPORT]
        .iter()
        .all(|f| std::fs::read(a.join(f)).ok() == std::fs::read(b.join(f)).ok())
}

fn clean_accuracy(r: &EvalReport) -> f64 {
    r.condition("clean").map_or(0.0, |c| c.accuracy)
}

fn synthetic_end_to_end() -> Outcome {
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let cfg = common::fast_config(2024, "C");
    let prepared = common::prepare_synth(dir.path(), &cfg);
    let (a, b) = (dir.path().join("run1"), dir.path().join("run2"));
    let first = run_pipeline(&cfg, &prepared.manifest, &a, 2).map_err(|e| e.to_string())?;
    let second = run_pipeline(&cfg, &prepared.manifest, &b, 1).map_err(|e| e.to_string())?;
    let identical = first.report == second.report && artifacts_equal(&a, &b);
    let acc = clean_accuracy(&first.report);
    let t = start.elapsed();

    let cfg_b = common::fast_config(2024, "B");
    let no_transfer = run_pipeline(&cfg_b, &prepared.manifest, &dir.path().join("b"), 2).map_err(|e| e.to_string())?;
    println!(
        "info  [C] vs [B] on synthetic data: clean {:.1} vs {:.1}, all-condition average {:.1} vs {:.1}",
        acc,
        clean_accuracy(&no_transfer.report),
        first.report.grand_average,
        no_transfer.report.grand_average
    );
    check(
        acc >= 95.0 && identical && t < Duration::from_secs(600),
        format!("clean accuracy {acc:.1}%, two runs bit-identical: {identical}, {t:.1?}"),
    )
}

fn report_fixture() -> Outcome {
    let row = |label: &str, v: [f64; 7]| ReportRow { label: label.into(), values: v.iter().map(|&x| Some(x)).collect() };
    let table = ReportTable {
        style: ReportStyle::Table4,
        title: "Accuracy by condition".into(),
        groups: vec![("Living".into(), 3), ("Office".into(), 3), ("Clean".into(), 1)],
        columns: ["5", "10", "15", "5", "10", "15", ""].map(String::from).to_vec(),
        rows: vec![
            row("MFCC", [79.7, 85.5, 94.5, 81.1, 87.6, 95.1, 96.1]),
            row("[C] Proposed features", [92.5, 96.3, 96.3, 93.7, 96.5, 96.5, 98.9]),
        ],
    };
    let text = render_report(&table).map_err(|e| e.to_string())?;
    let last = |label: &str| {
        text.lines().find(|l| l.starts_with(label)).and_then(|l| l.split_whitespace().last()).unwrap_or("").to_string()
    };
    let (mfcc, proposed) = (last("MFCC"), last("[C]"));
    check(mfcc == "88.5" && proposed == "95.8", format!("rendered averages MFCC {mfcc}, [C] {proposed}"))
}

fn ablation_link() -> Outcome {
    let src = small_source(8);
    let composite = append_adaptation(&strip_output(&src.network).unwrap(), 10, 7, 3, 9).unwrap();
    let fp = src.norm_fingerprint;
    let mut r = rng(9);
    let x = FeatureMatrix { norm_fingerprint: Some(fp), normalized: true, ..FeatureMatrix::from_matrix(normal_matrix(&mut r, 200, 8)) };
    let c = extract(&build_filter(&composite, FilterVariant::Proposed, Some(fp)).unwrap(), &x).unwrap().values;
    let a = extract(&build_filter(&composite, FilterVariant::WithActivation, Some(fp)).unwrap(), &x).unwrap().values;
    let worst = a.as_slice().iter().zip(c.as_slice()).map(|(a, c)| (a - 1.0 / (1.0 + (-c).exp())).abs()).fold(0.0, f64::max);
    check(worst <= 1e-9 && a.cols() == 7, format!("{} values, max |A - sigmoid(C)| {worst:.2e}", a.as_slice().len()))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("gradient oracle", gradient_oracle),
        ("DFT oracle", dft_oracle),
        ("freeze invariant", freeze_invariant),
        ("EM monotonicity", em_monotonicity),
        ("SVM oracle", svm_oracle),
        ("transforms", transforms),
        ("SNR mixer", snr_mixer),
        ("synthetic end-to-end", synthetic_end_to_end),
        ("report fixture", report_fixture),
        ("ablation link", ablation_link),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (name, run) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        match std::panic::catch_unwind(run) {
            Ok(Ok(detail)) => println!("PASS  {name}: {detail}"),
            Ok(Err(detail)) => {
                failed += 1;
                println!("FAIL  {name}: {detail}");
            }
            Err(_) => {
                failed += 1;
                println!("FAIL  {name}: panicked");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
