mod common;

use aec_core::frontend::{dft_magnitude, Fft};

/// Direct O(N^2) DFT. Twiddles come from an exact `k*n mod N` table so the
/// oracle does not accumulate phase error.
fn naive_dft(x: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = x.len();
    let cos: Vec<f64> = (0..n).map(|m| (2.0 * std::f64::consts::PI * m as f64 / n as f64).cos()).collect();
    let sin: Vec<f64> = (0..n).map(|m| (2.0 * std::f64::consts::PI * m as f64 / n as f64).sin()).collect();
    let mut re = vec![0.0; n];
    let mut im = vec![0.0; n];
    for k in 0..n {
        let (mut sr, mut si) = (0.0, 0.0);
        for (t, &v) in x.iter().enumerate() {
            let m = (k * t) % n;
            sr += v * cos[m];
            si -= v * sin[m];
        }
        re[k] = sr;
        im[k] = si;
    }
    (re, im)
}

#[test]
fn fft_matches_naive_dft_on_random_frames() {
    let mut r = common::rng(1);
    let fft = Fft::new(1024).unwrap();
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let x = common::uniform_vec(&mut r, 1024, -1.0, 1.0);
        let (re, im) = naive_dft(&x);
        let mag = fft.magnitude(&x).unwrap();
        for k in 0..512 {
            worst = worst.max((mag[k] - re[k].hypot(im[k])).abs());
        }
    }
    assert!(worst <= 1e-9, "max |fft - dft| = {worst:e}");
}

#[test]
fn parseval_over_full_spectrum() {
    let mut r = common::rng(2);
    let fft = Fft::new(1024).unwrap();
    for _ in 0..20 {
        let x = common::uniform_vec(&mut r, 1024, -1.0, 1.0);
        let mut re = x.clone();
        let mut im = vec![0.0; 1024];
        fft.forward(&mut re, &mut im);
        let spec: f64 = re.iter().zip(&im).map(|(a, b)| a * a + b * b).sum();
        let time: f64 = 1024.0 * x.iter().map(|v| v * v).sum::<f64>();
        assert!(((spec - time) / time).abs() <= 1e-6);
    }
}

#[test]
fn cosine_lands_in_bin_64() {
    let x: Vec<f64> = (0..1024).map(|n| (2.0 * std::f64::consts::PI * 64.0 * n as f64 / 1024.0).cos()).collect();
    let (re, im) = naive_dft(&x);
    let mag = dft_magnitude(&x).unwrap();
    assert!((mag[64] - 512.0).abs() < 1e-9);
    assert!((re[64].hypot(im[64]) - 512.0).abs() < 1e-9);
    for (k, m) in mag.iter().enumerate() {
        if k != 64 {
            assert!(*m < 1e-9, "bin {k} = {m:e}");
        }
    }
}
