//! Additive-noise mixing at a target SNR and room-impulse-response filtering.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};

use super::AudioSegment;
use crate::error::{Error, Result};
use crate::math;
use crate::rng;

/// Result of an augmentation that may have clipped samples to `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Augmented {
    pub segment: AudioSegment,
    pub clipped: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MixOutcome {
    pub segment: AudioSegment,
    /// Gain applied to the noise crop.
    pub alpha: f64,
    /// Start of the noise crop.
    pub offset: usize,
    pub clipped: usize,
}

fn mean_power(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64
}

fn clip(samples: &mut [f64]) -> usize {
    let mut n = 0;
    for s in samples {
        if *s > 1.0 {
            *s = 1.0;
            n += 1;
        } else if *s < -1.0 {
            *s = -1.0;
            n += 1;
        }
    }
    n
}

/// SNR in dB of `mixed` relative to its clean component.
pub fn measure_snr_db(clean: &[f64], mixed: &[f64]) -> f64 {
    let noise: Vec<f64> = mixed.iter().zip(clean).map(|(m, c)| m - c).collect();
    10.0 * math::log10(mean_power(clean) / mean_power(&noise))
}

/// Adds a randomly positioned crop of `noise` scaled so the result has the
/// requested SNR. Powers are mean squares over the overlapping span.
pub fn mix_noise(signal: &AudioSegment, noise: &AudioSegment, snr_db: f64, seed: u64) -> Result<MixOutcome> {
    if noise.len() < signal.len() {
        return Err(Error::NoiseTooShort { noise: noise.len(), signal: signal.len() });
    }
    if signal.is_empty() {
        return Err(Error::SilentSignal);
    }
    let p_s = mean_power(signal.samples());
    if p_s == 0.0 {
        return Err(Error::SilentSignal);
    }
    let mut r = rng::stream(seed, rng::STREAM_NOISE);
    let offset = r.random_range(0..=noise.len() - signal.len());
    let crop = &noise.samples()[offset..offset + signal.len()];
    let p_n = mean_power(crop);
    if p_n == 0.0 {
        return Err(Error::SilentNoise);
    }
    let alpha = math::sqrt(p_s / (p_n * math::powf(10.0, snr_db / 10.0)));
    let mut mixed: Vec<f64> = signal.samples().iter().zip(crop).map(|(s, n)| s + alpha * n).collect();
    let clipped = clip(&mut mixed);
    if clipped > 0 {
        log::warn!("noise mixing at {snr_db} dB clipped {clipped} samples of {}", signal.source_path);
    }
    Ok(MixOutcome { segment: signal.with_samples(mixed), alpha, offset, clipped })
}

/// Full linear convolution with `rir`, truncated to the signal length.
/// Zero taps are skipped, so an impulse response of `[1]` is an exact identity.
pub fn convolve_rir(signal: &AudioSegment, rir: &[f64]) -> Result<Augmented> {
    if rir.is_empty() {
        return Err(Error::EmptyRir);
    }
    let x = signal.samples();
    let mut y = vec![0.0; x.len()];
    for (k, &h) in rir.iter().enumerate() {
        if h == 0.0 || k >= x.len() {
            continue;
        }
        for (yi, &xi) in y[k..].iter_mut().zip(x) {
            *yi += h * xi;
        }
    }
    let clipped = clip(&mut y);
    if clipped > 0 {
        log::warn!("reverberation clipped {clipped} samples of {}", signal.source_path);
    }
    Ok(Augmented { segment: signal.with_samples(y), clipped })
}

/// Gaussian white noise under an exponential envelope whose energy falls by
/// 60 dB after `rt60_s` seconds. Scaled to unit total energy.
pub fn synth_rir(rt60_s: f64, length_s: f64, sample_rate: u32, seed: u64) -> Result<Vec<f64>> {
    if !(rt60_s > 0.0) || !(length_s > 0.0) {
        return Err(Error::BadConfig("rt60 and length must be positive".into()));
    }
    let n = math::round(length_s * sample_rate as f64) as usize;
    if n == 0 {
        return Err(Error::EmptyRir);
    }
    // amplitude exp(-a t): 20 log10(e^{-a T}) = -60  =>  a = 3 ln 10 / T
    let decay = 3.0 * math::ln(10.0) / (rt60_s * sample_rate as f64);
    let mut r = rng::stream(seed, rng::STREAM_RIR);
    let mut h: Vec<f64> = (0..n)
        .map(|i| {
            let g: f64 = StandardNormal.sample(&mut r);
            g * math::exp(-decay * i as f64)
        })
        .collect();
    let energy: f64 = h.iter().map(|v| v * v).sum();
    let scale = 1.0 / math::sqrt(energy);
    for v in &mut h {
        *v *= scale;
    }
    Ok(h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::SAMPLE_RATE;

    fn seg(x: Vec<f64>) -> AudioSegment {
        AudioSegment::new(x, SAMPLE_RATE).unwrap()
    }

    fn tone(n: usize, amp: f64, f: f64) -> Vec<f64> {
        (0..n).map(|i| amp * math::sin(f * i as f64)).collect()
    }

    #[test]
    fn equal_power_zero_db_gives_unit_gain() {
        let s = seg(tone(1000, 0.3, 0.1));
        let n = seg(tone(1000, 0.3, 0.1));
        let out = mix_noise(&s, &n, 0.0, 1).unwrap();
        assert!((out.alpha - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ten_db_gain_formula() {
        // P_s = 1 for a +-1 square wave, P_n = 0.01 for a +-0.1 square wave.
        let s = seg((0..800).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect());
        let n = seg((0..800).map(|i| if i % 3 == 0 { 0.1 } else { -0.1 }).collect());
        let out = mix_noise(&s, &n, 10.0, 3).unwrap();
        assert!((out.alpha - 10f64.sqrt()).abs() < 1e-9, "alpha {}", out.alpha);
        // heavy clipping here, so measure against the unclipped construction
        let unclipped: Vec<f64> = s.samples().iter().zip(n.samples()).map(|(a, b)| a + out.alpha * b).collect();
        assert!((measure_snr_db(s.samples(), &unclipped) - 10.0).abs() < 1e-9);
        assert!(out.clipped > 0);
        assert!(out.segment.samples().iter().all(|v| v.abs() <= 1.0));
    }

    #[test]
    fn mix_errors() {
        let s = seg(tone(100, 0.3, 0.2));
        assert_eq!(mix_noise(&s, &seg(vec![0.0; 100]), 5.0, 0), Err(Error::SilentNoise));
        assert_eq!(mix_noise(&seg(vec![0.0; 100]), &s, 5.0, 0), Err(Error::SilentSignal));
        assert_eq!(
            mix_noise(&s, &seg(tone(50, 0.3, 0.2)), 5.0, 0),
            Err(Error::NoiseTooShort { noise: 50, signal: 100 })
        );
    }

    #[test]
    fn impulse_and_delay() {
        let x = tone(200, 0.5, 0.05);
        let s = seg(x.clone());
        assert_eq!(convolve_rir(&s, &[1.0]).unwrap().segment.samples(), &x[..]);
        let mut d = vec![0.0; 11];
        d[10] = 1.0;
        let y = convolve_rir(&s, &d).unwrap().segment;
        assert!(y.samples()[..10].iter().all(|&v| v == 0.0));
        assert_eq!(&y.samples()[10..], &x[..190]);
        assert_eq!(convolve_rir(&s, &[]), Err(Error::EmptyRir));
    }

    #[test]
    fn synthetic_rir_is_seeded() {
        let a = synth_rir(0.7, 0.1, SAMPLE_RATE, 4).unwrap();
        assert_eq!(a, synth_rir(0.7, 0.1, SAMPLE_RATE, 4).unwrap());
        assert_ne!(a, synth_rir(0.7, 0.1, SAMPLE_RATE, 5).unwrap());
        assert_eq!(a.len(), 1600);
    }
}
