//! Iterative radix-2 complex FFT and the one-sided spectrum helpers built on it.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{Error, Result};
use crate::math;

/// Precomputed plan for a power-of-two transform size.
#[derive(Debug, Clone)]
pub struct Fft {
    n: usize,
    // exp(-2*pi*i*k/n) for k in 0..n/2, each evaluated directly
    tw_re: Vec<f64>,
    tw_im: Vec<f64>,
}

impl Fft {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 || !n.is_power_of_two() {
            return Err(Error::BadFrameLength(n));
        }
        let half = n / 2;
        let mut tw_re = Vec::with_capacity(half);
        let mut tw_im = Vec::with_capacity(half);
        for k in 0..half {
            let ang = -2.0 * PI * k as f64 / n as f64;
            tw_re.push(math::cos(ang));
            tw_im.push(math::sin(ang));
        }
        Ok(Self { n, tw_re, tw_im })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Forward transform in place: `X[k] = sum_n x[n] e^{-2 pi i k n / N}`.
    pub fn forward(&self, re: &mut [f64], im: &mut [f64]) {
        let n = self.n;
        assert!(re.len() == n && im.len() == n, "fft buffer length must equal plan size");

        // bit-reversal permutation
        let bits = n.trailing_zeros();
        for i in 0..n {
            let j = i.reverse_bits() >> (usize::BITS - bits);
            if j > i {
                re.swap(i, j);
                im.swap(i, j);
            }
        }

        let mut len = 2;
        while len <= n {
            let half = len / 2;
            let stride = n / len;
            for start in (0..n).step_by(len) {
                for k in 0..half {
                    let (wr, wi) = (self.tw_re[k * stride], self.tw_im[k * stride]);
                    let a = start + k;
                    let b = a + half;
                    let tr = re[b] * wr - im[b] * wi;
                    let ti = re[b] * wi + im[b] * wr;
                    re[b] = re[a] - tr;
                    im[b] = im[a] - ti;
                    re[a] += tr;
                    im[a] += ti;
                }
            }
            len <<= 1;
        }
    }

    /// Real-input transform returning bins `0..n/2` (Nyquist excluded) as
    /// separate real and imaginary parts.
    pub fn half_spectrum(&self, frame: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        if frame.len() != self.n {
            return Err(Error::BadFrameLength(frame.len()));
        }
        let mut re = frame.to_vec();
        let mut im = vec![0.0; self.n];
        self.forward(&mut re, &mut im);
        re.truncate(self.n / 2);
        im.truncate(self.n / 2);
        Ok((re, im))
    }

    pub fn magnitude(&self, frame: &[f64]) -> Result<Vec<f64>> {
        let (re, im) = self.half_spectrum(frame)?;
        Ok(re.iter().zip(&im).map(|(&r, &i)| math::hypot(r, i)).collect())
    }
}

/// Magnitudes of bins `0..N/2` of an `N`-point DFT of an already windowed frame.
pub fn dft_magnitude(frame: &[f64]) -> Result<Vec<f64>> {
    Fft::new(frame.len())?.magnitude(frame)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_frame_gives_zero_spectrum() {
        let mag = dft_magnitude(&[0.0; 1024]).unwrap();
        assert_eq!(mag.len(), 512);
        assert!(mag.iter().all(|&m| m == 0.0));
    }

    #[test]
    fn impulse_is_flat() {
        let mut x = [0.0; 1024];
        x[0] = 1.0;
        let mag = dft_magnitude(&x).unwrap();
        assert!(mag.iter().all(|&m| (m - 1.0).abs() < 1e-12));
    }

    #[test]
    fn rejects_non_power_of_two() {
        assert_eq!(dft_magnitude(&[0.0; 1000]), Err(Error::BadFrameLength(1000)));
        assert_eq!(dft_magnitude(&[0.0; 1]), Err(Error::BadFrameLength(1)));
    }
}
