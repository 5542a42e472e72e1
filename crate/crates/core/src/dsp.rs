//! Small FFT helpers shared by the synthesizer and the receiver.
//!
//! Normalization: [`ofdm_modulate`] is the plain inverse DFT scaled by `1/N`,
//! so a symbol with spectrum `X` has time-domain energy `(1/N)·Σ|X_k|²`.
//! [`ofdm_demodulate`] is the unscaled forward DFT, the exact inverse of
//! [`ofdm_modulate`].

use num_complex::Complex64;
use rustfft::FftPlanner;

/// Maps a signed subcarrier index onto an FFT bin.
pub fn bin_of(k: i32, n: usize) -> usize {
    k.rem_euclid(n as i32) as usize
}

/// Maps an FFT bin back onto a signed subcarrier index in `[-N/2, N/2)`.
pub fn signed_of(bin: usize, n: usize) -> i32 {
    if bin < n / 2 {
        bin as i32
    } else {
        bin as i32 - n as i32
    }
}

pub fn ofdm_modulate(spectrum: &[Complex64]) -> Vec<Complex64> {
    let n = spectrum.len();
    let mut buf = spectrum.to_vec();
    FftPlanner::new().plan_fft_inverse(n).process(&mut buf);
    let scale = 1.0 / n as f64;
    buf.iter_mut().for_each(|x| *x *= scale);
    buf
}

pub fn ofdm_demodulate(samples: &[Complex64]) -> Vec<Complex64> {
    let mut buf = samples.to_vec();
    FftPlanner::new()
        .plan_fft_forward(samples.len())
        .process(&mut buf);
    buf
}

/// Mean of `|x|²`, zero for an empty slice.
pub fn mean_power(samples: &[Complex64]) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    samples.iter().map(|x| x.norm_sqr()).sum::<f64>() / samples.len() as f64
}
