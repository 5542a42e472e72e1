use super::{MultiChannelCapture, PREAMBLE_LEN};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use std::f64::consts::PI;

/// Receiver hardware model: one shared CFO, constant per-channel phase
/// offsets, white Gaussian noise and a leading noise-only stretch.
#[derive(Debug, Clone, PartialEq)]
pub struct ImpairmentSpec {
    pub cfo_hz: f64,
    /// Radians, one per channel; entry 0 is the reference and is normally 0.
    pub phase_offsets: Vec<f64>,
    /// `None` is noiseless.
    pub snr_db: Option<f64>,
    pub start_offset: usize,
}

impl ImpairmentSpec {
    pub fn none(n_channels: usize) -> Self {
        Self {
            cfo_hz: 0.0,
            phase_offsets: vec![0.0; n_channels],
            snr_db: None,
            start_offset: 0,
        }
    }
}

/// Mean sample energy over the frames recorded in the capture truth, or over
/// the whole capture when there is none.
fn in_frame_power(capture: &MultiChannelCapture) -> f64 {
    let len = capture.len();
    let ranges: Vec<(usize, usize)> = match &capture.truth {
        Some(frames) if !frames.is_empty() => frames
            .iter()
            .map(|f| (f.start.min(len), (f.start + PREAMBLE_LEN).min(len)))
            .collect(),
        _ => vec![(0, len)],
    };
    let mut energy = 0.0;
    let mut count = 0usize;
    for ch in capture.channels() {
        for &(a, b) in &ranges {
            energy += ch[a..b].iter().map(|x| x.norm_sqr()).sum::<f64>();
            count += b - a;
        }
    }
    if count == 0 {
        0.0
    } else {
        energy / count as f64
    }
}

/// Applies `spec` to `capture`.
///
/// Sample `n` of the output (after the prepended `start_offset` samples) is
/// `x[n]·e^{j2π·cfo·n/fs}·e^{j·offset_m} + w[n]`. Noise variance is set from
/// the in-frame signal power measured before the offsets are applied.
///
/// # Panics
/// If `spec.phase_offsets` does not have one entry per channel.
pub fn apply_impairments<R: Rng + ?Sized>(
    capture: &MultiChannelCapture,
    spec: &ImpairmentSpec,
    rng: &mut R,
) -> MultiChannelCapture {
    assert_eq!(
        spec.phase_offsets.len(),
        capture.n_channels(),
        "one phase offset per channel"
    );
    let fs = capture.sample_rate;
    let noise_var = spec
        .snr_db
        .map(|snr| in_frame_power(capture) / 10f64.powf(snr / 10.0));
    let n_out = capture.len() + spec.start_offset;
    let step = 2.0 * PI * spec.cfo_hz / fs;

    let channels: Vec<Vec<Complex64>> = capture
        .channels()
        .iter()
        .zip(&spec.phase_offsets)
        .map(|(ch, offset)| {
            let mut out = vec![Complex64::new(0.0, 0.0); n_out];
            for (i, x) in ch.iter().enumerate() {
                let n = i + spec.start_offset;
                out[n] = x * Complex64::from_polar(1.0, step * n as f64 + offset);
            }
            out
        })
        .collect();

    let mut channels = channels;
    if let Some(var) = noise_var {
        let normal = Normal::new(0.0, (var / 2.0).sqrt()).expect("finite noise variance");
        for ch in channels.iter_mut() {
            for x in ch.iter_mut() {
                *x += Complex64::new(normal.sample(rng), normal.sample(rng));
            }
        }
    }

    let truth = capture.truth.as_ref().map(|frames| {
        frames
            .iter()
            .map(|f| {
                let mut f = f.clone();
                f.start += spec.start_offset;
                f.cfo_hz = spec.cfo_hz;
                f.phase_offsets = spec.phase_offsets.clone();
                f
            })
            .collect()
    });

    MultiChannelCapture {
        channels,
        sample_rate: fs,
        truth,
    }
}
