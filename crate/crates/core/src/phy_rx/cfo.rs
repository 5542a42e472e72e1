use super::detect::{derotate, stage_cfo};
use super::{DetectionResult, RxError};
use crate::waveform::MultiChannelCapture;
use num_complex::Complex64;
use std::f64::consts::PI;

/// Two-stage CFO estimate.
///
/// `coarse_hz` comes from lag-64 products over L-STF and is unambiguous within
/// ±625 kHz. `fine_hz` is the residual from lag-256 products over L-LTF after
/// removing `coarse_hz`, unambiguous within ±156.25 kHz.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CfoEstimate {
    pub coarse_hz: f64,
    pub fine_hz: f64,
    pub combined_hz: f64,
}

impl CfoEstimate {
    pub fn zero() -> Self {
        Self {
            coarse_hz: 0.0,
            fine_hz: 0.0,
            combined_hz: 0.0,
        }
    }
}

// Windows relative to fine_start. The first 64 samples of each training
// field are skipped: delayed paths smear the previous field into them.
const STF_PAIRS: std::ops::Range<usize> = 64..576;
const LTF_START: usize = 640;
const LTF_PAIRS: std::ops::Range<usize> = 64..384;
const NEEDED: usize = 1280;

/// Joint estimate over all channels; they share one local oscillator.
pub fn estimate_cfo(
    capture: &MultiChannelCapture,
    detection: &DetectionResult,
) -> Result<CfoEstimate, RxError> {
    let s = detection.fine_start;
    if s + NEEDED > capture.len() {
        return Err(RxError::Bounds {
            start: s,
            end: s + NEEDED,
            len: capture.len(),
        });
    }
    let fs = capture.sample_rate;
    let stf = derotate(capture, s, 640, 0.0);
    let coarse_hz = stage_cfo(&stf, STF_PAIRS, 64, fs);
    // continue the coarse derotation phase from fine_start into L-LTF
    let mut ltf = derotate(capture, s + LTF_START, 640, coarse_hz);
    let base = Complex64::from_polar(1.0, -2.0 * PI * coarse_hz * LTF_START as f64 / fs);
    for ch in ltf.iter_mut() {
        ch.iter_mut().for_each(|x| *x *= base);
    }
    let fine_hz = stage_cfo(&ltf, LTF_PAIRS, 256, fs);
    Ok(CfoEstimate {
        coarse_hz,
        fine_hz,
        combined_hz: coarse_hz + fine_hz,
    })
}

/// Multiplies every channel by `e^{-j2π·combined·(n - fine_start)/fs}`.
pub fn correct_cfo(
    capture: &MultiChannelCapture,
    cfo: &CfoEstimate,
    detection: &DetectionResult,
) -> MultiChannelCapture {
    let mut out = capture.clone();
    let step = -2.0 * PI * cfo.combined_hz / capture.sample_rate;
    let origin = detection.fine_start as f64;
    for ch in out.channels_mut() {
        for (n, x) in ch.iter_mut().enumerate() {
            *x *= Complex64::from_polar(1.0, step * (n as f64 - origin));
        }
    }
    out
}
