use super::RxError;
use crate::waveform::{build_preamble, MultiChannelCapture, OfdmNumerology, PREAMBLE_LEN};
use num_complex::Complex64;
use std::f64::consts::PI;

/// L-STF repetition lag.
pub const METRIC_LAG: usize = 64;
/// Autocorrelation window length.
pub const METRIC_WINDOW: usize = 512;
/// Consecutive above-threshold samples needed to open a detection.
pub const MIN_PLATEAU: usize = 128;
/// Fine timing search half-width around the coarse estimate.
const FINE_SEARCH: usize = 80;
/// Start of the two long L-LTF periods relative to L-STF.
const LTF_PERIODS_OFFSET: usize = 640 + 128;
const RESYNC_EVERY: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionResult {
    /// Strongest point of the autocorrelation plateau.
    pub coarse_start: usize,
    /// First L-STF sample from L-LTF cross-correlation.
    pub fine_start: usize,
    pub metric_peak: f64,
}

fn lag_products(capture: &MultiChannelCapture) -> (Vec<Complex64>, Vec<f64>) {
    let n = capture.len().saturating_sub(METRIC_LAG);
    let mut corr = vec![Complex64::new(0.0, 0.0); n];
    let mut energy = vec![0.0; n];
    for ch in capture.channels() {
        for i in 0..n {
            let lagged = ch[i + METRIC_LAG];
            corr[i] += ch[i] * lagged.conj();
            energy[i] += lagged.norm_sqr();
        }
    }
    (corr, energy)
}

/// `M[n] = |Σ_m Σ_{k<W} x[n+k]·x*[n+k+64]| / Σ_m Σ_{k<W} |x[n+k+64]|²`.
///
/// Windows whose energy is negligible against the capture average report 0.
pub fn detection_metric(capture: &MultiChannelCapture) -> Vec<f64> {
    if capture.len() < METRIC_WINDOW + METRIC_LAG {
        return Vec::new();
    }
    let (corr, energy) = lag_products(capture);
    let n_metric = corr.len() - METRIC_WINDOW + 1;
    let mean_energy = energy.iter().sum::<f64>() / energy.len() as f64;
    let floor = 1e-10 * mean_energy * METRIC_WINDOW as f64;

    let mut metric = Vec::with_capacity(n_metric);
    let mut num = Complex64::new(0.0, 0.0);
    let mut den = 0.0;
    for n in 0..n_metric {
        if n % RESYNC_EVERY == 0 {
            num = corr[n..n + METRIC_WINDOW].iter().sum();
            den = energy[n..n + METRIC_WINDOW].iter().sum();
        } else {
            num += corr[n + METRIC_WINDOW - 1] - corr[n - 1];
            den += energy[n + METRIC_WINDOW - 1] - energy[n - 1];
        }
        metric.push(if den > floor { num.norm() / den } else { 0.0 });
    }
    metric
}

/// Rotates `x[start..start+len]` of every channel by `e^{-j2π f (n-start)/fs}`.
fn derotated(
    capture: &MultiChannelCapture,
    start: usize,
    len: usize,
    cfo_hz: f64,
) -> Vec<Vec<Complex64>> {
    let step = -2.0 * PI * cfo_hz / capture.sample_rate;
    capture
        .channels()
        .iter()
        .map(|ch| {
            ch[start..start + len]
                .iter()
                .enumerate()
                .map(|(i, x)| x * Complex64::from_polar(1.0, step * i as f64))
                .collect()
        })
        .collect()
}

fn lag_cfo(channels: &[Vec<Complex64>], range: std::ops::Range<usize>, lag: usize, fs: f64) -> f64 {
    let acc: Complex64 = channels
        .iter()
        .map(|ch| {
            range
                .clone()
                .map(|n| ch[n] * ch[n + lag].conj())
                .sum::<Complex64>()
        })
        .sum();
    -acc.arg() / (2.0 * PI * lag as f64 / fs)
}

/// Finds frames by their L-STF plateau and times them against the known L-LTF.
///
/// Detections are non-overlapping and in time order. A capture shorter than
/// one preamble yields no detections.
pub fn detect_frame(
    capture: &MultiChannelCapture,
    threshold: f64,
) -> Result<Vec<DetectionResult>, RxError> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(RxError::Config(format!(
            "threshold {threshold} outside (0, 1)"
        )));
    }
    if capture.len() < PREAMBLE_LEN {
        return Ok(Vec::new());
    }
    let preamble = build_preamble(&OfdmNumerology::vht80())?;
    let template = &preamble.samples[LTF_PERIODS_OFFSET..LTF_PERIODS_OFFSET + 512];
    let metric = detection_metric(capture);

    let mut found = Vec::new();
    let mut i = 0;
    while i < metric.len() {
        if metric[i] <= threshold {
            i += 1;
            continue;
        }
        let mut j = i;
        while j < metric.len() && metric[j] > threshold {
            j += 1;
        }
        if j - i < MIN_PLATEAU {
            i = j;
            continue;
        }
        let (coarse, peak) = metric[i..j]
            .iter()
            .enumerate()
            .fold(
                (i, f64::MIN),
                |best, (k, v)| if *v > best.1 { (i + k, *v) } else { best },
            );

        match fine_timing(capture, coarse, template) {
            Some(fine) => {
                found.push(DetectionResult {
                    coarse_start: coarse,
                    fine_start: fine,
                    metric_peak: peak,
                });
                i = (fine + PREAMBLE_LEN).max(j);
            }
            None => i = j,
        }
    }
    Ok(found)
}

fn fine_timing(
    capture: &MultiChannelCapture,
    coarse: usize,
    template: &[Complex64],
) -> Option<usize> {
    let len = capture.len();
    let fs = capture.sample_rate;
    // pre-correct with a rough lag-64 estimate over the plateau
    let stf_span = 448;
    if coarse + stf_span + METRIC_LAG > len {
        return None;
    }
    let stf = derotated(capture, coarse, stf_span + METRIC_LAG, 0.0);
    let rough_cfo = lag_cfo(&stf, 0..stf_span, METRIC_LAG, fs);

    let lo = coarse.saturating_sub(FINE_SEARCH);
    let hi = (coarse + FINE_SEARCH).min(len.checked_sub(LTF_PERIODS_OFFSET + template.len())?);
    if lo > hi {
        return None;
    }
    let span_start = lo + LTF_PERIODS_OFFSET;
    let span_len = hi - lo + template.len();
    let window = derotated(capture, span_start, span_len, rough_cfo);

    let mut best = (lo, f64::MIN);
    for cand in lo..=hi {
        let off = cand - lo;
        let score: f64 = window
            .iter()
            .map(|ch| {
                ch[off..off + template.len()]
                    .iter()
                    .zip(template)
                    .map(|(y, t)| y * t.conj())
                    .sum::<Complex64>()
                    .norm_sqr()
            })
            .sum();
        if score > best.1 {
            best = (cand, score);
        }
    }
    Some(best.0)
}

pub(super) fn stage_cfo(
    channels: &[Vec<Complex64>],
    range: std::ops::Range<usize>,
    lag: usize,
    fs: f64,
) -> f64 {
    lag_cfo(channels, range, lag, fs)
}

pub(super) fn derotate(
    capture: &MultiChannelCapture,
    start: usize,
    len: usize,
    cfo_hz: f64,
) -> Vec<Vec<Complex64>> {
    derotated(capture, start, len, cfo_hz)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::waveform::{
        apply_channel, apply_impairments, build_preamble, ArrayGeometry, ChannelModel,
        ImpairmentSpec,
    };
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn noisy_frame(offset: usize, snr: Option<f64>, cfo: f64, seed: u64) -> MultiChannelCapture {
        let p = build_preamble(&OfdmNumerology::vht80()).unwrap();
        let frame = apply_channel(
            &p,
            &ChannelModel::single(0.2),
            &ArrayGeometry::default(),
            80e6,
        )
        .unwrap();
        let mut padded = frame.clone();
        for ch in padded.channels_mut() {
            ch.extend(std::iter::repeat_n(Complex64::new(0.0, 0.0), 2000));
        }
        let spec = ImpairmentSpec {
            cfo_hz: cfo,
            phase_offsets: vec![0.0; 4],
            snr_db: snr,
            start_offset: offset,
        };
        apply_impairments(&padded, &spec, &mut ChaCha8Rng::seed_from_u64(seed))
    }

    #[test]
    fn noiseless_frame_timed_exactly() {
        let cap = noisy_frame(5000, None, 0.0, 1);
        let det = detect_frame(&cap, 0.8).unwrap();
        assert_eq!(det.len(), 1);
        assert_eq!(det[0].fine_start, 5000);
        assert!(det[0].coarse_start.abs_diff(5000) <= 80);
        assert!(det[0].metric_peak <= 1.0 + 1e-9);
    }

    #[test]
    fn timing_survives_large_cfo() {
        let cap = noisy_frame(1234, Some(15.0), 600e3, 3);
        let det = detect_frame(&cap, 0.8).unwrap();
        assert_eq!(det.len(), 1);
        assert!(det[0].fine_start.abs_diff(1234) <= 2);
    }

    #[test]
    fn short_capture_returns_nothing() {
        let cap = MultiChannelCapture::zeros(4, 3199, 80e6);
        assert!(detect_frame(&cap, 0.8).unwrap().is_empty());
    }

    #[test]
    fn threshold_validated() {
        let cap = MultiChannelCapture::zeros(4, 4000, 80e6);
        assert!(detect_frame(&cap, 1.0).is_err());
        assert!(detect_frame(&cap, 0.0).is_err());
    }

    #[test]
    fn metric_bounded_on_noise() {
        let normal = Normal::new(0.0, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let channels: Vec<Vec<Complex64>> = (0..4)
            .map(|_| {
                (0..20_000)
                    .map(|_| Complex64::new(normal.sample(&mut rng), normal.sample(&mut rng)))
                    .collect()
            })
            .collect();
        let cap = MultiChannelCapture::new(channels, 80e6).unwrap();
        let m = detection_metric(&cap);
        assert!(m.iter().all(|v| (0.0..0.5).contains(v)));
        assert!(detect_frame(&cap, 0.8).unwrap().is_empty());
    }
}
