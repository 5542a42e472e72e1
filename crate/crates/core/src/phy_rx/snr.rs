use super::{PreambleFields, RxError};
use crate::dsp::mean_power;
use crate::waveform::FieldId;
use num_complex::Complex64;

pub const SNR_CAP_DB: f64 = 60.0;
pub const SNR_FLOOR_DB: f64 = -30.0;

#[derive(Debug, Clone, PartialEq)]
pub struct SnrEstimate {
    pub per_channel_db: Vec<f64>,
}

/// Per-channel SNR from the two repeated 3.2 µs L-LTF periods `a`, `b`.
///
/// With `S = mean|(a+b)/2|²` and `N = mean|(a-b)/2|²`, the per-sample noise
/// variance is `2N` and the signal power is `S - N`, giving
/// `SNR = (S - N) / 2N`. The result is clamped to `[-30, 60]` dB.
pub fn estimate_snr(fields: &PreambleFields) -> Result<SnrEstimate, RxError> {
    let block = fields
        .get(FieldId::LLtf)
        .ok_or(RxError::MissingField(FieldId::LLtf))?;
    if block.len() != FieldId::LLtf.len() {
        return Err(RxError::Config(format!(
            "L-LTF block has {} samples",
            block.len()
        )));
    }
    let per_channel_db = block
        .channels
        .iter()
        .map(|ch| {
            let (a, b) = (&ch[128..384], &ch[384..640]);
            let sum: Vec<Complex64> = a.iter().zip(b).map(|(x, y)| (x + y) * 0.5).collect();
            let diff: Vec<Complex64> = a.iter().zip(b).map(|(x, y)| (x - y) * 0.5).collect();
            let s = mean_power(&sum);
            let n = mean_power(&diff);
            let signal = s - n;
            let cap = 10f64.powf(SNR_CAP_DB / 10.0);
            if signal >= cap * 2.0 * n {
                SNR_CAP_DB
            } else if signal <= 0.0 {
                SNR_FLOOR_DB
            } else {
                (10.0 * (signal / (2.0 * n)).log10()).clamp(SNR_FLOOR_DB, SNR_CAP_DB)
            }
        })
        .collect();
    Ok(SnrEstimate { per_channel_db })
}
