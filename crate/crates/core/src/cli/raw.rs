//! Raw captures: headerless little-endian interleaved `f32` I/Q, one block per
//! channel (all of channel 0, then channel 1, ...).

use crate::waveform::MultiChannelCapture;
use num_complex::Complex64;
use std::io::{Read, Write};

pub fn write_raw<W: Write>(capture: &MultiChannelCapture, mut out: W) -> std::io::Result<()> {
    let mut buf = Vec::with_capacity(capture.len() * 8);
    for ch in capture.channels() {
        buf.clear();
        for v in ch {
            buf.extend_from_slice(&(v.re as f32).to_le_bytes());
            buf.extend_from_slice(&(v.im as f32).to_le_bytes());
        }
        out.write_all(&buf)?;
    }
    out.flush()
}

pub fn read_raw<R: Read>(
    mut input: R,
    n_channels: usize,
    sample_rate: f64,
) -> Result<MultiChannelCapture, String> {
    if n_channels == 0 {
        return Err("raw capture needs at least one channel".into());
    }
    let mut bytes = Vec::new();
    input
        .read_to_end(&mut bytes)
        .map_err(|e| format!("reading raw capture: {e}"))?;
    let per_channel = 8 * n_channels;
    if bytes.len() % per_channel != 0 {
        return Err(format!(
            "raw capture is {} bytes, not a multiple of {} channels × 8 bytes",
            bytes.len(),
            n_channels
        ));
    }
    let n = bytes.len() / per_channel;
    let channels = bytes
        .chunks_exact(n * 8)
        .take(n_channels)
        .map(|block| {
            block
                .chunks_exact(8)
                .map(|c| {
                    let re = f32::from_le_bytes(c[0..4].try_into().unwrap());
                    let im = f32::from_le_bytes(c[4..8].try_into().unwrap());
                    Complex64::new(re as f64, im as f64)
                })
                .collect()
        })
        .collect::<Vec<Vec<Complex64>>>();
    let channels = if n == 0 {
        vec![Vec::new(); n_channels]
    } else {
        channels
    };
    MultiChannelCapture::new(channels, sample_rate).map_err(|e| e.to_string())
}

/// Appends captures channel by channel so the concatenation can be written
/// in the channel-major layout.
#[derive(Debug, Default)]
pub struct RawAccumulator {
    channels: Vec<Vec<Complex64>>,
    sample_rate: f64,
}

impl RawAccumulator {
    pub fn push(&mut self, capture: &MultiChannelCapture) {
        if self.channels.is_empty() {
            self.channels = vec![Vec::new(); capture.n_channels()];
            self.sample_rate = capture.sample_rate;
        }
        for (dst, src) in self.channels.iter_mut().zip(capture.channels()) {
            dst.extend_from_slice(src);
        }
    }

    pub fn finish(self) -> Option<MultiChannelCapture> {
        if self.channels.is_empty() {
            return None;
        }
        MultiChannelCapture::new(self.channels, self.sample_rate).ok()
    }
}
