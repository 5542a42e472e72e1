//! Preamble synthesis and the simulated propagation / hardware chain.
//!
//! Conventions used throughout the crate:
//!
//! * OFDM symbols are modulated with the `1/N` inverse DFT (see [`crate::dsp`]).
//!   Every preamble field is scaled to unit mean sample power.
//! * Element `m` sees a plane wave from azimuth `θ` with phase
//!   `e^{-j2π (d_m·u(θ))/λ}`, `u(θ) = (sin θ, cos θ, 0)`. Broadside is `θ = 0`
//!   and the array axis is `x`. [`array_phase`] is the single implementation of
//!   that convention; the DoA steering vectors call it too.

mod channel;
mod impairments;
mod numerology;
mod preamble;
mod scenario;

pub use channel::{apply_channel, array_phase, ArrayGeometry, ChannelModel, Path, MAX_PATH_DELAY};
pub use impairments::{apply_impairments, ImpairmentSpec};
pub use numerology::{FieldId, OfdmNumerology, PREAMBLE_LEN};
pub use preamble::{build_preamble, vht_ltf_reference, FieldBoundary, OfdmSegment, Preamble};
pub use scenario::{simulate_capture, Scenario};

use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WaveformError {
    #[error("configuration error: {0}")]
    Config(String),
}

/// Ground truth for one synthesized frame.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameTruth {
    /// First sample of L-STF in the capture.
    pub start: usize,
    /// Azimuth of the first (direct) path, radians.
    pub azimuth: Option<f64>,
    pub cfo_hz: f64,
    pub phase_offsets: Vec<f64>,
}

/// Time-aligned complex baseband streams, one per receive channel.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiChannelCapture {
    channels: Vec<Vec<Complex64>>,
    pub sample_rate: f64,
    /// Present when the capture comes from the simulator.
    pub truth: Option<Vec<FrameTruth>>,
}

impl MultiChannelCapture {
    /// Builds a capture; all channels must have the same length.
    pub fn new(channels: Vec<Vec<Complex64>>, sample_rate: f64) -> Result<Self, WaveformError> {
        if channels.is_empty() {
            return Err(WaveformError::Config(
                "capture needs at least one channel".into(),
            ));
        }
        let len = channels[0].len();
        if channels.iter().any(|c| c.len() != len) {
            return Err(WaveformError::Config("channels differ in length".into()));
        }
        Ok(Self {
            channels,
            sample_rate,
            truth: None,
        })
    }

    pub fn zeros(n_channels: usize, n_samples: usize, sample_rate: f64) -> Self {
        Self {
            channels: vec![vec![Complex64::new(0.0, 0.0); n_samples]; n_channels],
            sample_rate,
            truth: None,
        }
    }

    pub fn with_truth(mut self, truth: Vec<FrameTruth>) -> Self {
        self.truth = Some(truth);
        self
    }

    pub fn n_channels(&self) -> usize {
        self.channels.len()
    }

    pub fn len(&self) -> usize {
        self.channels.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn channel(&self, m: usize) -> &[Complex64] {
        &self.channels[m]
    }

    pub fn channels(&self) -> &[Vec<Complex64>] {
        &self.channels
    }

    pub fn channels_mut(&mut self) -> &mut [Vec<Complex64>] {
        &mut self.channels
    }

    pub fn into_channels(self) -> Vec<Vec<Complex64>> {
        self.channels
    }

    /// Copies `[start, start + len)` of every channel, truth dropped.
    pub fn slice(&self, start: usize, len: usize) -> Self {
        Self {
            channels: self
                .channels
                .iter()
                .map(|c| c[start..start + len].to_vec())
                .collect(),
            sample_rate: self.sample_rate,
            truth: None,
        }
    }
}
