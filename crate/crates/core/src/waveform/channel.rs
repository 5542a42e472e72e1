use super::{FrameTruth, MultiChannelCapture, Preamble, WaveformError};
use crate::SPEED_OF_LIGHT;
use num_complex::Complex64;
use std::f64::consts::{FRAC_PI_2, PI};

/// Path delays must stay below one 4 µs OFDM symbol.
pub const MAX_PATH_DELAY: f64 = 4e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct ArrayGeometry {
    pub carrier_frequency: f64,
    /// Element positions in meters; the array axis for a ULA is `x`.
    pub element_positions: Vec<[f64; 3]>,
}

impl Default for ArrayGeometry {
    /// Four-element half-wavelength ULA at 2.412 GHz.
    fn default() -> Self {
        Self::half_wavelength_ula(4, 2.412e9)
    }
}

impl ArrayGeometry {
    pub fn new(
        carrier_frequency: f64,
        element_positions: Vec<[f64; 3]>,
    ) -> Result<Self, WaveformError> {
        let geometry = Self {
            carrier_frequency,
            element_positions,
        };
        geometry.validate()?;
        Ok(geometry)
    }

    pub fn uniform_linear(n: usize, carrier_frequency: f64, spacing: f64) -> Self {
        Self {
            carrier_frequency,
            element_positions: (0..n).map(|m| [m as f64 * spacing, 0.0, 0.0]).collect(),
        }
    }

    pub fn half_wavelength_ula(n: usize, carrier_frequency: f64) -> Self {
        Self::uniform_linear(
            n,
            carrier_frequency,
            SPEED_OF_LIGHT / carrier_frequency / 2.0,
        )
    }

    pub fn validate(&self) -> Result<(), WaveformError> {
        if self.element_positions.len() < 2 {
            return Err(WaveformError::Config(
                "array needs at least two elements".into(),
            ));
        }
        if !(self.carrier_frequency.is_finite() && self.carrier_frequency > 0.0) {
            return Err(WaveformError::Config(
                "carrier frequency must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn n_channels(&self) -> usize {
        self.element_positions.len()
    }

    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_frequency
    }
}

/// Phase `2π (d_m·u(θ))/λ` seen by element `m` for a plane wave from `azimuth`.
/// The received factor is `e^{-j·array_phase}`.
pub fn array_phase(geometry: &ArrayGeometry, m: usize, azimuth: f64) -> f64 {
    let d = geometry.element_positions[m];
    let projection = d[0] * azimuth.sin() + d[1] * azimuth.cos();
    2.0 * PI * projection / geometry.wavelength()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Path {
    /// Seconds, `0 ≤ delay < 4 µs`.
    pub delay: f64,
    pub gain: Complex64,
    /// Radians in `(-π/2, π/2)`.
    pub azimuth: f64,
}

impl Path {
    pub fn new(delay: f64, gain: Complex64, azimuth: f64) -> Self {
        Self {
            delay,
            gain,
            azimuth,
        }
    }

    /// Unit-gain zero-delay path.
    pub fn direct(azimuth: f64) -> Self {
        Self::new(0.0, Complex64::new(1.0, 0.0), azimuth)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelModel {
    pub paths: Vec<Path>,
}

impl ChannelModel {
    pub fn new(paths: Vec<Path>) -> Result<Self, WaveformError> {
        let model = Self { paths };
        model.validate()?;
        Ok(model)
    }

    pub fn single(azimuth: f64) -> Self {
        Self {
            paths: vec![Path::direct(azimuth)],
        }
    }

    pub fn validate(&self) -> Result<(), WaveformError> {
        if self.paths.is_empty() {
            return Err(WaveformError::Config("channel model has no paths".into()));
        }
        for p in &self.paths {
            if !(0.0..MAX_PATH_DELAY).contains(&p.delay) {
                return Err(WaveformError::Config(format!(
                    "path delay {} s outside [0, 4 µs)",
                    p.delay
                )));
            }
            if !(p.azimuth > -FRAC_PI_2 && p.azimuth < FRAC_PI_2) {
                return Err(WaveformError::Config(format!(
                    "path azimuth {} rad outside (-π/2, π/2)",
                    p.azimuth
                )));
            }
        }
        Ok(())
    }

    /// Analytic response at baseband frequency `freq_hz` on element `m`.
    pub fn frequency_response(
        &self,
        geometry: &ArrayGeometry,
        m: usize,
        freq_hz: f64,
    ) -> Complex64 {
        self.paths
            .iter()
            .map(|p| {
                p.gain
                    * Complex64::from_polar(1.0, -2.0 * PI * freq_hz * p.delay)
                    * Complex64::from_polar(1.0, -array_phase(geometry, m, p.azimuth))
            })
            .sum()
    }

    /// Longest path delay rounded up to whole samples.
    pub fn tail_samples(&self, sample_rate: f64) -> usize {
        self.paths
            .iter()
            .map(|p| (p.delay * sample_rate).ceil() as usize)
            .max()
            .unwrap_or(0)
    }
}

/// Propagates a preamble through `channel` onto every element of `geometry`.
///
/// Each OFDM segment of the preamble is delayed in the frequency domain on its
/// own 256-point grid, so a fractional delay shifts the segment window and
/// rotates its tones by `e^{-j2π f_k τ}` without interpolation error. The
/// output is `tail_samples` longer than the preamble.
pub fn apply_channel(
    preamble: &Preamble,
    channel: &ChannelModel,
    geometry: &ArrayGeometry,
    sample_rate: f64,
) -> Result<MultiChannelCapture, WaveformError> {
    if preamble.is_empty() {
        return Err(WaveformError::Config("empty signal".into()));
    }
    channel.validate()?;
    geometry.validate()?;

    let n_out = preamble.len() + channel.tail_samples(sample_rate);
    let mut out = MultiChannelCapture::zeros(geometry.n_channels(), n_out, sample_rate);

    for path in &channel.paths {
        let delay = path.delay * sample_rate;
        let whole = delay.ceil();
        let advance = whole - delay;
        let whole = whole as usize;
        let weights: Vec<Complex64> = (0..geometry.n_channels())
            .map(|m| {
                path.gain * Complex64::from_polar(1.0, -array_phase(geometry, m, path.azimuth))
            })
            .collect();
        for seg in &preamble.segments {
            let rendered = if advance == 0.0 {
                preamble.samples[seg.start..seg.start + seg.len].to_vec()
            } else {
                seg.render(advance)
            };
            let base = seg.start + whole;
            for (m, w) in weights.iter().enumerate() {
                let ch = &mut out.channels_mut()[m][base..base + seg.len];
                for (y, x) in ch.iter_mut().zip(&rendered) {
                    *y += w * x;
                }
            }
        }
    }

    Ok(out.with_truth(vec![FrameTruth {
        start: 0,
        azimuth: Some(channel.paths[0].azimuth),
        cfo_hz: 0.0,
        phase_offsets: vec![0.0; geometry.n_channels()],
    }]))
}
