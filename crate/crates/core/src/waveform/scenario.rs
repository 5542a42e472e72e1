use super::{
    apply_channel, apply_impairments, build_preamble, ArrayGeometry, ChannelModel, FrameTruth,
    ImpairmentSpec, MultiChannelCapture, OfdmNumerology, WaveformError, PREAMBLE_LEN,
};
use rand::Rng;

/// A sequence of frames, each with its own propagation channel, captured
/// through one receiver.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub geometry: ArrayGeometry,
    /// One channel per frame, in transmission order.
    pub frames: Vec<ChannelModel>,
    /// `start_offset` is the noise-only lead before the first frame.
    pub impairments: ImpairmentSpec,
    /// Samples between the end of one preamble and the start of the next.
    pub gap: usize,
}

impl Scenario {
    /// `frames_per_angle` single-path frames at each azimuth of the sweep.
    pub fn angle_sweep(
        geometry: ArrayGeometry,
        azimuths: &[f64],
        frames_per_angle: usize,
        impairments: ImpairmentSpec,
        gap: usize,
    ) -> Self {
        let frames = azimuths
            .iter()
            .flat_map(|a| std::iter::repeat_n(ChannelModel::single(*a), frames_per_angle))
            .collect();
        Self {
            geometry,
            frames,
            impairments,
            gap,
        }
    }

    pub fn frame_spacing(&self) -> usize {
        PREAMBLE_LEN + self.gap
    }
}

/// Synthesizes the whole scenario: preamble → channel per frame → shared
/// impairments over the concatenated capture.
pub fn simulate_capture<R: Rng + ?Sized>(
    scenario: &Scenario,
    numerology: &OfdmNumerology,
    rng: &mut R,
) -> Result<(MultiChannelCapture, Vec<FrameTruth>), WaveformError> {
    scenario.geometry.validate()?;
    let n_channels = scenario.geometry.n_channels();
    if scenario.impairments.phase_offsets.len() != n_channels {
        return Err(WaveformError::Config(format!(
            "{} phase offsets for {} channels",
            scenario.impairments.phase_offsets.len(),
            n_channels
        )));
    }
    let fs = numerology.sample_rate;
    if scenario.frames.is_empty() {
        let empty = MultiChannelCapture::zeros(n_channels, 0, fs).with_truth(Vec::new());
        return Ok((empty, Vec::new()));
    }

    let preamble = build_preamble(numerology)?;
    let spacing = scenario.frame_spacing();
    let tail = scenario
        .frames
        .iter()
        .map(|c| c.tail_samples(fs))
        .max()
        .unwrap_or(0);
    let len = scenario.frames.len() * spacing + tail.saturating_sub(scenario.gap);
    let mut capture = MultiChannelCapture::zeros(n_channels, len, fs);
    let mut truth = Vec::with_capacity(scenario.frames.len());

    for (i, channel) in scenario.frames.iter().enumerate() {
        let frame = apply_channel(&preamble, channel, &scenario.geometry, fs)?;
        let start = i * spacing;
        for (m, dst) in capture.channels_mut().iter_mut().enumerate() {
            for (y, x) in dst[start..].iter_mut().zip(frame.channel(m)) {
                *y += x;
            }
        }
        truth.push(FrameTruth {
            start,
            azimuth: Some(channel.paths[0].azimuth),
            cfo_hz: 0.0,
            phase_offsets: vec![0.0; n_channels],
        });
    }

    let capture = apply_impairments(&capture.with_truth(truth), &scenario.impairments, rng);
    let truth = capture.truth.clone().unwrap_or_default();
    Ok((capture, truth))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_frames_is_empty() {
        let s = Scenario {
            geometry: ArrayGeometry::default(),
            frames: vec![],
            impairments: ImpairmentSpec::none(4),
            gap: 100,
        };
        let (cap, truth) = simulate_capture(
            &s,
            &OfdmNumerology::vht80(),
            &mut ChaCha8Rng::seed_from_u64(0),
        )
        .unwrap();
        assert!(cap.is_empty());
        assert!(truth.is_empty());
    }

    #[test]
    fn truth_spacing_follows_gap() {
        let s = Scenario::angle_sweep(
            ArrayGeometry::default(),
            &[0.1],
            10,
            ImpairmentSpec {
                start_offset: 77,
                ..ImpairmentSpec::none(4)
            },
            10_000,
        );
        let (cap, truth) = simulate_capture(
            &s,
            &OfdmNumerology::vht80(),
            &mut ChaCha8Rng::seed_from_u64(0),
        )
        .unwrap();
        assert_eq!(truth.len(), 10);
        for (i, t) in truth.iter().enumerate() {
            assert_eq!(t.start, 77 + i * 13_200);
        }
        assert_eq!(cap.len(), 77 + 10 * 13_200);
    }

    #[test]
    fn sweep_enumerates_angles() {
        let angles: Vec<f64> = (-12..=12).map(|i| (i as f64 * 5.0).to_radians()).collect();
        let s = Scenario::angle_sweep(
            ArrayGeometry::default(),
            &angles,
            1,
            ImpairmentSpec::none(4),
            500,
        );
        let (_, truth) = simulate_capture(
            &s,
            &OfdmNumerology::vht80(),
            &mut ChaCha8Rng::seed_from_u64(0),
        )
        .unwrap();
        assert_eq!(truth.len(), 25);
        for (t, a) in truth.iter().zip(&angles) {
            assert_eq!(t.azimuth, Some(*a));
        }
    }

    #[test]
    fn offsets_length_checked() {
        let s = Scenario {
            geometry: ArrayGeometry::default(),
            frames: vec![ChannelModel::single(0.0)],
            impairments: ImpairmentSpec::none(3),
            gap: 100,
        };
        assert!(simulate_capture(
            &s,
            &OfdmNumerology::vht80(),
            &mut ChaCha8Rng::seed_from_u64(0)
        )
        .is_err());
    }
}
