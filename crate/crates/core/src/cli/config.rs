//! Scenario files: TOML, every table optional, unknown keys rejected.

use crate::waveform::{ArrayGeometry, ImpairmentSpec};
use crate::SPEED_OF_LIGHT;
use serde::Deserialize;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    pub seed: u64,
    pub environment: String,
    pub output: Option<PathBuf>,
    pub array: ArrayConfig,
    pub impairments: ImpairmentConfig,
    pub capture: CaptureConfig,
    pub sweep: SweepConfig,
    pub multipath: MultipathConfig,
    pub positions: PositionsConfig,
    pub receiver: ReceiverSection,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            environment: "simulated".into(),
            output: None,
            array: ArrayConfig::default(),
            impairments: ImpairmentConfig::default(),
            capture: CaptureConfig::default(),
            sweep: SweepConfig::default(),
            multipath: MultipathConfig::default(),
            positions: PositionsConfig::default(),
            receiver: ReceiverSection::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ArrayConfig {
    pub carrier_hz: f64,
    pub n_elements: usize,
    /// Element spacing of the ULA along x; half a wavelength when absent.
    pub spacing_m: Option<f64>,
    /// Explicit element positions in metres; overrides `n_elements`/`spacing_m`.
    pub element_positions: Option<Vec<[f64; 3]>>,
}

impl Default for ArrayConfig {
    fn default() -> Self {
        Self {
            carrier_hz: 2.412e9,
            n_elements: 4,
            spacing_m: None,
            element_positions: None,
        }
    }
}

impl ArrayConfig {
    pub fn geometry(&self) -> Result<ArrayGeometry, String> {
        let g = match &self.element_positions {
            Some(p) => ArrayGeometry::new(self.carrier_hz, p.clone()).map_err(|e| e.to_string())?,
            None => {
                let spacing = self
                    .spacing_m
                    .unwrap_or(SPEED_OF_LIGHT / self.carrier_hz / 2.0);
                ArrayGeometry::uniform_linear(self.n_elements, self.carrier_hz, spacing)
            }
        };
        g.validate().map_err(|e| e.to_string())?;
        Ok(g)
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct ImpairmentConfig {
    pub cfo_hz: f64,
    /// Radians per channel; zeros when absent.
    pub phase_offsets: Option<Vec<f64>>,
    /// Omitted means noiseless.
    pub snr_db: Option<f64>,
    pub start_offset: usize,
}

impl ImpairmentConfig {
    pub fn spec(&self, n_channels: usize) -> Result<ImpairmentSpec, String> {
        let phase_offsets = self
            .phase_offsets
            .clone()
            .unwrap_or_else(|| vec![0.0; n_channels]);
        if phase_offsets.len() != n_channels {
            return Err(format!(
                "impairments.phase_offsets has {} entries for {} channels",
                phase_offsets.len(),
                n_channels
            ));
        }
        Ok(ImpairmentSpec {
            cfo_hz: self.cfo_hz,
            phase_offsets,
            snr_db: self.snr_db,
            start_offset: self.start_offset,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CaptureConfig {
    pub gap_samples: usize,
    pub frames_per_angle: usize,
}

impl Default for CaptureConfig {
    fn default() -> Self {
        Self {
            gap_samples: 800,
            frames_per_angle: 10,
        }
    }
}

/// Either an explicit list or a `start..=stop` range in degrees.
#[derive(Debug, Clone, PartialEq, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub angles_deg: Option<Vec<f64>>,
    pub start_deg: Option<f64>,
    pub stop_deg: Option<f64>,
    pub step_deg: Option<f64>,
}

impl SweepConfig {
    pub fn angles_deg(&self) -> Result<Vec<f64>, String> {
        let range = (self.start_deg, self.stop_deg, self.step_deg);
        let angles = match (&self.angles_deg, range) {
            (Some(_), (Some(_), _, _) | (_, Some(_), _) | (_, _, Some(_))) => {
                return Err("sweep: give either angles_deg or start/stop/step, not both".into())
            }
            (Some(a), _) => a.clone(),
            (None, (None, None, None)) => vec![0.0],
            (None, (Some(start), Some(stop), Some(step))) => {
                if !(step > 0.0) || stop < start {
                    return Err(format!("sweep: bad range {start}..{stop} step {step}"));
                }
                let n = ((stop - start) / step + 1e-9).floor() as usize + 1;
                (0..n).map(|i| start + i as f64 * step).collect()
            }
            _ => return Err("sweep: start_deg, stop_deg and step_deg go together".into()),
        };
        if let Some(a) = angles.iter().find(|a| !(a.abs() < 90.0)) {
            return Err(format!("sweep: azimuth {a}° outside (-90°, 90°)"));
        }
        Ok(angles)
    }
}

/// Random reflections added to the direct path. One set is drawn per
/// position and angle and held for all frames there.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MultipathConfig {
    /// Total paths including the direct one; 1 is free space.
    pub paths: usize,
    pub min_delay_ns: f64,
    pub max_delay_ns: f64,
    pub min_gain: f64,
    pub max_gain: f64,
    pub max_azimuth_deg: f64,
}

impl Default for MultipathConfig {
    fn default() -> Self {
        Self {
            paths: 1,
            min_delay_ns: 20.0,
            max_delay_ns: 300.0,
            min_gain: 0.2,
            max_gain: 0.8,
            max_azimuth_deg: 85.0,
        }
    }
}

impl MultipathConfig {
    pub fn validate(&self) -> Result<(), String> {
        let ok = self.paths >= 1
            && 0.0 <= self.min_delay_ns
            && self.min_delay_ns <= self.max_delay_ns
            && self.max_delay_ns * 1e-9 < crate::waveform::MAX_PATH_DELAY
            && 0.0 <= self.min_gain
            && self.min_gain <= self.max_gain
            && self.max_azimuth_deg > 0.0
            && self.max_azimuth_deg < 90.0;
        if ok {
            Ok(())
        } else {
            Err(format!("multipath: inconsistent parameters {self:?}"))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PositionsConfig {
    pub count: usize,
    /// Defaults to `pos0`, `pos1`, ...
    pub labels: Option<Vec<String>>,
}

impl Default for PositionsConfig {
    fn default() -> Self {
        Self {
            count: 1,
            labels: None,
        }
    }
}

impl PositionsConfig {
    pub fn labels(&self) -> Result<Vec<String>, String> {
        match &self.labels {
            Some(l) if l.len() != self.count && self.count != 1 => Err(format!(
                "positions: {} labels for count {}",
                l.len(),
                self.count
            )),
            Some(l) if l.is_empty() => Err("positions: empty label list".into()),
            Some(l) => Ok(l.clone()),
            None if self.count == 0 => Err("positions: count must be at least 1".into()),
            None => Ok((0..self.count).map(|i| format!("pos{i}")).collect()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReceiverSection {
    pub threshold: f64,
}

impl Default for ReceiverSection {
    fn default() -> Self {
        Self {
            threshold: crate::phy_rx::DEFAULT_THRESHOLD,
        }
    }
}

impl ScenarioConfig {
    pub fn parse(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("reading {}: {e}", path.display()))?;
        Self::parse(&text).map_err(|e| format!("{}: {e}", path.display()))
    }
}
