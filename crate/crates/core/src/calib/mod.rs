//! Constant inter-channel phase offset calibration.
//!
//! Frames are captured with every receive antenna at the same distance from
//! the transmitter, so any remaining phase difference between channels is the
//! hardware offset. Per frame the offset of channel `m` is the circular mean
//! over subcarriers of `arg(H_m(k)·H_0*(k))`; frames then aggregate by
//! circular mean. Equidistant placement is asserted by the caller.

mod profile;
mod stability;

pub use profile::{CalibrationProfile, PROFILE_HEADER};
pub use stability::{stability_report, PositionStability, StabilityReport};

use crate::dataset::FrameRecord;
use crate::phy_rx::CsiMatrix;
use crate::stats::{arg_pi, CircularAccumulator};
use num_complex::Complex64;
use thiserror::Error;

/// CSI magnitudes below this on the reference channel count as missing.
const LOW_SIGNAL: f64 = 1e-12;
/// Fraction of missing reference subcarriers tolerated per frame.
const MAX_LOW_FRACTION: f64 = 0.10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CalibError {
    #[error("reference channel below signal floor on {low} of {total} subcarriers")]
    LowSignal { low: usize, total: usize },
    #[error("no records to calibrate from")]
    Empty,
    #[error("profile has {profile} channels, CSI has {csi}")]
    Shape { profile: usize, csi: usize },
    #[error("need at least 2 positions, got {0}")]
    InsufficientPositions(usize),
    #[error("profile parse error on line {line}: {reason}")]
    Parse { line: usize, reason: String },
}

/// Records captured at one placement of the array.
#[derive(Debug, Clone, PartialEq)]
pub struct PositionGroup {
    pub label: String,
    pub records: Vec<FrameRecord>,
}

/// Calibration frames grouped by position label, in order of first appearance.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CalibrationMeasurement {
    pub groups: Vec<PositionGroup>,
}

impl CalibrationMeasurement {
    pub fn from_records(records: impl IntoIterator<Item = FrameRecord>) -> Self {
        let mut groups: Vec<PositionGroup> = Vec::new();
        for r in records {
            match groups.iter_mut().find(|g| g.label == r.position_label) {
                Some(g) => g.records.push(r),
                None => groups.push(PositionGroup {
                    label: r.position_label.clone(),
                    records: vec![r],
                }),
            }
        }
        Self { groups }
    }

    pub fn n_records(&self) -> usize {
        self.groups.iter().map(|g| g.records.len()).sum()
    }

    pub fn records(&self) -> impl Iterator<Item = &FrameRecord> {
        self.groups.iter().flat_map(|g| g.records.iter())
    }
}

/// Per-channel offsets of one CSI snapshot relative to channel 0.
pub fn offsets_from_csi(csi: &CsiMatrix) -> Result<Vec<f64>, CalibError> {
    let total = csi.n_subcarriers();
    let low = (0..total)
        .filter(|r| csi.get(*r, 0).norm() < LOW_SIGNAL)
        .count();
    if total == 0 || low as f64 > MAX_LOW_FRACTION * total as f64 {
        return Err(CalibError::LowSignal { low, total });
    }
    let mut offsets = vec![0.0; csi.n_channels()];
    for (m, slot) in offsets.iter_mut().enumerate().skip(1) {
        let acc: CircularAccumulator = (0..total)
            .filter(|r| csi.get(*r, 0).norm() >= LOW_SIGNAL)
            .map(|r| arg_pi(csi.get(r, m) * csi.get(r, 0).conj()))
            .collect();
        *slot = acc.mean().unwrap_or(0.0);
    }
    Ok(offsets)
}

/// Offsets of one equidistant-placement frame; entry 0 is always 0.
pub fn estimate_offsets(record: &FrameRecord) -> Result<Vec<f64>, CalibError> {
    offsets_from_csi(&record.csi_matrix())
}

/// Circular mean and spread of per-frame offsets over a set of records.
pub(crate) fn aggregate_records<'a>(
    records: impl IntoIterator<Item = &'a FrameRecord>,
) -> Result<(Vec<f64>, Vec<f64>, usize), CalibError> {
    let mut accs: Vec<CircularAccumulator> = Vec::new();
    let mut used = 0;
    for r in records {
        let off = estimate_offsets(r)?;
        if accs.is_empty() {
            accs = vec![CircularAccumulator::new(); off.len()];
        }
        if off.len() != accs.len() {
            return Err(CalibError::Shape {
                profile: accs.len(),
                csi: off.len(),
            });
        }
        accs.iter_mut().zip(&off).for_each(|(a, o)| a.push(*o));
        used += 1;
    }
    if used == 0 {
        return Err(CalibError::Empty);
    }
    let mut offsets: Vec<f64> = accs.iter().map(|a| a.mean().unwrap_or(0.0)).collect();
    offsets[0] = 0.0;
    let std = accs.iter().map(|a| a.std().unwrap_or(0.0)).collect();
    Ok((offsets, std, used))
}

/// Aggregates every frame of every position into one profile.
pub fn aggregate_profile(
    measurement: &CalibrationMeasurement,
    environment_label: &str,
) -> Result<CalibrationProfile, CalibError> {
    let (offsets, circular_std, n_frames_used) = aggregate_records(measurement.records())?;
    Ok(CalibrationProfile {
        reference_channel: 0,
        offsets,
        circular_std,
        n_frames_used,
        environment_label: environment_label.to_owned(),
    })
}

/// `H'_m(k) = H_m(k)·e^{-j·offset_m}`.
pub fn apply_profile(
    csi: &CsiMatrix,
    profile: &CalibrationProfile,
) -> Result<CsiMatrix, CalibError> {
    if profile.offsets.len() != csi.n_channels() {
        return Err(CalibError::Shape {
            profile: profile.offsets.len(),
            csi: csi.n_channels(),
        });
    }
    let rot: Vec<Complex64> = profile
        .offsets
        .iter()
        .map(|o| Complex64::from_polar(1.0, -o))
        .collect();
    Ok(csi.map(|_, m, v| v * rot[m]))
}
