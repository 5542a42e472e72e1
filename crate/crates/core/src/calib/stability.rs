use super::{aggregate_records, CalibError, CalibrationMeasurement};
use crate::stats::CircularAccumulator;
use std::fmt::Write as _;

#[derive(Debug, Clone, PartialEq)]
pub struct PositionStability {
    pub label: String,
    pub offsets: Vec<f64>,
    pub circular_std: Vec<f64>,
    pub n_frames: usize,
}

/// Per-position offsets and their spread across positions.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    pub environment_label: String,
    pub positions: Vec<PositionStability>,
    /// Circular std across positions of the per-position offsets, per channel.
    pub cross_position_std: Vec<f64>,
}

impl StabilityReport {
    /// Largest cross-position spread over the non-reference channels.
    pub fn worst_channel_std(&self) -> f64 {
        self.cross_position_std
            .iter()
            .skip(1)
            .copied()
            .fold(0.0, f64::max)
    }

    /// `environment,position,n_frames,channel,offset_rad,circular_std_rad` rows,
    /// then one `…,ALL,…` row per channel carrying the cross-position spread.
    pub fn to_csv(&self) -> String {
        let mut s =
            String::from("environment,position,n_frames,channel,offset_rad,circular_std_rad\n");
        let env = csv_field(&self.environment_label);
        for p in &self.positions {
            for (m, (o, sd)) in p.offsets.iter().zip(&p.circular_std).enumerate() {
                let _ = writeln!(
                    s,
                    "{env},{},{},{m},{o},{sd}",
                    csv_field(&p.label),
                    p.n_frames
                );
            }
        }
        let total: usize = self.positions.iter().map(|p| p.n_frames).sum();
        for (m, sd) in self.cross_position_std.iter().enumerate() {
            let mean = self
                .positions
                .iter()
                .map(|p| p.offsets[m])
                .collect::<CircularAccumulator>()
                .mean()
                .unwrap_or(0.0);
            let _ = writeln!(s, "{env},ALL,{total},{m},{mean},{sd}");
        }
        s
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_owned()
    }
}

pub fn stability_report(
    measurement: &CalibrationMeasurement,
    environment_label: &str,
) -> Result<StabilityReport, CalibError> {
    let groups: Vec<_> = measurement
        .groups
        .iter()
        .filter(|g| !g.records.is_empty())
        .collect();
    if groups.len() < 2 {
        return Err(CalibError::InsufficientPositions(groups.len()));
    }
    let mut positions = Vec::with_capacity(groups.len());
    for g in groups {
        let (offsets, circular_std, n_frames) = aggregate_records(&g.records)?;
        positions.push(PositionStability {
            label: g.label.clone(),
            offsets,
            circular_std,
            n_frames,
        });
    }
    let n_ch = positions[0].offsets.len();
    if let Some(bad) = positions.iter().find(|p| p.offsets.len() != n_ch) {
        return Err(CalibError::Shape {
            profile: n_ch,
            csi: bad.offsets.len(),
        });
    }
    let cross_position_std = (0..n_ch)
        .map(|m| {
            positions
                .iter()
                .map(|p| p.offsets[m])
                .collect::<CircularAccumulator>()
                .std()
                .unwrap_or(0.0)
        })
        .collect();
    Ok(StabilityReport {
        environment_label: environment_label.to_owned(),
        positions,
        cross_position_std,
    })
}
