//! Text serialization of [`CalibrationProfile`].
//!
//! ```text
//! # find calibration profile v1
//! reference_channel = 0
//! offsets = 0, 0.7001, -1.1994, 2.0987
//! circular_std = 0, 0.0061, 0.0058, 0.0064
//! n_frames_used = 100
//! environment_label = anechoic
//! ```
//!
//! One `key = value` per line; blank lines and `#` comments are ignored. Lists
//! are comma-separated decimal radians written in shortest round-trip form.
//! The label runs to the end of the line and may not contain a newline.

use super::CalibError;
use std::fmt::Write as _;

pub const PROFILE_HEADER: &str = "# find calibration profile v1";

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationProfile {
    pub reference_channel: usize,
    /// Radians in `(-π, π]`, `offsets[0] = 0`.
    pub offsets: Vec<f64>,
    pub circular_std: Vec<f64>,
    pub n_frames_used: usize,
    pub environment_label: String,
}

impl CalibrationProfile {
    pub fn from_offsets(offsets: Vec<f64>, environment_label: &str) -> Self {
        let n = offsets.len();
        Self {
            reference_channel: 0,
            offsets,
            circular_std: vec![0.0; n],
            n_frames_used: 1,
            environment_label: environment_label.to_owned(),
        }
    }

    /// All-zero profile: applying it leaves CSI unchanged.
    pub fn identity(n_channels: usize) -> Self {
        Self {
            n_frames_used: 0,
            ..Self::from_offsets(vec![0.0; n_channels], "uncalibrated")
        }
    }

    pub fn n_channels(&self) -> usize {
        self.offsets.len()
    }

    pub fn to_text(&self) -> String {
        let list = |v: &[f64]| {
            v.iter()
                .map(|x| x.to_string())
                .collect::<Vec<_>>()
                .join(", ")
        };
        let mut s = String::new();
        let _ = writeln!(s, "{PROFILE_HEADER}");
        let _ = writeln!(s, "reference_channel = {}", self.reference_channel);
        let _ = writeln!(s, "offsets = {}", list(&self.offsets));
        let _ = writeln!(s, "circular_std = {}", list(&self.circular_std));
        let _ = writeln!(s, "n_frames_used = {}", self.n_frames_used);
        let _ = writeln!(
            s,
            "environment_label = {}",
            self.environment_label.replace('\n', " ")
        );
        s
    }

    pub fn parse(text: &str) -> Result<Self, CalibError> {
        let mut reference_channel = None;
        let mut offsets = None;
        let mut circular_std = None;
        let mut n_frames_used = None;
        let mut environment_label = None;
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let err = |reason: String| CalibError::Parse {
                line: line_no,
                reason,
            };
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err("expected `key = value`".into()))?;
            let (key, value) = (key.trim(), value.trim());
            let list = |v: &str| -> Result<Vec<f64>, CalibError> {
                v.split(',')
                    .map(|x| {
                        x.trim()
                            .parse::<f64>()
                            .map_err(|e| err(format!("{key}: {e}")))
                    })
                    .collect()
            };
            match key {
                "reference_channel" => {
                    reference_channel =
                        Some(value.parse::<usize>().map_err(|e| err(e.to_string()))?)
                }
                "offsets" => offsets = Some(list(value)?),
                "circular_std" => circular_std = Some(list(value)?),
                "n_frames_used" => {
                    n_frames_used = Some(value.parse::<usize>().map_err(|e| err(e.to_string()))?)
                }
                "environment_label" => environment_label = Some(value.to_owned()),
                other => return Err(err(format!("unknown key `{other}`"))),
            }
        }
        let missing = |k: &str| CalibError::Parse {
            line: 0,
            reason: format!("missing `{k}`"),
        };
        let offsets = offsets.ok_or_else(|| missing("offsets"))?;
        let circular_std = circular_std.ok_or_else(|| missing("circular_std"))?;
        if circular_std.len() != offsets.len() {
            return Err(CalibError::Parse {
                line: 0,
                reason: "offsets and circular_std differ in length".into(),
            });
        }
        Ok(Self {
            reference_channel: reference_channel.ok_or_else(|| missing("reference_channel"))?,
            offsets,
            circular_std,
            n_frames_used: n_frames_used.ok_or_else(|| missing("n_frames_used"))?,
            environment_label: environment_label.ok_or_else(|| missing("environment_label"))?,
        })
    }
}
