use crate::phy_rx::{CsiMatrix, FieldBlock, PreambleFields};
use crate::waveform::{FieldId, OfdmNumerology};
use num_complex::{Complex32, Complex64};

/// CSI as stored on disk: `n_subcarriers × n_channels`, subcarrier-major.
#[derive(Debug, Clone, PartialEq)]
pub struct RecordCsi {
    pub n_subcarriers: usize,
    pub n_channels: usize,
    pub values: Vec<Complex32>,
}

impl RecordCsi {
    pub fn from_matrix(csi: &CsiMatrix) -> Self {
        Self {
            n_subcarriers: csi.n_subcarriers(),
            n_channels: csi.n_channels(),
            values: csi
                .values()
                .iter()
                .map(|v| Complex32::new(v.re as f32, v.im as f32))
                .collect(),
        }
    }

    /// Widens to `f64`. With 242 rows the subcarriers are the VHT 80 MHz set;
    /// any other row count is indexed `0..n`.
    pub fn to_matrix(&self) -> CsiMatrix {
        let num = OfdmNumerology::vht80();
        let subcarriers = if self.n_subcarriers == num.n_used() {
            num.used_subcarriers().to_vec()
        } else {
            (0..self.n_subcarriers as i32).collect()
        };
        let values = self
            .values
            .iter()
            .map(|v| Complex64::new(v.re as f64, v.im as f64))
            .collect();
        CsiMatrix::new(subcarriers, self.n_channels, values).expect("shape carried by RecordCsi")
    }

    pub fn get(&self, row: usize, m: usize) -> Complex32 {
        self.values[row * self.n_channels + m]
    }
}

/// One preamble field as stored on disk, channel-major.
#[derive(Debug, Clone, PartialEq)]
pub struct RecordField {
    pub id: u8,
    pub n_channels: usize,
    pub samples: Vec<Complex32>,
}

impl RecordField {
    pub fn from_block(block: &FieldBlock) -> Self {
        Self {
            id: block.field as u8,
            n_channels: block.channels.len(),
            samples: block
                .channels
                .iter()
                .flatten()
                .map(|v| Complex32::new(v.re as f32, v.im as f32))
                .collect(),
        }
    }

    pub fn n_samples(&self) -> usize {
        self.samples.len().checked_div(self.n_channels).unwrap_or(0)
    }

    pub fn channel(&self, m: usize) -> &[Complex32] {
        let n = self.n_samples();
        &self.samples[m * n..(m + 1) * n]
    }

    pub fn field(&self) -> Option<FieldId> {
        FieldId::from_u8(self.id)
    }
}

/// One dataset row: every preamble field in time domain, 242-subcarrier CSI,
/// per-channel SNR, estimated CFO and the ground-truth azimuth when tracked.
///
/// Sample data is kept at the on-disk precision so a record read back from a
/// file is bit-identical to the one written.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameRecord {
    pub id: u64,
    pub timestamp: f64,
    /// Radians. Stored on disk as `f32` degrees; see [`quantize_azimuth`].
    pub true_azimuth: Option<f64>,
    pub position_label: String,
    pub snr_db: Vec<f32>,
    pub cfo_hz: f64,
    pub detection_metric: f32,
    pub csi: RecordCsi,
    pub fields: Vec<RecordField>,
}

/// Rounds an azimuth through its on-disk `f32` degree representation.
pub fn quantize_azimuth(radians: f64) -> f64 {
    ((radians.to_degrees() as f32) as f64).to_radians()
}

impl FrameRecord {
    pub fn n_channels(&self) -> usize {
        self.csi.n_channels
    }

    pub fn csi_matrix(&self) -> CsiMatrix {
        self.csi.to_matrix()
    }

    pub fn field(&self, field: FieldId) -> Option<&RecordField> {
        self.fields.iter().find(|f| f.id == field as u8)
    }

    /// Widens the stored fields back into receiver blocks.
    pub fn preamble_fields(&self) -> PreambleFields {
        let blocks = self
            .fields
            .iter()
            .filter_map(|f| {
                let field = f.field()?;
                let channels = (0..f.n_channels)
                    .map(|m| {
                        f.channel(m)
                            .iter()
                            .map(|v| Complex64::new(v.re as f64, v.im as f64))
                            .collect()
                    })
                    .collect();
                Some(FieldBlock { field, channels })
            })
            .collect();
        PreambleFields { blocks }
    }

    /// Shape problems against the expected layout, empty when consistent.
    pub fn shape_violations(&self, n_channels: usize, n_subcarriers: usize) -> Vec<String> {
        let mut out = Vec::new();
        if self.csi.n_subcarriers != n_subcarriers {
            out.push(format!(
                "CSI has {} subcarrier rows, expected {}",
                self.csi.n_subcarriers, n_subcarriers
            ));
        }
        if self.csi.n_channels != n_channels
            || self.csi.values.len() != self.csi.n_subcarriers * self.csi.n_channels
        {
            out.push(format!(
                "CSI has {} channels, expected {}",
                self.csi.n_channels, n_channels
            ));
        }
        if self.snr_db.len() != n_channels {
            out.push(format!(
                "{} SNR values, expected {}",
                self.snr_db.len(),
                n_channels
            ));
        }
        if self.fields.len() != FieldId::ALL.len() {
            out.push(format!("{} fields, expected 7", self.fields.len()));
        }
        for (i, f) in self.fields.iter().enumerate() {
            match f.field() {
                Some(id) if id as usize == i => {
                    if f.n_samples() != id.len() || f.samples.len() != f.n_channels * id.len() {
                        out.push(format!(
                            "{id} has {} samples, expected {}",
                            f.n_samples(),
                            id.len()
                        ));
                    }
                    if f.n_channels != n_channels {
                        out.push(format!(
                            "{id} has {} channels, expected {}",
                            f.n_channels, n_channels
                        ));
                    }
                }
                _ => out.push(format!("field slot {i} carries id {}", f.id)),
            }
        }
        if self.position_label.len() > u16::MAX as usize {
            out.push("position label longer than 65535 bytes".into());
        }
        out
    }
}
