use super::{DetectionResult, RxError};
use crate::waveform::{FieldId, MultiChannelCapture};
use num_complex::Complex64;

/// One field: `channels[m]` holds the field's samples on channel `m`.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldBlock {
    pub field: FieldId,
    pub channels: Vec<Vec<Complex64>>,
}

impl FieldBlock {
    pub fn len(&self) -> usize {
        self.channels.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// All seven preamble fields in time-domain IQ, in transmission order.
#[derive(Debug, Clone, PartialEq)]
pub struct PreambleFields {
    pub blocks: Vec<FieldBlock>,
}

impl PreambleFields {
    pub fn get(&self, field: FieldId) -> Option<&FieldBlock> {
        self.blocks.iter().find(|b| b.field == field)
    }

    pub fn get_mut(&mut self, field: FieldId) -> Option<&mut FieldBlock> {
        self.blocks.iter_mut().find(|b| b.field == field)
    }

    pub fn n_channels(&self) -> usize {
        self.blocks.first().map_or(0, |b| b.channels.len())
    }
}

/// Slices the fields at their standard offsets from `fine_start`.
/// Pass the CFO-corrected capture.
pub fn extract_fields(
    capture: &MultiChannelCapture,
    detection: &DetectionResult,
) -> Result<PreambleFields, RxError> {
    let s = detection.fine_start;
    let mut blocks = Vec::with_capacity(FieldId::ALL.len());
    for field in FieldId::ALL {
        let start = s + field.offset();
        let end = start + field.len();
        if end > capture.len() {
            return Err(RxError::Truncated(field));
        }
        blocks.push(FieldBlock {
            field,
            channels: capture
                .channels()
                .iter()
                .map(|c| c[start..end].to_vec())
                .collect(),
        });
    }
    Ok(PreambleFields { blocks })
}
