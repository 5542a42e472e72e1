//! Version-1 dataset container for frame records, plus validation and
//! normalized CSV views.
//!
//! Layout (little-endian throughout):
//!
//! ```text
//! header:  "FINDDSv1" | u32 version | f64 carrier_hz | f64 sample_rate_hz
//!          | u8 n_channels | u16 n_subcarriers | n_channels × 3 f64 positions (m)
//!          | u16 len + UTF-8 environment label | u64 record_count
//! record:  u64 id | f64 timestamp_s | f32 true_azimuth_deg (quiet NaN = untracked)
//!          | u16 len + UTF-8 position label | n_channels × f32 snr_db | f64 cfo_hz
//!          | f32 detection_metric
//!          | CSI: n_subcarriers × n_channels × (f32 re, f32 im), subcarrier-major
//!          | 7 × { u8 field id | u32 n_samples | n_channels × n_samples × (f32 re, f32 im), channel-major }
//! ```

mod export;
mod format;
mod record;
mod validate;

pub use export::{csi_view_csv, export_views, iq_view_csv, ExportSelection, ExportSummary};
pub use format::{
    read_dataset, record_size, write_dataset, DatasetHeader, DatasetReader, DatasetWriter,
    FORMAT_VERSION, MAGIC,
};
pub use record::{quantize_azimuth, FrameRecord, RecordCsi, RecordField};
pub use validate::{validate_dataset, ValidationReport, Violation};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("not a dataset file: {0}")]
    Format(String),
    #[error("unsupported dataset version {0}")]
    Version(u32),
    #[error("truncated inside record {index}")]
    Truncated { index: u64 },
    #[error("record {id}: {reason}")]
    Schema { id: u64, reason: String },
    #[error("{reason}: no record with id {id}")]
    Selection { id: u64, reason: &'static str },
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

impl DatasetError {
    pub(crate) fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Self::Io {
            context: context.into(),
            source,
        }
    }
}
