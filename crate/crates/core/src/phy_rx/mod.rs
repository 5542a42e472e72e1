//! Software receiver: frame detection on L-STF, two-stage CFO estimation and
//! correction, field slicing, VHT-LTF channel estimation on all 242
//! subcarriers and per-channel SNR from the repeated L-LTF halves.

mod cfo;
mod csi;
mod detect;
mod fields;
mod process;
mod snr;

pub use cfo::{correct_cfo, estimate_cfo, CfoEstimate};
pub use csi::{estimate_csi, CsiMatrix, CSI_WINDOW_BACKOFF};
pub use detect::{
    detect_frame, detection_metric, DetectionResult, METRIC_LAG, METRIC_WINDOW, MIN_PLATEAU,
};
pub use fields::{extract_fields, FieldBlock, PreambleFields};
pub use process::{process_capture, ProcessOutput, ReceiverConfig};
pub use snr::{estimate_snr, SnrEstimate, SNR_CAP_DB, SNR_FLOOR_DB};

use crate::waveform::{FieldId, WaveformError};
use thiserror::Error;

/// Default detection threshold on the normalized L-STF autocorrelation.
pub const DEFAULT_THRESHOLD: f64 = 0.8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RxError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("window [{start}, {end}) exceeds capture of {len} samples")]
    Bounds {
        start: usize,
        end: usize,
        len: usize,
    },
    #[error("frame truncated inside {0}")]
    Truncated(FieldId),
    #[error("{0} missing from extracted fields")]
    MissingField(FieldId),
    #[error(transparent)]
    Waveform(#[from] WaveformError),
}
