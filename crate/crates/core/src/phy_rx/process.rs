use super::{
    correct_cfo, detect_frame, estimate_cfo, estimate_csi, estimate_snr, extract_fields,
    DetectionResult, RxError, DEFAULT_THRESHOLD,
};
use crate::dataset::{quantize_azimuth, FrameRecord, RecordCsi, RecordField};
use crate::waveform::{ArrayGeometry, MultiChannelCapture, OfdmNumerology, PREAMBLE_LEN};
use rayon::prelude::*;

/// Truth frames within this many samples of a detection are attached to it.
const TRUTH_MATCH: usize = 80;

#[derive(Debug, Clone, PartialEq)]
pub struct ReceiverConfig {
    pub threshold: f64,
    pub numerology: OfdmNumerology,
    pub geometry: ArrayGeometry,
    pub position_label: String,
    /// Id given to the first record; later ones count up.
    pub first_id: u64,
    /// Seconds added to every record timestamp.
    pub time_origin: f64,
}

impl Default for ReceiverConfig {
    fn default() -> Self {
        Self {
            threshold: DEFAULT_THRESHOLD,
            numerology: OfdmNumerology::vht80(),
            geometry: ArrayGeometry::default(),
            position_label: String::new(),
            first_id: 0,
            time_origin: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ProcessOutput {
    pub records: Vec<FrameRecord>,
    pub detections: usize,
    /// Frames detected but dropped (truncated, out of bounds, ...).
    pub failed: usize,
    pub failures: Vec<(usize, RxError)>,
}

fn process_one(
    capture: &MultiChannelCapture,
    det: &DetectionResult,
    config: &ReceiverConfig,
) -> Result<FrameRecord, RxError> {
    let cfo = estimate_cfo(capture, det)?;
    let s = det.fine_start;
    let len = PREAMBLE_LEN.min(capture.len() - s);
    let frame = capture.slice(s, len);
    let local = DetectionResult {
        coarse_start: det.coarse_start.saturating_sub(s),
        fine_start: 0,
        metric_peak: det.metric_peak,
    };
    let frame = correct_cfo(&frame, &cfo, &local);
    let fields = extract_fields(&frame, &local)?;
    let csi = estimate_csi(&fields, &config.numerology)?;
    let snr = estimate_snr(&fields)?;

    let true_azimuth = capture
        .truth
        .as_ref()
        .and_then(|t| t.iter().find(|f| f.start.abs_diff(s) <= TRUTH_MATCH))
        .and_then(|f| f.azimuth)
        .map(quantize_azimuth);

    Ok(FrameRecord {
        id: 0,
        timestamp: config.time_origin + s as f64 / capture.sample_rate,
        true_azimuth,
        position_label: config.position_label.clone(),
        snr_db: snr.per_channel_db.iter().map(|v| *v as f32).collect(),
        cfo_hz: cfo.combined_hz,
        detection_metric: det.metric_peak as f32,
        csi: RecordCsi::from_matrix(&csi),
        fields: fields.blocks.iter().map(RecordField::from_block).collect(),
    })
}

/// Detect → CFO → fields → CSI → SNR for every frame in the capture.
///
/// Frames that fail after detection are counted and skipped; records keep
/// time order and get consecutive ids from `config.first_id`.
pub fn process_capture(
    capture: &MultiChannelCapture,
    config: &ReceiverConfig,
) -> Result<ProcessOutput, RxError> {
    config.numerology.validate()?;
    if capture.n_channels() != config.geometry.n_channels() {
        return Err(RxError::Config(format!(
            "capture has {} channels, geometry {}",
            capture.n_channels(),
            config.geometry.n_channels()
        )));
    }
    let detections = detect_frame(capture, config.threshold)?;
    let results: Vec<Result<FrameRecord, RxError>> = detections
        .par_iter()
        .map(|d| process_one(capture, d, config))
        .collect();

    let mut out = ProcessOutput {
        detections: detections.len(),
        ..Default::default()
    };
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(mut rec) => {
                rec.id = config.first_id + out.records.len() as u64;
                out.records.push(rec);
            }
            Err(e) => {
                out.failed += 1;
                out.failures.push((i, e));
            }
        }
    }
    Ok(out)
}
