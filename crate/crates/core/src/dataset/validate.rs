use super::{read_dataset, DatasetError};
use std::collections::BTreeMap;
use std::io::Read;

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    /// Position of the record in the file.
    pub index: u64,
    pub record_id: Option<u64>,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationReport {
    pub declared_records: u64,
    pub records_read: u64,
    pub violations: Vec<Violation>,
    /// Min and max over all finite per-channel SNR values.
    pub snr_range: Option<(f32, f32)>,
    /// Tracked azimuths counted in 1° bins keyed by the rounded degree.
    pub angle_histogram: BTreeMap<i32, u64>,
    pub untracked: u64,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn nonempty_angle_bins(&self) -> usize {
        self.angle_histogram.values().filter(|c| **c > 0).count()
    }

    pub fn summary(&self) -> String {
        let mut s = format!(
            "records_declared={} records_read={} violations={} angle_bins={} untracked={}",
            self.declared_records,
            self.records_read,
            self.violations.len(),
            self.nonempty_angle_bins(),
            self.untracked
        );
        if let Some((lo, hi)) = self.snr_range {
            s.push_str(&format!(" snr_min_db={lo} snr_max_db={hi}"));
        }
        s
    }
}

/// Reads the whole stream once and reports every problem found. Only header
/// and I/O failures are errors; everything else becomes a [`Violation`].
pub fn validate_dataset<R: Read>(source: R) -> Result<ValidationReport, DatasetError> {
    let mut reader = read_dataset(source)?;
    let header = reader.header().clone();
    let mut report = ValidationReport {
        declared_records: header.record_count,
        ..Default::default()
    };
    let n_ch = header.n_channels as usize;
    let n_sub = header.n_subcarriers as usize;
    if header.version == 1 && n_sub != 242 {
        report.violations.push(Violation {
            index: 0,
            record_id: None,
            message: format!("version 1 requires 242 subcarriers, header has {n_sub}"),
        });
    }

    let mut index = 0u64;
    for item in reader.by_ref() {
        let record = match item {
            Ok(r) => r,
            Err(DatasetError::Io { context, source }) => {
                return Err(DatasetError::Io { context, source })
            }
            Err(e) => {
                report.violations.push(Violation {
                    index,
                    record_id: None,
                    message: e.to_string(),
                });
                break;
            }
        };
        for message in record.shape_violations(n_ch, n_sub) {
            report.violations.push(Violation {
                index,
                record_id: Some(record.id),
                message,
            });
        }
        for s in &record.snr_db {
            if s.is_finite() {
                let (lo, hi) = report.snr_range.unwrap_or((*s, *s));
                report.snr_range = Some((lo.min(*s), hi.max(*s)));
            } else {
                report.violations.push(Violation {
                    index,
                    record_id: Some(record.id),
                    message: format!("non-finite SNR {s}"),
                });
            }
        }
        match record.true_azimuth {
            Some(a) => {
                let deg = a.to_degrees();
                if !(-90.0..=90.0).contains(&deg) {
                    report.violations.push(Violation {
                        index,
                        record_id: Some(record.id),
                        message: format!("azimuth {deg}° outside [-90, 90]"),
                    });
                }
                *report
                    .angle_histogram
                    .entry(deg.round() as i32)
                    .or_default() += 1;
            }
            None => report.untracked += 1,
        }
        index += 1;
        report.records_read = index;
    }

    if index == header.record_count
        && reader
            .has_trailing_data()
            .map_err(|e| DatasetError::io("checking for trailing bytes", e))?
    {
        report.violations.push(Violation {
            index,
            record_id: None,
            message: "bytes after the last declared record".into(),
        });
    }
    Ok(report)
}
