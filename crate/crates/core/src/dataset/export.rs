use super::{read_dataset, DatasetError, FrameRecord};
use num_complex::Complex32;
use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::io::Read;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, PartialEq)]
pub enum ExportSelection {
    All,
    Ids(Vec<u64>),
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExportSummary {
    pub files: Vec<PathBuf>,
    /// One entry per all-zero series (exported as zeros).
    pub warnings: Vec<String>,
}

/// `|x| / max|x|` over the series; all-zero series stay zero.
fn normalized(values: &[Complex32]) -> (Vec<f64>, bool) {
    let mags: Vec<f64> = values.iter().map(|v| v.norm() as f64).collect();
    let max = mags.iter().copied().fold(0.0, f64::max);
    if max > 0.0 {
        (mags.iter().map(|m| m / max).collect(), false)
    } else {
        (vec![0.0; mags.len()], true)
    }
}

fn channel_header(first: &str, n: usize) -> String {
    let mut h = first.to_owned();
    for m in 0..n {
        let _ = write!(h, ",ch{m}");
    }
    h.push('\n');
    h
}

/// Time-domain view: `field,sample,ch0..chN`, each (field, channel) series
/// normalized to its own maximum.
pub fn iq_view_csv(record: &FrameRecord, warnings: &mut Vec<String>) -> String {
    let n_ch = record.n_channels();
    let mut out = channel_header("field,sample", n_ch);
    for f in &record.fields {
        let name = f
            .field()
            .map_or_else(|| format!("id{}", f.id), |id| id.name().to_owned());
        let series: Vec<Vec<f64>> = (0..f.n_channels)
            .map(|m| {
                let (v, zero) = normalized(f.channel(m));
                if zero {
                    warnings.push(format!(
                        "record {} {name} ch{m}: all-zero series",
                        record.id
                    ));
                }
                v
            })
            .collect();
        for i in 0..f.n_samples() {
            let _ = write!(out, "{name},{i}");
            for s in &series {
                let _ = write!(out, ",{}", s[i]);
            }
            out.push('\n');
        }
    }
    out
}

/// Frequency-domain view: `subcarrier,ch0..chN`, one row per subcarrier.
pub fn csi_view_csv(record: &FrameRecord, warnings: &mut Vec<String>) -> String {
    let csi = record.csi_matrix();
    let n_ch = record.n_channels();
    let series: Vec<Vec<f64>> = (0..n_ch)
        .map(|m| {
            let col: Vec<Complex32> = (0..record.csi.n_subcarriers)
                .map(|r| record.csi.get(r, m))
                .collect();
            let (v, zero) = normalized(&col);
            if zero {
                warnings.push(format!("record {} CSI ch{m}: all-zero series", record.id));
            }
            v
        })
        .collect();
    let mut out = channel_header("subcarrier", n_ch);
    for (r, k) in csi.subcarriers().iter().enumerate() {
        let _ = write!(out, "{k}");
        for s in &series {
            let _ = write!(out, ",{}", s[r]);
        }
        out.push('\n');
    }
    out
}

/// Writes `record_<id>_iq.csv` and `record_<id>_csi.csv` for each selected
/// record into `out_dir`.
pub fn export_views<R: Read>(
    source: R,
    selection: &ExportSelection,
    out_dir: &Path,
) -> Result<ExportSummary, DatasetError> {
    let reader = read_dataset(source)?;
    std::fs::create_dir_all(out_dir)
        .map_err(|e| DatasetError::io(format!("creating {}", out_dir.display()), e))?;
    let mut wanted: Option<BTreeSet<u64>> = match selection {
        ExportSelection::All => None,
        ExportSelection::Ids(ids) => Some(ids.iter().copied().collect()),
    };
    let mut summary = ExportSummary::default();
    for record in reader {
        let record = record?;
        if let Some(w) = wanted.as_mut() {
            if !w.remove(&record.id) {
                continue;
            }
        }
        for (suffix, body) in [
            ("iq", iq_view_csv(&record, &mut summary.warnings)),
            ("csi", csi_view_csv(&record, &mut summary.warnings)),
        ] {
            let path = out_dir.join(format!("record_{}_{suffix}.csv", record.id));
            std::fs::write(&path, body)
                .map_err(|e| DatasetError::io(format!("writing {}", path.display()), e))?;
            summary.files.push(path);
        }
    }
    if let Some(missing) = wanted.and_then(|w| w.into_iter().next()) {
        return Err(DatasetError::Selection {
            id: missing,
            reason: "export selection",
        });
    }
    Ok(summary)
}
