mod common;

use common::{encode, header, records};
use find_core::dataset::{
    export_views, read_dataset, record_size, validate_dataset, write_dataset, DatasetError,
    DatasetReader, ExportSelection, FrameRecord, MAGIC,
};
use find_core::waveform::FieldId;
use num_complex::Complex32;
use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};

/// Record size straight from the byte layout, independent of the library.
fn oracle_record_size(n_ch: usize, label: usize) -> usize {
    let field_lens = [640, 640, 320, 640, 320, 320, 320];
    8 + 8
        + 4
        + (2 + label)
        + 4 * n_ch
        + 8
        + 4
        + 242 * n_ch * 8
        + field_lens
            .iter()
            .map(|l| 1 + 4 + n_ch * l * 8)
            .sum::<usize>()
}

fn header_len(label: usize, n_ch: usize) -> usize {
    8 + 4 + 8 + 8 + 1 + 2 + 24 * n_ch + 2 + label + 8
}

#[test]
fn empty_dataset_is_header_only() {
    let bytes = encode(&[]);
    assert_eq!(bytes.len(), header_len(4, 4));
    assert_eq!(&bytes[..8], &MAGIC);
    let report = validate_dataset(&bytes[..]).unwrap();
    assert!(report.is_valid());
    assert_eq!(report.declared_records, 0);
    let reader = read_dataset(&bytes[..]).unwrap();
    assert_eq!(reader.header().record_count, 0);
    assert_eq!(reader.count(), 0);
}

#[test]
fn round_trip_is_bit_exact() {
    let mut recs = records(1, 3);
    recs[1].true_azimuth = None;
    let bytes = encode(&recs);
    let back: Vec<FrameRecord> = read_dataset(&bytes[..])
        .unwrap()
        .map(Result::unwrap)
        .collect();
    assert_eq!(back.len(), 3);
    for (a, b) in back.iter().zip(&recs) {
        assert_eq!(a.id, b.id);
        assert_eq!(a.timestamp.to_bits(), b.timestamp.to_bits());
        assert_eq!(a.csi.values.len(), b.csi.values.len());
        for (x, y) in a.csi.values.iter().zip(&b.csi.values) {
            assert_eq!(
                (x.re.to_bits(), x.im.to_bits()),
                (y.re.to_bits(), y.im.to_bits())
            );
        }
        assert_eq!(a.fields, b.fields);
    }
    assert_eq!(back[0], recs[0]);
    assert!(back[1].true_azimuth.is_none());
    // untracked azimuth is the quiet NaN pattern
    let off = header_len(4, 4) + oracle_record_size(4, recs[0].position_label.len()) + 16;
    assert_eq!(&bytes[off..off + 4], &0x7FC0_0000u32.to_le_bytes());
    assert_eq!(encode(&back), bytes);
}

#[test]
fn size_formula_matches_ten_thousand_records() {
    let base = records(2, 1).remove(0);
    let n = 10_000;
    let mut writer_out = Vec::new();
    let recs = (0..n as u64).map(|id| FrameRecord { id, ..base.clone() });
    let bytes = write_dataset(&header(n), recs, &mut writer_out).unwrap();
    let label = base.position_label.len();
    assert_eq!(record_size(4, 242, label), oracle_record_size(4, label));
    let expected = header_len(4, 4) + n * oracle_record_size(4, label);
    assert_eq!(bytes as usize, expected);
    assert_eq!(writer_out.len(), expected);
}

#[test]
fn corrupted_magic_is_a_format_error() {
    let mut bytes = encode(&records(3, 2));
    bytes[3] ^= 0xFF;
    assert!(matches!(
        read_dataset(&bytes[..]),
        Err(DatasetError::Format(_))
    ));
    assert!(validate_dataset(&bytes[..]).is_err());
}

#[test]
fn newer_version_rejected() {
    let mut bytes = encode(&records(3, 1));
    bytes[8..12].copy_from_slice(&2u32.to_le_bytes());
    assert!(matches!(
        read_dataset(&bytes[..]),
        Err(DatasetError::Version(2))
    ));
}

#[test]
fn truncation_reports_record_index() {
    let recs = records(4, 10);
    let bytes = encode(&recs);
    let rs = oracle_record_size(4, recs[0].position_label.len());
    let cut = header_len(4, 4) + 7 * rs + rs / 2;
    let mut reader = read_dataset(&bytes[..cut]).unwrap();
    for i in 0..7 {
        assert_eq!(reader.next().unwrap().unwrap().id, i);
    }
    assert!(matches!(
        reader.next(),
        Some(Err(DatasetError::Truncated { index: 7 }))
    ));
    assert!(reader.next().is_none());
}

#[test]
fn short_csi_record_is_one_violation() {
    let recs = records(5, 6);
    let mut bytes = encode(&recs);
    let label = recs[0].position_label.len();
    let rs = oracle_record_size(4, label);
    // drop the last CSI row (4 channels × 8 bytes) of record 3
    let csi_end = header_len(4, 4) + 3 * rs + (8 + 8 + 4 + 2 + label + 16 + 8 + 4) + 242 * 32;
    bytes.drain(csi_end - 32..csi_end);
    let report = validate_dataset(&bytes[..]).unwrap();
    assert_eq!(report.records_read, 6, "{report:?}");
    assert_eq!(report.violations.len(), 1, "{:?}", report.violations);
    assert_eq!(report.violations[0].record_id, Some(3));
    assert!(report.violations[0].message.contains("241"));
}

#[test]
fn validation_does_not_touch_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d.find");
    std::fs::write(&path, encode(&records(6, 3))).unwrap();
    let digest = |p: &std::path::Path| {
        let mut h = DefaultHasher::new();
        std::fs::read(p).unwrap().hash(&mut h);
        h.finish()
    };
    let before = digest(&path);
    let report = validate_dataset(std::fs::File::open(&path).unwrap()).unwrap();
    assert!(report.is_valid());
    assert_eq!(digest(&path), before);
}

#[test]
fn sweep_histogram_has_25_bins() {
    let angles: Vec<f64> = (-12..=12).map(|i| i as f64 * 5.0).collect();
    let out = common::simulate(&common::config(7, &angles, 2, Some(20.0)));
    let report = validate_dataset(&encode(&out.records)[..]).unwrap();
    assert!(report.is_valid());
    assert_eq!(report.nonempty_angle_bins(), 25);
    assert_eq!(report.untracked, 0);
}

#[test]
fn writer_rejects_mismatched_record() {
    let mut recs = records(8, 2);
    recs[1].csi.n_subcarriers = 241;
    recs[1].csi.values.truncate(241 * 4);
    let err = write_dataset(&header(2), &recs, Vec::new()).unwrap_err();
    assert!(matches!(err, DatasetError::Schema { id: 1, .. }), "{err}");
}

#[test]
fn reader_yields_header_before_records() {
    let bytes = encode(&records(9, 2));
    let reader = DatasetReader::open(&bytes[..]).unwrap();
    assert_eq!(reader.header().n_subcarriers, 242);
    assert_eq!(reader.header().record_count, 2);
}

fn parse_csv(text: &str) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut lines = text.lines();
    let head = lines
        .next()
        .unwrap()
        .split(',')
        .map(str::to_owned)
        .collect();
    let rows = lines
        .map(|l| {
            l.split(',')
                .map(|c| c.parse::<f64>().unwrap_or(f64::NAN))
                .collect()
        })
        .collect();
    (head, rows)
}

#[test]
fn export_normalizes_and_keeps_periodicity() {
    let noiseless = common::simulate(&common::config(10, &[0.0], 2, None)).records;
    let dir = tempfile::tempdir().unwrap();
    let summary = export_views(
        &encode(&noiseless)[..],
        &ExportSelection::Ids(vec![1]),
        dir.path(),
    )
    .unwrap();
    assert_eq!(summary.files.len(), 2);
    assert!(summary.warnings.is_empty());

    let (head, rows) =
        parse_csv(&std::fs::read_to_string(dir.path().join("record_1_csi.csv")).unwrap());
    assert_eq!(head, ["subcarrier", "ch0", "ch1", "ch2", "ch3"]);
    assert_eq!(rows.len(), 242);
    assert!(rows.iter().all(|r| r.len() == 5));
    for m in 1..5 {
        let max = rows.iter().map(|r| r[m]).fold(0.0, f64::max);
        assert_eq!(max, 1.0);
    }

    let text = std::fs::read_to_string(dir.path().join("record_1_iq.csv")).unwrap();
    let (head, rows) = parse_csv(&text);
    assert_eq!(&head[..2], ["field", "sample"]);
    let stf: Vec<&Vec<f64>> = text
        .lines()
        .skip(1)
        .zip(&rows)
        .filter(|(l, _)| l.starts_with("L-STF,"))
        .map(|(_, r)| r)
        .collect();
    assert_eq!(stf.len(), 640);
    for m in 2..6 {
        let max = stf.iter().map(|r| r[m]).fold(0.0, f64::max);
        assert_eq!(max, 1.0);
        for rep in 1..10 {
            for i in 0..64 {
                let (a, b) = (stf[i][m], stf[rep * 64 + i][m]);
                assert!((a - b).abs() < 1e-5, "rep {rep} sample {i}: {a} vs {b}");
            }
        }
    }
}

#[test]
fn export_flags_all_zero_series() {
    let mut rec = records(11, 1).remove(0);
    for r in 0..242 {
        rec.csi.values[r * 4 + 2] = Complex32::new(0.0, 0.0);
    }
    let stf = rec
        .fields
        .iter_mut()
        .find(|f| f.id == FieldId::LStf as u8)
        .unwrap();
    let n = stf.n_samples();
    stf.samples[..n].fill(Complex32::new(0.0, 0.0));
    let dir = tempfile::tempdir().unwrap();
    let summary = export_views(&encode(&[rec])[..], &ExportSelection::All, dir.path()).unwrap();
    assert_eq!(summary.warnings.len(), 2, "{:?}", summary.warnings);
    let csv = std::fs::read_to_string(dir.path().join("record_0_csi.csv")).unwrap();
    assert!(csv
        .lines()
        .skip(1)
        .all(|l| l.split(',').nth(3) == Some("0")));
}

#[test]
fn export_missing_id_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let err = export_views(
        &encode(&records(12, 2))[..],
        &ExportSelection::Ids(vec![0, 99]),
        dir.path(),
    )
    .unwrap_err();
    assert!(matches!(err, DatasetError::Selection { id: 99, .. }));
}
