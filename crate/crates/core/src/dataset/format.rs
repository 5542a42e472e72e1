use super::{DatasetError, FrameRecord, RecordCsi, RecordField};
use crate::waveform::FieldId;
use num_complex::Complex32;
use std::borrow::Borrow;
use std::collections::VecDeque;
use std::io::{self, Read, Write};

pub const MAGIC: [u8; 8] = *b"FINDDSv1";
pub const FORMAT_VERSION: u32 = 1;
/// Quiet NaN written for an untracked azimuth.
const UNTRACKED_AZIMUTH: u32 = 0x7FC0_0000;
/// Sanity bound on a single field's sample count when decoding.
const MAX_FIELD_SAMPLES: usize = 1 << 20;
/// How many CSI rows the decoder may slide to re-find the first field header.
const MAX_ROW_SLIP: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetHeader {
    pub version: u32,
    pub carrier_hz: f64,
    pub sample_rate_hz: f64,
    pub n_channels: u8,
    pub n_subcarriers: u16,
    pub element_positions: Vec<[f64; 3]>,
    pub environment_label: String,
    pub record_count: u64,
}

impl DatasetHeader {
    pub fn new(
        geometry: &crate::waveform::ArrayGeometry,
        environment_label: &str,
        record_count: u64,
    ) -> Self {
        Self {
            version: FORMAT_VERSION,
            carrier_hz: geometry.carrier_frequency,
            sample_rate_hz: 80e6,
            n_channels: geometry.n_channels() as u8,
            n_subcarriers: 242,
            element_positions: geometry.element_positions.clone(),
            environment_label: environment_label.to_owned(),
            record_count,
        }
    }

    pub fn encoded_len(&self) -> usize {
        8 + 4
            + 8
            + 8
            + 1
            + 2
            + 24 * self.element_positions.len()
            + 2
            + self.environment_label.len()
            + 8
    }

    fn encode(&self) -> Result<Vec<u8>, DatasetError> {
        if self.element_positions.len() != self.n_channels as usize {
            return Err(DatasetError::Format(format!(
                "{} element positions for {} channels",
                self.element_positions.len(),
                self.n_channels
            )));
        }
        if self.environment_label.len() > u16::MAX as usize {
            return Err(DatasetError::Format("environment label too long".into()));
        }
        let mut b = Vec::with_capacity(self.encoded_len());
        b.extend_from_slice(&MAGIC);
        b.extend_from_slice(&self.version.to_le_bytes());
        b.extend_from_slice(&self.carrier_hz.to_le_bytes());
        b.extend_from_slice(&self.sample_rate_hz.to_le_bytes());
        b.push(self.n_channels);
        b.extend_from_slice(&self.n_subcarriers.to_le_bytes());
        for p in &self.element_positions {
            for c in p {
                b.extend_from_slice(&c.to_le_bytes());
            }
        }
        b.extend_from_slice(&(self.environment_label.len() as u16).to_le_bytes());
        b.extend_from_slice(self.environment_label.as_bytes());
        b.extend_from_slice(&self.record_count.to_le_bytes());
        Ok(b)
    }
}

/// Encoded size of one record with the given label length and layout.
pub fn record_size(n_channels: usize, n_subcarriers: usize, label_len: usize) -> usize {
    let fixed = 8 + 8 + 4 + 2 + label_len + 4 * n_channels + 8 + 4;
    let csi = n_subcarriers * n_channels * 8;
    let fields: usize = FieldId::ALL
        .iter()
        .map(|f| 1 + 4 + n_channels * f.len() * 8)
        .sum();
    fixed + csi + fields
}

fn put_c32(buf: &mut Vec<u8>, v: &Complex32) {
    buf.extend_from_slice(&v.re.to_le_bytes());
    buf.extend_from_slice(&v.im.to_le_bytes());
}

fn encode_record(record: &FrameRecord, buf: &mut Vec<u8>) {
    buf.clear();
    buf.extend_from_slice(&record.id.to_le_bytes());
    buf.extend_from_slice(&record.timestamp.to_le_bytes());
    let az = match record.true_azimuth {
        Some(rad) => (rad.to_degrees() as f32).to_bits(),
        None => UNTRACKED_AZIMUTH,
    };
    buf.extend_from_slice(&az.to_le_bytes());
    buf.extend_from_slice(&(record.position_label.len() as u16).to_le_bytes());
    buf.extend_from_slice(record.position_label.as_bytes());
    for s in &record.snr_db {
        buf.extend_from_slice(&s.to_le_bytes());
    }
    buf.extend_from_slice(&record.cfo_hz.to_le_bytes());
    buf.extend_from_slice(&record.detection_metric.to_le_bytes());
    record.csi.values.iter().for_each(|v| put_c32(buf, v));
    for f in &record.fields {
        buf.push(f.id);
        buf.extend_from_slice(&(f.n_samples() as u32).to_le_bytes());
        f.samples.iter().for_each(|v| put_c32(buf, v));
    }
}

/// Streaming writer. The header's `record_count` is a promise checked by
/// [`DatasetWriter::finish`].
pub struct DatasetWriter<W: Write> {
    out: W,
    header: DatasetHeader,
    written: u64,
    bytes: u64,
    buf: Vec<u8>,
}

impl<W: Write> DatasetWriter<W> {
    pub fn new(mut out: W, header: DatasetHeader) -> Result<Self, DatasetError> {
        let encoded = header.encode()?;
        out.write_all(&encoded)
            .map_err(|e| DatasetError::io("writing dataset header", e))?;
        Ok(Self {
            out,
            header,
            written: 0,
            bytes: encoded.len() as u64,
            buf: Vec::new(),
        })
    }

    pub fn write_record(&mut self, record: &FrameRecord) -> Result<(), DatasetError> {
        let problems = record.shape_violations(
            self.header.n_channels as usize,
            self.header.n_subcarriers as usize,
        );
        if let Some(reason) = problems.into_iter().next() {
            return Err(DatasetError::Schema {
                id: record.id,
                reason,
            });
        }
        if self.written >= self.header.record_count {
            return Err(DatasetError::Schema {
                id: record.id,
                reason: format!("header declares only {} records", self.header.record_count),
            });
        }
        encode_record(record, &mut self.buf);
        self.out
            .write_all(&self.buf)
            .map_err(|e| DatasetError::io(format!("writing record {}", record.id), e))?;
        self.written += 1;
        self.bytes += self.buf.len() as u64;
        Ok(())
    }

    /// Flushes and returns the total byte count.
    pub fn finish(mut self) -> Result<u64, DatasetError> {
        if self.written != self.header.record_count {
            return Err(DatasetError::Format(format!(
                "header declares {} records, {} written",
                self.header.record_count, self.written
            )));
        }
        self.out
            .flush()
            .map_err(|e| DatasetError::io("flushing dataset", e))?;
        Ok(self.bytes)
    }
}

/// Writes `header` followed by every record; returns the byte count.
pub fn write_dataset<W, I>(
    header: &DatasetHeader,
    records: I,
    destination: W,
) -> Result<u64, DatasetError>
where
    W: Write,
    I: IntoIterator,
    I::Item: Borrow<FrameRecord>,
{
    let mut writer = DatasetWriter::new(destination, header.clone())?;
    for r in records {
        writer.write_record(r.borrow())?;
    }
    writer.finish()
}

/// `Read` with a pushback queue, so the decoder can un-read look-ahead bytes.
struct ByteSource<R> {
    inner: R,
    pushback: VecDeque<u8>,
}

impl<R: Read> ByteSource<R> {
    fn read_exact(&mut self, buf: &mut [u8]) -> io::Result<()> {
        let from_queue = self.pushback.len().min(buf.len());
        for b in buf[..from_queue].iter_mut() {
            *b = self.pushback.pop_front().expect("length checked");
        }
        self.inner.read_exact(&mut buf[from_queue..])
    }

    fn unread(&mut self, bytes: &[u8]) {
        for b in bytes.iter().rev() {
            self.pushback.push_front(*b);
        }
    }

    fn at_eof(&mut self) -> io::Result<bool> {
        if !self.pushback.is_empty() {
            return Ok(false);
        }
        let mut one = [0u8; 1];
        loop {
            match self.inner.read(&mut one) {
                Ok(0) => return Ok(true),
                Ok(_) => {
                    self.pushback.push_back(one[0]);
                    return Ok(false);
                }
                Err(e) if e.kind() == io::ErrorKind::Interrupted => continue,
                Err(e) => return Err(e),
            }
        }
    }
}

fn le_u16(b: &[u8]) -> u16 {
    u16::from_le_bytes([b[0], b[1]])
}
fn le_u32(b: &[u8]) -> u32 {
    u32::from_le_bytes([b[0], b[1], b[2], b[3]])
}
fn le_u64(b: &[u8]) -> u64 {
    u64::from_le_bytes(b[..8].try_into().expect("8 bytes"))
}
fn le_f32(b: &[u8]) -> f32 {
    f32::from_bits(le_u32(b))
}
fn le_f64(b: &[u8]) -> f64 {
    f64::from_bits(le_u64(b))
}

fn decode_c32(bytes: &[u8]) -> Vec<Complex32> {
    bytes
        .chunks_exact(8)
        .map(|c| Complex32::new(le_f32(&c[..4]), le_f32(&c[4..])))
        .collect()
}

fn is_first_field_header(b: &[u8]) -> bool {
    b[0] == FieldId::LStf as u8 && le_u32(&b[1..5]) as usize == FieldId::LStf.len()
}

/// Streaming reader: the header is decoded on open, records lazily.
pub struct DatasetReader<R: Read> {
    src: ByteSource<R>,
    header: DatasetHeader,
    next_index: u64,
    failed: bool,
}

enum Decode {
    Eof,
    Other(DatasetError),
}

impl From<io::Error> for Decode {
    fn from(e: io::Error) -> Self {
        if e.kind() == io::ErrorKind::UnexpectedEof {
            Decode::Eof
        } else {
            Decode::Other(DatasetError::io("reading record", e))
        }
    }
}

impl<R: Read> DatasetReader<R> {
    pub fn open(source: R) -> Result<Self, DatasetError> {
        let mut src = ByteSource {
            inner: source,
            pushback: VecDeque::new(),
        };
        let header = read_header(&mut src)?;
        Ok(Self {
            src,
            header,
            next_index: 0,
            failed: false,
        })
    }

    pub fn header(&self) -> &DatasetHeader {
        &self.header
    }

    /// True once all declared records were read and bytes remain.
    pub fn has_trailing_data(&mut self) -> io::Result<bool> {
        Ok(!self.src.at_eof()?)
    }

    fn read_record(&mut self) -> Result<FrameRecord, Decode> {
        let n_ch = self.header.n_channels as usize;
        let n_sub = self.header.n_subcarriers as usize;
        let mut fixed = [0u8; 22];
        self.src.read_exact(&mut fixed)?;
        let id = le_u64(&fixed[0..8]);
        let timestamp = le_f64(&fixed[8..16]);
        let az = le_f32(&fixed[16..20]);
        let label_len = le_u16(&fixed[20..22]) as usize;
        let mut label = vec![0u8; label_len];
        self.src.read_exact(&mut label)?;
        let position_label = String::from_utf8(label).map_err(|_| {
            Decode::Other(DatasetError::Format(format!(
                "record {id}: position label is not UTF-8"
            )))
        })?;
        let mut tail = vec![0u8; 4 * n_ch + 12];
        self.src.read_exact(&mut tail)?;
        let snr_db = tail[..4 * n_ch].chunks_exact(4).map(le_f32).collect();
        let cfo_hz = le_f64(&tail[4 * n_ch..4 * n_ch + 8]);
        let detection_metric = le_f32(&tail[4 * n_ch + 8..]);

        let row = 8 * n_ch;
        let mut csi_bytes = vec![0u8; n_sub * row];
        self.src.read_exact(&mut csi_bytes)?;
        let mut head = [0u8; 5];
        self.src.read_exact(&mut head)?;
        if !is_first_field_header(&head) {
            self.realign_csi(&mut csi_bytes, head, row)
                .map_err(Decode::Other)?;
        } else {
            self.src.unread(&head);
        }
        let csi = RecordCsi {
            n_subcarriers: csi_bytes.len() / row.max(1),
            n_channels: n_ch,
            values: decode_c32(&csi_bytes),
        };

        let mut fields = Vec::with_capacity(FieldId::ALL.len());
        for _ in 0..FieldId::ALL.len() {
            let mut fh = [0u8; 5];
            self.src.read_exact(&mut fh)?;
            let n = le_u32(&fh[1..]) as usize;
            if n > MAX_FIELD_SAMPLES {
                return Err(Decode::Other(DatasetError::Format(format!(
                    "record {id}: field {} claims {n} samples",
                    fh[0]
                ))));
            }
            let mut data = vec![0u8; n_ch * n * 8];
            self.src.read_exact(&mut data)?;
            fields.push(RecordField {
                id: fh[0],
                n_channels: n_ch,
                samples: decode_c32(&data),
            });
        }

        Ok(FrameRecord {
            id,
            timestamp,
            true_azimuth: (!az.is_nan()).then(|| (az as f64).to_radians()),
            position_label,
            snr_db,
            cfo_hz,
            detection_metric,
            csi,
            fields,
        })
    }

    /// The CSI block was not followed by an L-STF field header. Slide by whole
    /// rows (back into the CSI bytes, then forward) until one is found, so a
    /// record with the wrong row count is reported by shape instead of
    /// desynchronizing the rest of the stream.
    fn realign_csi(
        &mut self,
        csi: &mut Vec<u8>,
        head: [u8; 5],
        row: usize,
    ) -> Result<(), DatasetError> {
        let mut joined = csi.clone();
        joined.extend_from_slice(&head);
        let rows = csi.len() / row.max(1);
        for back in 1..=rows.min(MAX_ROW_SLIP) {
            let pos = csi.len() - back * row;
            if is_first_field_header(&joined[pos..pos + 5]) {
                self.src.unread(&joined[pos..]);
                csi.truncate(pos);
                return Ok(());
            }
        }
        let mut extra = head.to_vec();
        for fwd in 1..=MAX_ROW_SLIP {
            let need = fwd * row + 5;
            if extra.len() < need {
                let mut more = vec![0u8; need - extra.len()];
                if self.src.read_exact(&mut more).is_err() {
                    break;
                }
                extra.extend_from_slice(&more);
            }
            if is_first_field_header(&extra[fwd * row..fwd * row + 5]) {
                csi.extend_from_slice(&extra[..fwd * row]);
                self.src.unread(&extra[fwd * row..]);
                return Ok(());
            }
        }
        Err(DatasetError::Format(format!(
            "record {}: no L-STF field header after CSI block",
            self.next_index
        )))
    }
}

fn read_header<R: Read>(src: &mut ByteSource<R>) -> Result<DatasetHeader, DatasetError> {
    let map = |e: io::Error| {
        if e.kind() == io::ErrorKind::UnexpectedEof {
            DatasetError::Format("file ends inside the header".into())
        } else {
            DatasetError::io("reading dataset header", e)
        }
    };
    let mut fixed = [0u8; 8 + 4 + 8 + 8 + 1 + 2];
    src.read_exact(&mut fixed).map_err(map)?;
    if fixed[..8] != MAGIC {
        return Err(DatasetError::Format("bad magic".into()));
    }
    let version = le_u32(&fixed[8..12]);
    if version > FORMAT_VERSION {
        return Err(DatasetError::Version(version));
    }
    if version == 0 {
        return Err(DatasetError::Format("version 0".into()));
    }
    let carrier_hz = le_f64(&fixed[12..20]);
    let sample_rate_hz = le_f64(&fixed[20..28]);
    let n_channels = fixed[28];
    let n_subcarriers = le_u16(&fixed[29..31]);
    let mut pos = vec![0u8; 24 * n_channels as usize];
    src.read_exact(&mut pos).map_err(map)?;
    let element_positions = pos
        .chunks_exact(24)
        .map(|c| [le_f64(&c[0..8]), le_f64(&c[8..16]), le_f64(&c[16..24])])
        .collect();
    let mut len = [0u8; 2];
    src.read_exact(&mut len).map_err(map)?;
    let mut label = vec![0u8; le_u16(&len) as usize];
    src.read_exact(&mut label).map_err(map)?;
    let environment_label = String::from_utf8(label)
        .map_err(|_| DatasetError::Format("environment label is not UTF-8".into()))?;
    let mut count = [0u8; 8];
    src.read_exact(&mut count).map_err(map)?;
    Ok(DatasetHeader {
        version,
        carrier_hz,
        sample_rate_hz,
        n_channels,
        n_subcarriers,
        element_positions,
        environment_label,
        record_count: le_u64(&count),
    })
}

impl<R: Read> Iterator for DatasetReader<R> {
    type Item = Result<FrameRecord, DatasetError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.failed || self.next_index >= self.header.record_count {
            return None;
        }
        let index = self.next_index;
        match self.read_record() {
            Ok(r) => {
                self.next_index += 1;
                Some(Ok(r))
            }
            Err(e) => {
                self.failed = true;
                Some(Err(match e {
                    Decode::Eof => DatasetError::Truncated { index },
                    Decode::Other(e) => e,
                }))
            }
        }
    }
}

/// Opens a dataset stream; the header is available before any record.
pub fn read_dataset<R: Read>(source: R) -> Result<DatasetReader<R>, DatasetError> {
    DatasetReader::open(source)
}
