//! Python bindings for `find_core`.
//!
//! Records and profiles are wrapped as opaque classes; angles cross the
//! boundary in degrees, phases in radians.

use find_core::calib::{self, CalibrationMeasurement, CalibrationProfile};
use find_core::cli::config::ScenarioConfig;
use find_core::cli::{raw, sim};
use find_core::dataset::{self, DatasetHeader, FrameRecord};
use find_core::doa::{self, AngleGrid, DoaConfig, DoaMethod, SteeringModel};
use find_core::phy_rx::{process_capture, ReceiverConfig};
use find_core::waveform::ArrayGeometry;
use num_complex::Complex32;
use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use std::fs::File;
use std::io::{BufReader, BufWriter};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn io_err(e: impl std::fmt::Display) -> PyErr {
    PyIOError::new_err(e.to_string())
}

#[pyclass(name = "FrameRecord", module = "find_py", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct PyFrameRecord {
    inner: FrameRecord,
}

#[pymethods]
impl PyFrameRecord {
    #[getter]
    fn id(&self) -> u64 {
        self.inner.id
    }

    #[getter]
    fn timestamp(&self) -> f64 {
        self.inner.timestamp
    }

    /// Ground-truth azimuth in degrees, `None` when untracked.
    #[getter]
    fn true_azimuth_deg(&self) -> Option<f64> {
        self.inner.true_azimuth.map(f64::to_degrees)
    }

    #[getter]
    fn position_label(&self) -> String {
        self.inner.position_label.clone()
    }

    #[getter]
    fn snr_db(&self) -> Vec<f32> {
        self.inner.snr_db.clone()
    }

    #[getter]
    fn cfo_hz(&self) -> f64 {
        self.inner.cfo_hz
    }

    #[getter]
    fn detection_metric(&self) -> f32 {
        self.inner.detection_metric
    }

    #[getter]
    fn n_channels(&self) -> usize {
        self.inner.n_channels()
    }

    /// CSI rows, one list of per-channel values per subcarrier.
    fn csi(&self) -> Vec<Vec<Complex32>> {
        let c = &self.inner.csi;
        (0..c.n_subcarriers)
            .map(|r| (0..c.n_channels).map(|m| c.get(r, m)).collect())
            .collect()
    }

    /// Samples of one preamble field (0 = L-STF .. 6 = VHT-SIG-B) on one channel.
    fn field(&self, field_id: u8, channel: usize) -> PyResult<Vec<Complex32>> {
        let f = self
            .inner
            .fields
            .iter()
            .find(|f| f.id == field_id)
            .ok_or_else(|| value_err(format!("record has no field {field_id}")))?;
        if channel >= f.n_channels {
            return Err(value_err(format!("channel {channel} out of range")));
        }
        Ok(f.channel(channel).to_vec())
    }

    fn __repr__(&self) -> String {
        format!(
            "FrameRecord(id={}, position={:?}, true_azimuth_deg={:?})",
            self.inner.id,
            self.inner.position_label,
            self.true_azimuth_deg()
        )
    }
}

#[pyclass(
    name = "CalibrationProfile",
    module = "find_py",
    frozen,
    skip_from_py_object
)]
#[derive(Clone)]
pub struct PyCalibrationProfile {
    inner: CalibrationProfile,
}

#[pymethods]
impl PyCalibrationProfile {
    #[new]
    #[pyo3(signature = (offsets, environment_label = "manual"))]
    fn new(offsets: Vec<f64>, environment_label: &str) -> Self {
        Self {
            inner: CalibrationProfile::from_offsets(offsets, environment_label),
        }
    }

    #[staticmethod]
    fn from_text(text: &str) -> PyResult<Self> {
        CalibrationProfile::parse(text)
            .map(|inner| Self { inner })
            .map_err(value_err)
    }

    fn to_text(&self) -> String {
        self.inner.to_text()
    }

    #[getter]
    fn offsets(&self) -> Vec<f64> {
        self.inner.offsets.clone()
    }

    #[getter]
    fn circular_std(&self) -> Vec<f64> {
        self.inner.circular_std.clone()
    }

    #[getter]
    fn n_frames_used(&self) -> usize {
        self.inner.n_frames_used
    }

    #[getter]
    fn environment_label(&self) -> String {
        self.inner.environment_label.clone()
    }

    fn __repr__(&self) -> String {
        format!("CalibrationProfile(offsets={:?})", self.inner.offsets)
    }
}

fn wrap(records: Vec<FrameRecord>) -> Vec<PyFrameRecord> {
    records
        .into_iter()
        .map(|inner| PyFrameRecord { inner })
        .collect()
}

fn unwrap(records: &[PyRef<'_, PyFrameRecord>]) -> Vec<FrameRecord> {
    records.iter().map(|r| r.inner.clone()).collect()
}

/// Simulates the scenario described by a TOML document and returns records.
#[pyfunction]
#[pyo3(signature = (config = ""))]
fn simulate(py: Python<'_>, config: &str) -> PyResult<Vec<PyFrameRecord>> {
    let cfg = ScenarioConfig::parse(config).map_err(value_err)?;
    let out = py
        .detach(|| sim::simulate_dataset(&cfg, |_| {}))
        .map_err(value_err)?;
    Ok(wrap(out.records))
}

/// Receives a raw channel-major cf32 capture file.
#[pyfunction]
#[pyo3(signature = (path, channels = 4, threshold = 0.8, position_label = ""))]
fn process_raw(
    py: Python<'_>,
    path: &str,
    channels: usize,
    threshold: f64,
    position_label: &str,
) -> PyResult<Vec<PyFrameRecord>> {
    let file = File::open(path).map_err(io_err)?;
    let capture = raw::read_raw(BufReader::new(file), channels, 80e6).map_err(value_err)?;
    let rc = ReceiverConfig {
        threshold,
        geometry: ArrayGeometry::half_wavelength_ula(channels, 2.412e9),
        position_label: position_label.to_owned(),
        ..ReceiverConfig::default()
    };
    let out = py
        .detach(|| process_capture(&capture, &rc))
        .map_err(value_err)?;
    Ok(wrap(out.records))
}

/// Writes records with the default 4-element array header.
#[pyfunction]
#[pyo3(signature = (path, records, environment = "simulated"))]
fn write_dataset(
    path: &str,
    records: Vec<PyRef<'_, PyFrameRecord>>,
    environment: &str,
) -> PyResult<u64> {
    let records = unwrap(&records);
    let n = records.first().map_or(4, FrameRecord::n_channels);
    let header = DatasetHeader::new(
        &ArrayGeometry::half_wavelength_ula(n, 2.412e9),
        environment,
        records.len() as u64,
    );
    let file = File::create(path).map_err(io_err)?;
    dataset::write_dataset(&header, &records, BufWriter::new(file)).map_err(value_err)
}

#[pyfunction]
fn read_dataset(path: &str) -> PyResult<Vec<PyFrameRecord>> {
    let file = File::open(path).map_err(io_err)?;
    let reader = dataset::read_dataset(BufReader::new(file)).map_err(value_err)?;
    let records = reader.collect::<Result<Vec<_>, _>>().map_err(value_err)?;
    Ok(wrap(records))
}

/// Validation summary line; raises on an unreadable header.
#[pyfunction]
fn validate(path: &str) -> PyResult<(bool, String)> {
    let file = File::open(path).map_err(io_err)?;
    let report = dataset::validate_dataset(BufReader::new(file)).map_err(value_err)?;
    Ok((report.is_valid(), report.summary()))
}

#[pyfunction]
#[pyo3(signature = (records, environment = "simulated"))]
fn calibrate(
    records: Vec<PyRef<'_, PyFrameRecord>>,
    environment: &str,
) -> PyResult<PyCalibrationProfile> {
    let m = CalibrationMeasurement::from_records(unwrap(&records));
    calib::aggregate_profile(&m, environment)
        .map(|inner| PyCalibrationProfile { inner })
        .map_err(value_err)
}

/// Cross-position circular std per channel, in radians.
#[pyfunction]
fn stability(records: Vec<PyRef<'_, PyFrameRecord>>) -> PyResult<Vec<f64>> {
    let m = CalibrationMeasurement::from_records(unwrap(&records));
    calib::stability_report(&m, "")
        .map(|r| r.cross_position_std)
        .map_err(value_err)
}

/// `(azimuth_deg, value)` peaks, strongest first.
#[pyfunction]
#[pyo3(signature = (record, profile = None, method = "music", n_sources = 1, step_deg = 0.25))]
fn estimate_doa(
    record: PyRef<'_, PyFrameRecord>,
    profile: Option<PyRef<'_, PyCalibrationProfile>>,
    method: &str,
    n_sources: usize,
    step_deg: f64,
) -> PyResult<Vec<(f64, f64)>> {
    let n = record.inner.n_channels();
    let profile = profile.map_or_else(|| CalibrationProfile::identity(n), |p| p.inner.clone());
    let config = DoaConfig {
        method: method.parse::<DoaMethod>().map_err(value_err)?,
        grid: AngleGrid::new(-90.0, 90.0, step_deg).map_err(value_err)?,
        n_sources,
        forward_backward: true,
    };
    let model = SteeringModel::new(ArrayGeometry::half_wavelength_ula(n, 2.412e9));
    let est = doa::estimate_doa(&record.inner, &profile, &model, &config).map_err(value_err)?;
    Ok(est
        .peaks
        .iter()
        .map(|p| (p.azimuth.to_degrees(), p.value))
        .collect())
}

#[pymodule]
fn find_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyFrameRecord>()?;
    m.add_class::<PyCalibrationProfile>()?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(process_raw, m)?)?;
    m.add_function(wrap_pyfunction!(write_dataset, m)?)?;
    m.add_function(wrap_pyfunction!(read_dataset, m)?)?;
    m.add_function(wrap_pyfunction!(validate, m)?)?;
    m.add_function(wrap_pyfunction!(calibrate, m)?)?;
    m.add_function(wrap_pyfunction!(stability, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_doa, m)?)?;
    Ok(())
}
