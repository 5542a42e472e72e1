//! Direction of arrival from calibrated CSI.
//!
//! Subcarriers serve as snapshots for the spatial covariance (frequency
//! smoothing), optionally followed by forward-backward averaging, so coherent
//! paths with different delays stay resolvable. Steering vectors are evaluated
//! at a single frequency, by default the carrier.

mod spectrum;

pub use spectrum::{
    bartlett_spectrum, music_spectrum, pick_peaks, AngleGrid, DoaMethod, Peak, SpatialSpectrum,
    MUSIC_FLOOR,
};

use crate::calib::{apply_profile, CalibError, CalibrationProfile};
use crate::dataset::FrameRecord;
use crate::phy_rx::CsiMatrix;
use crate::waveform::{array_phase, ArrayGeometry};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use std::f64::consts::FRAC_PI_2;
use thiserror::Error;

const DOMAIN_SLACK: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DoaError {
    #[error("azimuth {0} rad outside [-π/2, π/2]")]
    Domain(f64),
    #[error("invalid DoA configuration: {0}")]
    Config(String),
    #[error("covariance is {matrix}×{matrix}, steering model has {model} elements")]
    Shape { matrix: usize, model: usize },
    #[error(transparent)]
    Calib(#[from] CalibError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SteeringModel {
    pub geometry: ArrayGeometry,
    pub frequency: f64,
}

impl SteeringModel {
    pub fn new(geometry: ArrayGeometry) -> Self {
        let frequency = geometry.carrier_frequency;
        Self {
            geometry,
            frequency,
        }
    }

    pub fn with_frequency(mut self, frequency: f64) -> Self {
        self.frequency = frequency;
        self
    }

    pub fn n_channels(&self) -> usize {
        self.geometry.n_channels()
    }
}

/// `a_m(θ) = e^{-j2π(d_m·u(θ))/λ}` at the model frequency.
pub fn steering_vector(
    model: &SteeringModel,
    azimuth: f64,
) -> Result<DVector<Complex64>, DoaError> {
    if !(azimuth.abs() <= FRAC_PI_2 + DOMAIN_SLACK) {
        return Err(DoaError::Domain(azimuth));
    }
    let scale = model.frequency / model.geometry.carrier_frequency;
    Ok(DVector::from_fn(model.n_channels(), |m, _| {
        Complex64::from_polar(1.0, -array_phase(&model.geometry, m, azimuth) * scale)
    }))
}

/// `R = (1/K) Σ_k x_k x_k^H` over subcarrier snapshots, then `(R + J R* J)/2`
/// when `forward_backward` is set.
pub fn spatial_covariance(csi: &CsiMatrix, forward_backward: bool) -> DMatrix<Complex64> {
    let n = csi.n_channels();
    let k = csi.n_subcarriers();
    let mut r = DMatrix::<Complex64>::zeros(n, n);
    for row in 0..k {
        let x = csi.row(row);
        for i in 0..n {
            for j in 0..n {
                r[(i, j)] += x[i] * x[j].conj();
            }
        }
    }
    if k > 0 {
        r /= Complex64::new(k as f64, 0.0);
    }
    if forward_backward {
        let fb = DMatrix::from_fn(n, n, |i, j| r[(n - 1 - i, n - 1 - j)].conj());
        r = (r + fb) * Complex64::new(0.5, 0.0);
    }
    r
}

#[derive(Debug, Clone, PartialEq)]
pub struct DoaConfig {
    pub method: DoaMethod,
    pub grid: AngleGrid,
    pub n_sources: usize,
    pub forward_backward: bool,
}

impl Default for DoaConfig {
    fn default() -> Self {
        Self {
            method: DoaMethod::Music,
            grid: AngleGrid::default(),
            n_sources: 1,
            forward_backward: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DoaEstimate {
    /// Sorted by value, largest first.
    pub peaks: Vec<Peak>,
    pub n_sources_assumed: usize,
    /// Set when the spectrum had fewer local maxima than `n_sources_assumed`.
    pub missing_peaks: bool,
}

impl DoaEstimate {
    pub fn azimuth(&self) -> Option<f64> {
        self.peaks.first().map(|p| p.azimuth)
    }
}

/// Calibrate, form the covariance, evaluate the spectrum and pick peaks.
pub fn estimate_doa_csi(
    csi: &CsiMatrix,
    profile: &CalibrationProfile,
    model: &SteeringModel,
    config: &DoaConfig,
) -> Result<(DoaEstimate, SpatialSpectrum), DoaError> {
    let n = csi.n_channels();
    if config.n_sources == 0 || config.n_sources >= n {
        return Err(DoaError::Config(format!(
            "n_sources must be in 1..{n}, got {}",
            config.n_sources
        )));
    }
    let calibrated = apply_profile(csi, profile)?;
    let r = spatial_covariance(&calibrated, config.forward_backward);
    let spectrum = match config.method {
        DoaMethod::Bartlett => bartlett_spectrum(&r, model, &config.grid)?,
        DoaMethod::Music => music_spectrum(&r, model, config.n_sources, &config.grid)?,
    };
    let peaks = pick_peaks(&spectrum, config.n_sources);
    let estimate = DoaEstimate {
        missing_peaks: peaks.len() < config.n_sources,
        peaks,
        n_sources_assumed: config.n_sources,
    };
    Ok((estimate, spectrum))
}

pub fn estimate_doa(
    record: &FrameRecord,
    profile: &CalibrationProfile,
    model: &SteeringModel,
    config: &DoaConfig,
) -> Result<DoaEstimate, DoaError> {
    estimate_doa_csi(&record.csi_matrix(), profile, model, config).map(|(e, _)| e)
}
