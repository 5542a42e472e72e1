//! Software receive chain for a 4-channel 80 MHz Wi-Fi receiver.
//!
//! The crate is split along the processing chain:
//!
//! * [`waveform`] synthesizes 802.11ac VHT preambles and pushes them through a
//!   multipath / antenna-array / impairment model. It is the ground truth for
//!   every receiver test.
//! * [`phy_rx`] detects frames, corrects carrier frequency offset, slices the
//!   preamble fields and estimates CSI on all 242 subcarriers plus per-channel SNR.
//! * [`calib`] estimates the constant inter-channel phase offsets from frames
//!   captured with equidistant antennas and applies them to CSI.
//! * [`doa`] turns calibrated CSI into Bartlett / MUSIC spatial spectra.
//! * [`dataset`] is the on-disk record container and CSV views.
//! * [`cli`] wires everything into the `find` command line tool.

pub mod calib;
pub mod cli;
pub mod dataset;
pub mod doa;
pub mod dsp;
pub mod phy_rx;
pub mod stats;
pub mod waveform;

pub use num_complex::{Complex32, Complex64};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
