#![allow(dead_code)]

use find_core::cli::config::ScenarioConfig;
use find_core::cli::sim::{simulate_dataset, SimulationOutput};
use find_core::dataset::{write_dataset, DatasetHeader, FrameRecord};
use find_core::waveform::ArrayGeometry;

pub const OFFSETS: [f64; 4] = [0.0, 0.7, -1.2, 2.1];

pub fn config(
    seed: u64,
    angles: &[f64],
    frames_per_angle: usize,
    snr_db: Option<f64>,
) -> ScenarioConfig {
    let mut c = ScenarioConfig::default();
    c.seed = seed;
    c.sweep.angles_deg = Some(angles.to_vec());
    c.capture.frames_per_angle = frames_per_angle;
    c.impairments.snr_db = snr_db;
    c.impairments.start_offset = 400;
    c
}

pub fn simulate(config: &ScenarioConfig) -> SimulationOutput {
    simulate_dataset(config, |_| {}).expect("simulation")
}

pub fn records(seed: u64, n: usize) -> Vec<FrameRecord> {
    simulate(&config(seed, &[10.0], n, Some(25.0))).records
}

pub fn header(n_records: usize) -> DatasetHeader {
    DatasetHeader::new(&ArrayGeometry::default(), "test", n_records as u64)
}

pub fn encode(records: &[FrameRecord]) -> Vec<u8> {
    let mut buf = Vec::new();
    write_dataset(&header(records.len()), records, &mut buf).expect("write");
    buf
}
