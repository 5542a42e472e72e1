//! `find` command-line front end.
//!
//! Exit status is 0 on success, 2 on usage errors and 1 on processing errors.
//! Failures print a single `error: <message>` line to stderr. Summaries go to
//! stdout as `key=value` lines.

pub mod config;
pub mod raw;
pub mod sim;

use crate::calib::{
    aggregate_profile, stability_report, CalibrationMeasurement, CalibrationProfile,
};
use crate::dataset::{
    export_views, read_dataset, validate_dataset, write_dataset, DatasetHeader, ExportSelection,
    FrameRecord,
};
use crate::doa::{estimate_doa_csi, AngleGrid, DoaConfig, DoaMethod, SteeringModel};
use crate::phy_rx::{process_capture, ReceiverConfig};
use crate::stats::wrap_phase;
use crate::waveform::ArrayGeometry;
use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use config::ScenarioConfig;
use rayon::prelude::*;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

#[derive(Debug, Parser)]
#[command(
    name = "find",
    version,
    about = "4-channel Wi-Fi preamble receiver, calibration and DoA toolkit"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a scenario and write the processed dataset.
    Simulate(SimulateArgs),
    /// Turn a raw capture into a dataset.
    Process(ProcessArgs),
    /// Estimate a phase calibration profile from a dataset.
    Calibrate(CalibrateArgs),
    /// Estimate DoA for every record of a dataset.
    Doa(DoaArgs),
    /// Per-position calibration offsets and their spread, as CSV.
    Stability(StabilityArgs),
    /// Write normalized IQ and CSI views of selected records.
    Export(ExportArgs),
    /// Check a dataset file and print a report.
    Validate(ValidateArgs),
    /// Accuracy and throughput against ground truth.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
pub struct ScenarioOverrides {
    /// Scenario file (TOML).
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub snr_db: Option<f64>,
    #[arg(long)]
    pub frames_per_angle: Option<usize>,
    #[arg(long)]
    pub environment: Option<String>,
    #[arg(long)]
    pub threshold: Option<f64>,
}

impl ScenarioOverrides {
    fn load(&self) -> Result<ScenarioConfig> {
        let mut cfg = match &self.config {
            Some(p) => ScenarioConfig::load(p).map_err(|e| anyhow!(e))?,
            None => ScenarioConfig::default(),
        };
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(s) = self.snr_db {
            cfg.impairments.snr_db = Some(s);
        }
        if let Some(n) = self.frames_per_angle {
            cfg.capture.frames_per_angle = n;
        }
        if let Some(e) = &self.environment {
            cfg.environment = e.clone();
        }
        if let Some(t) = self.threshold {
            cfg.receiver.threshold = t;
        }
        Ok(cfg)
    }
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub scenario: ScenarioOverrides,
    /// Dataset path; falls back to `output` in the scenario file.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    /// Also write the raw capture (all groups concatenated).
    #[arg(long)]
    pub raw: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ProcessArgs {
    /// Raw capture: interleaved little-endian f32 I/Q, channel-major blocks.
    #[arg(long, short)]
    pub input: PathBuf,
    #[arg(long, short)]
    pub output: PathBuf,
    #[arg(long, default_value_t = 4)]
    pub channels: usize,
    #[arg(long, default_value_t = 80e6)]
    pub sample_rate: f64,
    /// Array geometry and threshold come from this scenario file when given.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long, default_value = "")]
    pub position: String,
    #[arg(long, default_value = "capture")]
    pub environment: String,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    #[arg(long, short)]
    pub input: PathBuf,
    #[arg(long, short)]
    pub output: PathBuf,
    /// Label stored in the profile; defaults to the dataset's environment.
    #[arg(long)]
    pub environment: Option<String>,
}

#[derive(Debug, Args)]
pub struct DoaOptions {
    /// Calibration profile; none means uncalibrated.
    #[arg(long)]
    pub profile: Option<PathBuf>,
    #[arg(long, default_value = "music")]
    pub method: DoaMethod,
    #[arg(long, default_value_t = 1)]
    pub n_sources: usize,
    /// Disable forward-backward averaging.
    #[arg(long)]
    pub no_forward_backward: bool,
    /// Grid as `start:stop:step` in degrees.
    #[arg(long, default_value = "-90:90:0.25", value_parser = parse_grid)]
    pub grid: AngleGrid,
}

impl DoaOptions {
    fn config(&self) -> DoaConfig {
        DoaConfig {
            method: self.method,
            grid: self.grid,
            n_sources: self.n_sources,
            forward_backward: !self.no_forward_backward,
        }
    }

    fn profile(&self, n_channels: usize) -> Result<CalibrationProfile> {
        match &self.profile {
            Some(p) => read_profile(p),
            None => Ok(CalibrationProfile::identity(n_channels)),
        }
    }
}

fn parse_grid(s: &str) -> std::result::Result<AngleGrid, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [a, b, c] = parts.as_slice() else {
        return Err(format!("grid `{s}` is not start:stop:step"));
    };
    let num = |x: &str| {
        x.trim()
            .parse::<f64>()
            .map_err(|e| format!("grid `{s}`: {e}"))
    };
    AngleGrid::new(num(a)?, num(b)?, num(c)?).map_err(|e| e.to_string())
}

#[derive(Debug, Args)]
pub struct DoaArgs {
    #[arg(long, short)]
    pub input: PathBuf,
    /// Estimates CSV: frame_id,azimuth_deg,peak_value,method.
    #[arg(long, short)]
    pub output: PathBuf,
    #[command(flatten)]
    pub doa: DoaOptions,
    /// Spectrum CSV (angle_deg,value) for one record.
    #[arg(long)]
    pub spectrum: Option<PathBuf>,
    /// Record whose spectrum is written; the first one by default.
    #[arg(long, requires = "spectrum")]
    pub spectrum_frame: Option<u64>,
}

#[derive(Debug, Args)]
pub struct StabilityArgs {
    /// One or more datasets; records are grouped by position label.
    #[arg(long, short, required = true, num_args = 1..)]
    pub input: Vec<PathBuf>,
    #[arg(long, short)]
    pub output: PathBuf,
    #[arg(long)]
    pub environment: Option<String>,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    #[arg(long, short)]
    pub input: PathBuf,
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Comma-separated record ids.
    #[arg(
        long,
        value_delimiter = ',',
        conflicts_with = "all",
        required_unless_present = "all"
    )]
    pub ids: Vec<u64>,
    #[arg(long)]
    pub all: bool,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[arg(long, short)]
    pub input: PathBuf,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Scenario to simulate and time end to end.
    #[command(flatten)]
    pub scenario: ScenarioOverrides,
    /// Evaluate DoA on an existing dataset instead of simulating.
    #[arg(long, short, conflicts_with = "config")]
    pub input: Option<PathBuf>,
    #[command(flatten)]
    pub doa: DoaOptions,
    /// Also write the summary here.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return code;
        }
    };
    match execute(cli.command) {
        Ok(summary) => {
            print!("{summary}");
            0
        }
        Err(e) => {
            let msg = format!("{e:#}").replace('\n', " ");
            eprintln!("error: {msg}");
            1
        }
    }
}

/// Runs one command and returns its stdout summary.
pub fn execute(command: Command) -> Result<String> {
    match command {
        Command::Simulate(a) => simulate(a),
        Command::Process(a) => process(a),
        Command::Calibrate(a) => calibrate(a),
        Command::Doa(a) => doa(a),
        Command::Stability(a) => stability(a),
        Command::Export(a) => export(a),
        Command::Validate(a) => validate(a),
        Command::Bench(a) => bench(a),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("creating {}", path.display()))?,
    ))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(
        File::open(path).with_context(|| format!("opening {}", path.display()))?,
    ))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut w = create(path)?;
    w.write_all(text.as_bytes())
        .and_then(|_| w.flush())
        .with_context(|| format!("writing {}", path.display()))
}

pub fn read_profile(path: &Path) -> Result<CalibrationProfile> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    CalibrationProfile::parse(&text).with_context(|| format!("parsing {}", path.display()))
}

/// Header plus every record, failing on the first bad record.
pub fn load_dataset(path: &Path) -> Result<(DatasetHeader, Vec<FrameRecord>)> {
    let reader =
        read_dataset(open(path)?).with_context(|| format!("reading {}", path.display()))?;
    let header = reader.header().clone();
    let records = reader
        .collect::<std::result::Result<Vec<_>, _>>()
        .with_context(|| format!("reading {}", path.display()))?;
    Ok((header, records))
}

fn geometry_of(header: &DatasetHeader) -> Result<ArrayGeometry> {
    ArrayGeometry::new(header.carrier_hz, header.element_positions.clone()).map_err(|e| anyhow!(e))
}

fn simulate(a: SimulateArgs) -> Result<String> {
    let cfg = a.scenario.load()?;
    let output = a
        .output
        .or_else(|| cfg.output.clone())
        .ok_or_else(|| anyhow!("no output path: pass --output or set `output` in the scenario"))?;
    let mut raw = a.raw.as_ref().map(|_| raw::RawAccumulator::default());
    let out = sim::simulate_dataset(&cfg, |c| {
        if let Some(r) = raw.as_mut() {
            r.push(c)
        }
    })
    .map_err(|e| anyhow!(e))?;
    let header = sim::header_for(&cfg, out.records.len()).map_err(|e| anyhow!(e))?;
    let bytes = write_dataset(&header, &out.records, create(&output)?)
        .with_context(|| format!("writing {}", output.display()))?;
    if let (Some(path), Some(acc)) = (&a.raw, raw) {
        if let Some(capture) = acc.finish() {
            let w = create(path)?;
            raw::write_raw(&capture, w).with_context(|| format!("writing {}", path.display()))?;
        }
    }
    Ok(format!(
        "seed={}\nframes_sent={}\ndetections={}\nfailed={}\nrecords={}\nunmatched={}\nbytes={}\noutput={}\n",
        cfg.seed,
        out.frames_sent,
        out.detections,
        out.failed,
        out.records.len(),
        out.unmatched,
        bytes,
        output.display()
    ))
}

fn process(a: ProcessArgs) -> Result<String> {
    let cfg = match &a.config {
        Some(p) => ScenarioConfig::load(p).map_err(|e| anyhow!(e))?,
        None => ScenarioConfig::default(),
    };
    let geometry = cfg.array.geometry().map_err(|e| anyhow!(e))?;
    if geometry.n_channels() != a.channels {
        bail!(
            "--channels {} but the array has {} elements",
            a.channels,
            geometry.n_channels()
        );
    }
    let capture = raw::read_raw(open(&a.input)?, a.channels, a.sample_rate)
        .map_err(|e| anyhow!(e))
        .with_context(|| format!("reading {}", a.input.display()))?;
    let rc = ReceiverConfig {
        threshold: a.threshold.unwrap_or(cfg.receiver.threshold),
        geometry: geometry.clone(),
        position_label: a.position.clone(),
        ..ReceiverConfig::default()
    };
    if rc.numerology.sample_rate != a.sample_rate {
        bail!(
            "sample rate {} Hz unsupported; the receiver runs at {} Hz",
            a.sample_rate,
            rc.numerology.sample_rate
        );
    }
    let out = process_capture(&capture, &rc)?;
    let header = DatasetHeader::new(&geometry, &a.environment, out.records.len() as u64);
    let bytes = write_dataset(&header, &out.records, create(&a.output)?)
        .with_context(|| format!("writing {}", a.output.display()))?;
    Ok(format!(
        "samples={}\ndetections={}\nfailed={}\nrecords={}\nbytes={}\noutput={}\n",
        capture.len(),
        out.detections,
        out.failed,
        out.records.len(),
        bytes,
        a.output.display()
    ))
}

fn calibrate(a: CalibrateArgs) -> Result<String> {
    let (header, records) = load_dataset(&a.input)?;
    let env = a
        .environment
        .unwrap_or_else(|| header.environment_label.clone());
    let measurement = CalibrationMeasurement::from_records(records);
    let profile = aggregate_profile(&measurement, &env)?;
    write_text(&a.output, &profile.to_text())?;
    let list = |v: &[f64]| {
        v.iter()
            .map(|x| format!("{x:.6}"))
            .collect::<Vec<_>>()
            .join(",")
    };
    Ok(format!(
        "positions={}\nframes_used={}\noffsets_rad={}\ncircular_std_rad={}\noutput={}\n",
        measurement.groups.len(),
        profile.n_frames_used,
        list(&profile.offsets),
        list(&profile.circular_std),
        a.output.display()
    ))
}

struct DoaRow {
    id: u64,
    truth: Option<f64>,
    estimate: crate::doa::DoaEstimate,
}

fn run_doa(
    records: &[FrameRecord],
    profile: &CalibrationProfile,
    model: &SteeringModel,
    config: &DoaConfig,
) -> Result<Vec<DoaRow>> {
    records
        .par_iter()
        .map(|r| {
            let (estimate, _) = estimate_doa_csi(&r.csi_matrix(), profile, model, config)
                .with_context(|| format!("record {}", r.id))?;
            Ok(DoaRow {
                id: r.id,
                truth: r.true_azimuth,
                estimate,
            })
        })
        .collect()
}

fn doa(a: DoaArgs) -> Result<String> {
    let (header, records) = load_dataset(&a.input)?;
    let model = SteeringModel::new(geometry_of(&header)?);
    let profile = a.doa.profile(model.n_channels())?;
    let config = a.doa.config();
    let rows = run_doa(&records, &profile, &model, &config)?;
    let mut csv = String::from("frame_id,azimuth_deg,peak_value,method\n");
    let mut warnings = 0;
    for row in &rows {
        warnings += row.estimate.missing_peaks as usize;
        for p in &row.estimate.peaks {
            let _ = writeln!(
                csv,
                "{},{},{},{}",
                row.id,
                p.azimuth.to_degrees(),
                p.value,
                config.method
            );
        }
    }
    write_text(&a.output, &csv)?;
    if let Some(path) = &a.spectrum {
        let rec = match a.spectrum_frame {
            Some(id) => records
                .iter()
                .find(|r| r.id == id)
                .ok_or_else(|| anyhow!("no record with id {id}"))?,
            None => records
                .first()
                .ok_or_else(|| anyhow!("dataset has no records"))?,
        };
        let (_, spectrum) = estimate_doa_csi(&rec.csi_matrix(), &profile, &model, &config)?;
        write_text(path, &spectrum.to_csv())?;
    }
    let stats = ErrorStats::from_rows(&rows);
    let mut s = format!(
        "records={}\nmethod={}\nmissing_peak_warnings={}\n",
        rows.len(),
        config.method,
        warnings
    );
    stats.append(&mut s);
    let _ = writeln!(s, "output={}", a.output.display());
    Ok(s)
}

#[derive(Debug, Default)]
struct ErrorStats {
    n: usize,
    sum_sq: f64,
    max: f64,
}

impl ErrorStats {
    fn from_rows(rows: &[DoaRow]) -> Self {
        let mut s = Self::default();
        for r in rows {
            if let (Some(t), Some(e)) = (r.truth, r.estimate.azimuth()) {
                let err = wrap_phase(e - t).abs().to_degrees();
                s.n += 1;
                s.sum_sq += err * err;
                s.max = s.max.max(err);
            }
        }
        s
    }

    fn rms(&self) -> Option<f64> {
        (self.n > 0).then(|| (self.sum_sq / self.n as f64).sqrt())
    }

    fn append(&self, s: &mut String) {
        let _ = writeln!(s, "with_truth={}", self.n);
        if let Some(rms) = self.rms() {
            let _ = writeln!(s, "rms_error_deg={rms:.4}\nmax_error_deg={:.4}", self.max);
        }
    }
}

fn stability(a: StabilityArgs) -> Result<String> {
    let mut all = Vec::new();
    let mut env = a.environment.clone();
    for path in &a.input {
        let (header, records) = load_dataset(path)?;
        env.get_or_insert(header.environment_label);
        all.extend(records);
    }
    let env = env.unwrap_or_default();
    let measurement = CalibrationMeasurement::from_records(all);
    let report = stability_report(&measurement, &env)?;
    write_text(&a.output, &report.to_csv())?;
    let list = report
        .cross_position_std
        .iter()
        .map(|x| format!("{x:.6}"))
        .collect::<Vec<_>>()
        .join(",");
    Ok(format!(
        "environment={env}\npositions={}\ncross_position_std_rad={list}\nworst_std_rad={:.6}\noutput={}\n",
        report.positions.len(),
        report.worst_channel_std(),
        a.output.display()
    ))
}

fn export(a: ExportArgs) -> Result<String> {
    let selection = if a.all {
        ExportSelection::All
    } else {
        ExportSelection::Ids(a.ids.clone())
    };
    let summary = export_views(open(&a.input)?, &selection, &a.out_dir)?;
    for w in &summary.warnings {
        eprintln!("warning: {w}");
    }
    Ok(format!(
        "files={}\nwarnings={}\nout_dir={}\n",
        summary.files.len(),
        summary.warnings.len(),
        a.out_dir.display()
    ))
}

fn validate(a: ValidateArgs) -> Result<String> {
    let report = validate_dataset(open(&a.input)?)
        .with_context(|| format!("validating {}", a.input.display()))?;
    if !report.is_valid() {
        for v in &report.violations {
            eprintln!(
                "violation: record {} (id {:?}): {}",
                v.index, v.record_id, v.message
            );
        }
        bail!("{} invalid: {}", a.input.display(), report.summary());
    }
    Ok(format!(
        "valid=true\n{}\n",
        report.summary().replace(' ', "\n")
    ))
}

fn bench(a: BenchArgs) -> Result<String> {
    let config = a.doa.config();
    let mut s = String::new();
    let (records, model, receive_time, frames_sent) = match &a.input {
        Some(path) => {
            let (header, records) = load_dataset(path)?;
            (
                records,
                SteeringModel::new(geometry_of(&header)?),
                None,
                None,
            )
        }
        None => {
            let cfg = a.scenario.load()?;
            let _ = writeln!(s, "seed={}", cfg.seed);
            let out = sim::simulate_dataset(&cfg, |_| {}).map_err(|e| anyhow!(e))?;
            let geometry = cfg.array.geometry().map_err(|e| anyhow!(e))?;
            (
                out.records,
                SteeringModel::new(geometry),
                Some(out.receive_time),
                Some(out.frames_sent),
            )
        }
    };
    let profile = a.doa.profile(model.n_channels())?;
    let t0 = Instant::now();
    let rows = run_doa(&records, &profile, &model, &config)?;
    let doa_time = t0.elapsed();
    let _ = writeln!(s, "records={}\nmethod={}", rows.len(), config.method);
    if let Some(sent) = frames_sent {
        let rate = if sent > 0 {
            rows.len() as f64 / sent as f64
        } else {
            0.0
        };
        let _ = writeln!(s, "frames_sent={sent}\ndetection_rate={rate:.4}");
    }
    ErrorStats::from_rows(&rows).append(&mut s);
    let total = receive_time.unwrap_or_default() + doa_time;
    if let Some(rx) = receive_time {
        let _ = writeln!(s, "receive_s={:.4}", rx.as_secs_f64());
    }
    let _ = writeln!(s, "doa_s={:.4}", doa_time.as_secs_f64());
    let fps = if total.as_secs_f64() > 0.0 {
        rows.len() as f64 / total.as_secs_f64()
    } else {
        f64::INFINITY
    };
    let _ = writeln!(s, "frames_per_s={fps:.1}");
    if let Some(path) = &a.output {
        write_text(path, &s)?;
    }
    Ok(s)
}
