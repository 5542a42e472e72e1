use std::path::Path;
use std::process::{Command, Output};

fn find(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_find"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("run find")
}

fn stdout_value(out: &Output, key: &str) -> String {
    let text = String::from_utf8_lossy(&out.stdout);
    text.lines()
        .find_map(|l| l.strip_prefix(&format!("{key}=")))
        .unwrap_or_else(|| panic!("no `{key}` in:\n{text}"))
        .to_owned()
}

fn ok(out: Output) -> Output {
    assert!(
        out.status.success(),
        "status {:?}\nstdout:\n{}\nstderr:\n{}",
        out.status,
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

const SWEEP: &str = r#"
seed = 21
environment = "anechoic"
[impairments]
snr_db = 20.0
cfo_hz = 4000.0
start_offset = 600
[capture]
frames_per_angle = 2
[sweep]
start_deg = -60.0
stop_deg = 60.0
step_deg = 5.0
"#;

const CAL: &str = r#"
seed = 3
environment = "anechoic"
[impairments]
phase_offsets = [0.0, 0.7, -1.2, 2.1]
snr_db = 20.0
[capture]
frames_per_angle = 25
[positions]
count = 4
"#;

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        &["frobnicate"][..],
        &["simulate", "--bogus"][..],
        &[][..],
        &["export", "-i", "x", "--out-dir", "y"][..],
    ] {
        let out = find(args, dir.path());
        assert_eq!(out.status.code(), Some(2), "{args:?}");
    }
    assert_eq!(find(&["--help"], dir.path()).status.code(), Some(0));
}

#[test]
fn processing_errors_exit_1_with_error_line() {
    let dir = tempfile::tempdir().unwrap();
    let out = find(
        &["calibrate", "-i", "missing.find", "-o", "p.txt"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert_eq!(err.lines().count(), 1, "{err}");
    assert!(err.starts_with("error: opening missing.find"), "{err}");

    std::fs::write(dir.path().join("bad.toml"), "seed = 1\nsnr = 3\n").unwrap();
    let out = find(
        &["simulate", "--config", "bad.toml", "-o", "x.find"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown field"));
}

#[test]
fn simulate_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("s.toml"), SWEEP).unwrap();
    ok(find(
        &[
            "simulate",
            "--config",
            "s.toml",
            "-o",
            "a.find",
            "--frames-per-angle",
            "1",
        ],
        dir.path(),
    ));
    let out = ok(find(
        &[
            "simulate",
            "--config",
            "s.toml",
            "-o",
            "b.find",
            "--frames-per-angle",
            "1",
        ],
        dir.path(),
    ));
    assert_eq!(stdout_value(&out, "seed"), "21");
    ok(find(
        &[
            "simulate",
            "--config",
            "s.toml",
            "-o",
            "c.find",
            "--frames-per-angle",
            "1",
            "--seed",
            "22",
        ],
        dir.path(),
    ));
    let read = |n: &str| std::fs::read(dir.path().join(n)).unwrap();
    assert_eq!(read("a.find"), read("b.find"));
    assert_ne!(read("a.find"), read("c.find"));
}

#[test]
fn calibrate_then_doa_on_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("cal.toml"), CAL).unwrap();
    std::fs::write(
        d.join("sweep.toml"),
        SWEEP.replace("snr_db", "phase_offsets = [0.0, 0.7, -1.2, 2.1]\nsnr_db"),
    )
    .unwrap();
    ok(find(
        &["simulate", "--config", "cal.toml", "-o", "cal.find"],
        d,
    ));
    ok(find(
        &["calibrate", "-i", "cal.find", "-o", "profile.txt"],
        d,
    ));
    let profile = find_core::calib::CalibrationProfile::parse(
        &std::fs::read_to_string(d.join("profile.txt")).unwrap(),
    )
    .unwrap();
    for (got, want) in profile.offsets.iter().zip([0.0, 0.7, -1.2, 2.1]) {
        assert!(
            find_core::stats::wrap_phase(got - want).abs() < 1e-2,
            "{got} vs {want}"
        );
    }
    assert_eq!(profile.n_frames_used, 100);

    ok(find(
        &["simulate", "--config", "sweep.toml", "-o", "sweep.find"],
        d,
    ));
    let out = ok(find(
        &[
            "doa",
            "-i",
            "sweep.find",
            "--profile",
            "profile.txt",
            "-o",
            "est.csv",
            "--spectrum",
            "spec.csv",
            "--spectrum-frame",
            "3",
        ],
        d,
    ));
    let est = std::fs::read_to_string(d.join("est.csv")).unwrap();
    assert_eq!(
        est.lines().next(),
        Some("frame_id,azimuth_deg,peak_value,method")
    );
    assert_eq!(est.lines().count(), 1 + 25 * 2);
    assert!(stdout_value(&out, "rms_error_deg").parse::<f64>().unwrap() < 2.0);
    let spec = std::fs::read_to_string(d.join("spec.csv")).unwrap();
    assert_eq!(spec.lines().count(), 1 + 721);

    let bench = ok(find(
        &["bench", "-i", "sweep.find", "--profile", "profile.txt"],
        d,
    ));
    assert!(
        stdout_value(&bench, "rms_error_deg")
            .parse::<f64>()
            .unwrap()
            < 2.0
    );
    let raw = ok(find(&["bench", "-i", "sweep.find"], d));
    assert!(stdout_value(&raw, "rms_error_deg").parse::<f64>().unwrap() > 5.0);
}

#[test]
fn raw_capture_round_trip_through_process() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("s.toml"), SWEEP).unwrap();
    let sim = ok(find(
        &[
            "simulate",
            "--config",
            "s.toml",
            "-o",
            "sim.find",
            "--raw",
            "cap.cf32",
            "--frames-per-angle",
            "1",
        ],
        d,
    ));
    let out = ok(find(
        &[
            "process",
            "-i",
            "cap.cf32",
            "-o",
            "proc.find",
            "--position",
            "pos0",
        ],
        d,
    ));
    assert_eq!(stdout_value(&out, "records"), stdout_value(&sim, "records"));
    let v = ok(find(&["validate", "-i", "proc.find"], d));
    assert_eq!(stdout_value(&v, "untracked"), "25");
    let bad = find(
        &[
            "process",
            "-i",
            "cap.cf32",
            "-o",
            "p2.find",
            "--channels",
            "3",
        ],
        d,
    );
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn validate_export_and_stability() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(
        d.join("cal.toml"),
        CAL.replace("frames_per_angle = 25", "frames_per_angle = 3"),
    )
    .unwrap();
    ok(find(
        &["simulate", "--config", "cal.toml", "-o", "cal.find"],
        d,
    ));
    let v = ok(find(&["validate", "-i", "cal.find"], d));
    assert_eq!(stdout_value(&v, "violations"), "0");
    assert_eq!(stdout_value(&v, "records_read"), "12");

    let e = ok(find(
        &[
            "export",
            "-i",
            "cal.find",
            "--ids",
            "0,5",
            "--out-dir",
            "views",
        ],
        d,
    ));
    assert_eq!(stdout_value(&e, "files"), "4");
    assert!(d.join("views/record_5_csi.csv").exists());
    assert_eq!(
        find(
            &["export", "-i", "cal.find", "--ids", "99", "--out-dir", "v2"],
            d
        )
        .status
        .code(),
        Some(1)
    );

    let s = ok(find(&["stability", "-i", "cal.find", "-o", "fig2.csv"], d));
    assert_eq!(stdout_value(&s, "positions"), "4");
    assert!(stdout_value(&s, "worst_std_rad").parse::<f64>().unwrap() < 0.05);

    let mut bytes = std::fs::read(d.join("cal.find")).unwrap();
    bytes.truncate(bytes.len() - 100);
    std::fs::write(d.join("cut.find"), bytes).unwrap();
    let out = find(&["validate", "-i", "cut.find"], d);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr)
        .lines()
        .last()
        .unwrap()
        .starts_with("error: "));
}

#[test]
fn bench_simulates_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("s.toml"), SWEEP).unwrap();
    let out = ok(find(&["bench", "--config", "s.toml"], dir.path()));
    assert_eq!(stdout_value(&out, "frames_sent"), "50");
    assert_eq!(stdout_value(&out, "detection_rate"), "1.0000");
    assert!(stdout_value(&out, "rms_error_deg").parse::<f64>().unwrap() < 2.0);
    assert!(stdout_value(&out, "frames_per_s").parse::<f64>().unwrap() > 0.0);
}
