use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use num_complex::Complex64;
use tempfile::TempDir;

use wisense::cli::RunReport;
use wisense::dsp::smooth_series;
use wisense::io::{read_trace, write_trace, TraceFormat};
use wisense::types::{CfrFrame, RssiSample, SubcarrierGrid, Trace};
use wisense::EventKind;

fn wisense(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wisense"))
        .args(args)
        .output()
        .unwrap()
}

fn scenario(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .join(name)
        .to_str()
        .unwrap()
        .to_string()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn simulate(dir: &TempDir, scenario_name: &str, band: &str, seed: &str) -> PathBuf {
    let out = dir
        .path()
        .join(format!("{scenario_name}-{band}-{seed}.wvs"));
    let o = wisense(&[
        "simulate",
        "--scenario",
        &scenario(scenario_name),
        "--out",
        s(&out),
        "--band",
        band,
        "--seed",
        seed,
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    out
}

fn report(o: &Output) -> RunReport {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| {
        panic!(
            "{e}: {}\n{}",
            String::from_utf8_lossy(&o.stdout),
            String::from_utf8_lossy(&o.stderr)
        )
    })
}

fn write(trace: &Trace, path: &Path) {
    write_trace(
        trace,
        fs::File::create(path).unwrap(),
        TraceFormat::from_path(path),
    )
    .unwrap();
}

#[test]
fn simulate_is_deterministic_per_seed() {
    let dir = TempDir::new().unwrap();
    let a = simulate(&dir, "respiration_steady.toml", "2.4GHz", "1");
    let b = dir.path().join("again.wvs");
    let o = wisense(&[
        "simulate",
        "--scenario",
        &scenario("respiration_steady.toml"),
        "--out",
        s(&b),
        "--seed",
        "1",
    ]);
    assert!(o.status.success());
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let c = simulate(&dir, "respiration_steady.toml", "2.4GHz", "2");
    assert_ne!(fs::read(&a).unwrap(), fs::read(&c).unwrap());
    let summary = String::from_utf8(o.stdout).unwrap();
    assert!(
        summary.contains("6000 frames")
            && summary.contains("60.00 s")
            && summary.contains("2.4GHz"),
        "{summary}"
    );
}

#[test]
fn simulate_6ghz_sets_center_frequency() {
    let dir = TempDir::new().unwrap();
    let p = simulate(&dir, "motion_one_walk.toml", "6GHz", "0");
    let t = read_trace(fs::File::open(p).unwrap(), TraceFormat::Binary).unwrap();
    assert_eq!(t.grid().center_frequency_hz(), 6.0e9);
}

#[test]
fn malformed_scenario_exits_2_without_output() {
    let dir = TempDir::new().unwrap();
    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "schema_version = 1\n[respiration]\nbreath_rate_hz = -1.0\nchest_amplitude_m = 0.005\nduration_s = 10.0\n").unwrap();
    let out = dir.path().join("out.wvs");
    let o = wisense(&[
        "simulate",
        "--scenario",
        s(&bad),
        "--out",
        s(&out),
        "--seed",
        "1",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());
    assert!(String::from_utf8_lossy(&o.stderr).contains("breath_rate_hz"));

    fs::write(&bad, "schema_version = 1\n[respiration\n").unwrap();
    let o = wisense(&[
        "simulate",
        "--scenario",
        s(&bad),
        "--out",
        s(&out),
        "--seed",
        "1",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));
    assert!(!out.exists());
}

#[test]
fn simulate_requires_seed() {
    let o = wisense(&[
        "simulate",
        "--scenario",
        &scenario("motion_one_walk.toml"),
        "--out",
        "/tmp/never.wvs",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!Path::new("/tmp/never.wvs").exists());
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|rec| rec.unwrap().iter().map(String::from).collect())
        .collect();
    (header, rows)
}

fn column(rows: &[Vec<String>], i: usize) -> Vec<f64> {
    rows.iter().map(|r| r[i].parse().unwrap()).collect()
}

#[test]
fn process_default_window_matches_smoothing_oracle() {
    let dir = TempDir::new().unwrap();
    let trace = simulate(&dir, "respiration_steady.toml", "2.4GHz", "5");
    let csv_path = dir.path().join("p.csv");
    let o = wisense(&["process", "--input", s(&trace), "--out", s(&csv_path)]);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stdout).contains("W = 100"));
    let (header, rows) = read_csv(&csv_path);
    assert_eq!(
        header,
        [
            "t_s",
            "cfr_raw",
            "cfr_smoothed",
            "rssi_raw",
            "rssi_smoothed"
        ]
    );
    assert_eq!(rows.len(), 6000);
    for (raw, smooth) in [(1, 2), (3, 4)] {
        let expected = smooth_series(&column(&rows, raw), 100).unwrap();
        let got = column(&rows, smooth);
        for (e, g) in expected.iter().zip(&got) {
            assert!((e - g).abs() <= 1e-12 * e.abs().max(1.0));
        }
    }
}

#[test]
fn process_window_one_is_identity() {
    let dir = TempDir::new().unwrap();
    let trace = simulate(&dir, "motion_one_walk.toml", "2.4GHz", "5");
    let csv_path = dir.path().join("p.csv");
    let o = wisense(&[
        "process",
        "--input",
        s(&trace),
        "--out",
        s(&csv_path),
        "--window",
        "1",
        "--aggregate",
        "single:3",
    ]);
    assert!(o.status.success());
    let (_, rows) = read_csv(&csv_path);
    assert_eq!(column(&rows, 1), column(&rows, 2));
    assert_eq!(column(&rows, 3), column(&rows, 4));
}

#[test]
fn process_missing_stream_warns_and_leaves_cells_empty() {
    let dir = TempDir::new().unwrap();
    let grid = SubcarrierGrid::wifi_20mhz(2.4e9).unwrap();
    let rssi = (0..50)
        .map(|i| RssiSample {
            timestamp_s: i as f64 / 10.0,
            rssi_db: -40 - (i % 3) as i16,
        })
        .collect();
    let trace = Trace::new(grid, 10.0, vec![], rssi, "rssi only").unwrap();
    let path = dir.path().join("rssi.wvs");
    write(&trace, &path);
    let csv_path = dir.path().join("p.csv");
    let o = wisense(&[
        "process",
        "--input",
        s(&path),
        "--out",
        s(&csv_path),
        "--window",
        "4",
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stderr).contains("warning"));
    let (_, rows) = read_csv(&csv_path);
    assert_eq!(rows.len(), 50);
    assert!(rows
        .iter()
        .all(|r| r[1].is_empty() && r[2].is_empty() && !r[3].is_empty()));
}

#[test]
fn detect_protocol_reports_two_holds_and_echo_reruns() {
    let dir = TempDir::new().unwrap();
    let trace = simulate(&dir, "respiration_protocol.toml", "2.4GHz", "3");
    let o = wisense(&["detect", "--input", s(&trace), "--mode", "respiration"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(&o);
    assert_eq!(r.command, "detect");
    assert_eq!(r.events.len(), 2);
    assert!(r.events.iter().all(|e| e.kind == EventKind::BreathHold));
    let rate = r.rate_hz.unwrap();
    assert!((rate - 0.25).abs() / 0.25 < 0.05, "{rate}");
    assert!(r.timings_ms.contains_key("read") && r.timings_ms.contains_key("analyze"));
    assert!(String::from_utf8_lossy(&o.stderr).contains("breaths/min"));

    let req = dir.path().join("req.json");
    fs::write(&req, serde_json::to_string(&r.params_echo).unwrap()).unwrap();
    let again = report(&wisense(&["detect", "--request", s(&req)]));
    assert_eq!(again.params_echo, r.params_echo);
    assert_eq!(again.events, r.events);
    assert_eq!(again.rate_hz, r.rate_hz);
}

#[test]
fn detect_overrides_are_echoed() {
    let dir = TempDir::new().unwrap();
    let trace = simulate(&dir, "motion_one_walk.toml", "2.4GHz", "1");
    let o = wisense(&[
        "detect",
        "--input",
        s(&trace),
        "--mode",
        "motion",
        "--motion-energy-threshold",
        "2e-7",
        "--window",
        "50",
    ]);
    assert!(o.status.success());
    let r = report(&o);
    assert_eq!(r.params_echo["params"]["motion_energy_threshold"], 2e-7);
    assert_eq!(r.params_echo["window"], 50);
    assert_eq!(r.params_echo["aggregation"], "mean");
    assert!(r.rate_hz.is_none());
}

#[test]
fn detect_motion_one_walk_reports_one_event() {
    let dir = TempDir::new().unwrap();
    let trace = simulate(&dir, "motion_one_walk.toml", "2.4GHz", "8");
    let r = report(&wisense(&[
        "detect",
        "--input",
        s(&trace),
        "--mode",
        "motion",
    ]));
    assert_eq!(r.events.len(), 1);
    let e = &r.events[0];
    assert_eq!(e.kind, EventKind::Motion);
    assert!(
        (e.start_s - 10.0).abs() <= 1.5 && (e.end_s - 30.0).abs() <= 1.5,
        "{e:?}"
    );
}

#[test]
fn detect_constant_trace_exits_3() {
    let dir = TempDir::new().unwrap();
    let grid = SubcarrierGrid::new(2.4e9, 78.125e3 * 4.0, 4, 78.125e3).unwrap();
    let frames = (0..3000)
        .map(|i| CfrFrame::new(i as f64 / 100.0, vec![Complex64::new(0.8, 0.1); 4]))
        .collect();
    let trace = Trace::new(grid, 100.0, frames, vec![], "flat").unwrap();
    let path = dir.path().join("flat.wvs");
    write(&trace, &path);
    let o = wisense(&["detect", "--input", s(&path), "--mode", "respiration"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(o.stdout.is_empty());
}

#[test]
fn unreadable_input_exits_4() {
    let dir = TempDir::new().unwrap();
    let o = wisense(&[
        "detect",
        "--input",
        s(&dir.path().join("missing.wvs")),
        "--mode",
        "motion",
    ]);
    assert_eq!(o.status.code(), Some(4));
    let junk = dir.path().join("junk.wvs");
    fs::write(&junk, b"WVSENSE1 but not really").unwrap();
    let csv_path = dir.path().join("p.csv");
    let o = wisense(&["process", "--input", s(&junk), "--out", s(&csv_path)]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn compare_bands_reports_exact_phase_ratio() {
    let o = wisense(&[
        "compare-bands",
        "--scenario",
        &scenario("respiration_steady.toml"),
        "--seed",
        "4",
        "--sweep",
        "3",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let stderr = String::from_utf8(o.stderr.clone()).unwrap();
    assert!(
        stderr.contains("phase excursion ratio (6GHz/2.4GHz): 2.500"),
        "{stderr}"
    );
    let r = report(&o);
    assert_eq!(r.command, "compare-bands");
    assert!(r.band_ratio.unwrap() > 0.0);
    assert_eq!(r.metrics["phase_excursion_ratio"], 2.5);
    assert_eq!(
        r.params_echo["static_path_lengths_m"]
            .as_array()
            .unwrap()
            .len(),
        3
    );
}

#[test]
fn compare_bands_still_chest_is_an_error() {
    let dir = TempDir::new().unwrap();
    let p = dir.path().join("still.toml");
    fs::write(&p, "schema_version = 1\n[respiration]\nbreath_rate_hz = 0.25\nchest_amplitude_m = 0.0\nduration_s = 30.0\n").unwrap();
    let o = wisense(&["compare-bands", "--scenario", s(&p), "--seed", "1"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("constant"));
}

#[test]
fn compare_bands_rejects_motion_scenarios() {
    let o = wisense(&[
        "compare-bands",
        "--scenario",
        &scenario("motion_one_walk.toml"),
        "--seed",
        "1",
    ]);
    assert_eq!(o.status.code(), Some(2));
}
