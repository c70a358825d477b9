//! The `wisense` command line.
//!
//! Exit codes: 0 success, 2 configuration error, 3 detection negative,
//! 4 I/O error.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::detect::{DetectError, DetectorParams, EventInterval};
use crate::dsp::{aggregate_amplitude, smooth_series, Aggregation, DEFAULT_WINDOW};
use crate::io::{read_trace, write_trace, TraceFormat};
use crate::pipeline::{
    analyze_motion, analyze_respiration, compare_bands, RespirationAggregation, HOLD_AGGREGATION,
    MOTION_AGGREGATION, RATE_AGGREGATION,
};
use crate::scenario::{ConfigError, ScenarioFile};
use crate::sim::{Band, SimError};
use crate::types::Trace;
use crate::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NEGATIVE: i32 = 3;
pub const EXIT_IO: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "wisense", version, about = "Wi-Fi CFR/RSSI sensing toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Synthesize a binary trace from a scenario file.
    Simulate(SimulateArgs),
    /// Write raw and smoothed CFR/RSSI series as plot-ready CSV.
    Process(ProcessArgs),
    /// Detect respiration or motion events; prints a JSON report.
    Detect(DetectArgs),
    /// Compare respiration fluctuation at 2.4 GHz and 6 GHz.
    CompareBands(CompareArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub scenario: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value = "2.4GHz")]
    pub band: Band,
    #[arg(long)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct ProcessArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Moving-average window in samples.
    #[arg(long, default_value_t = DEFAULT_WINDOW)]
    pub window: usize,
    /// mean | max-variance | single:K
    #[arg(long, default_value = "max-variance")]
    pub aggregate: Aggregation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Respiration,
    Motion,
}

#[derive(Debug, Args)]
pub struct DetectArgs {
    #[arg(long, required_unless_present = "request")]
    pub input: Option<PathBuf>,
    #[arg(long, value_enum, required_unless_present = "request")]
    pub mode: Option<Mode>,
    /// Re-run from a JSON request (the `params_echo` of an earlier report).
    #[arg(long, conflicts_with_all = ["input", "mode"])]
    pub request: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_WINDOW)]
    pub window: usize,
    /// Reduction for event detection: mean | max-variance | single:K.
    /// Defaults to mean. In respiration mode it also sets the rate reduction
    /// unless --rate-aggregate is given.
    #[arg(long)]
    pub aggregate: Option<Aggregation>,
    /// Reduction for the breathing rate. Defaults to max-variance.
    #[arg(long)]
    pub rate_aggregate: Option<Aggregation>,
    #[arg(long)]
    pub flat_var_threshold: Option<f64>,
    #[arg(long)]
    pub min_hold_s: Option<f64>,
    #[arg(long)]
    pub motion_energy_threshold: Option<f64>,
    #[arg(long)]
    pub hysteresis_ratio: Option<f64>,
    #[arg(long)]
    pub min_peak_distance_s: Option<f64>,
    #[arg(long)]
    pub min_prominence: Option<f64>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[arg(long)]
    pub scenario: PathBuf,
    #[arg(long)]
    pub seed: u64,
    /// Number of random static path lengths to average over (0: scenario's own).
    #[arg(long, default_value_t = 0)]
    pub sweep: usize,
    #[arg(long, default_value_t = DEFAULT_WINDOW)]
    pub window: usize,
}

/// Fully resolved inputs of a detection run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectRequest {
    pub input: PathBuf,
    pub mode: Mode,
    pub window: usize,
    /// Reduction feeding the hold or motion detector.
    pub aggregation: Aggregation,
    /// Reduction feeding the rate estimate; `aggregation` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate_aggregation: Option<Aggregation>,
    pub params: DetectorParams,
}

impl DetectArgs {
    pub fn resolve(&self) -> Result<DetectRequest, CliError> {
        if let Some(path) = &self.request {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::io(format!("{}: {e}", path.display())))?;
            return serde_json::from_str(&text)
                .map_err(|e| CliError::config(format!("{}: {e}", path.display())));
        }
        let mode = self.mode.expect("clap enforces --mode");
        let mut params = DetectorParams::default();
        let overrides = [
            (&mut params.flat_var_threshold, self.flat_var_threshold),
            (&mut params.min_hold_s, self.min_hold_s),
            (
                &mut params.motion_energy_threshold,
                self.motion_energy_threshold,
            ),
            (&mut params.hysteresis_ratio, self.hysteresis_ratio),
            (&mut params.min_peak_distance_s, self.min_peak_distance_s),
            (&mut params.min_prominence, self.min_prominence),
        ];
        for (slot, v) in overrides {
            if let Some(v) = v {
                *slot = v;
            }
        }
        Ok(DetectRequest {
            input: self.input.clone().expect("clap enforces --input"),
            mode,
            window: self.window,
            aggregation: self.aggregate.unwrap_or(match mode {
                Mode::Respiration => HOLD_AGGREGATION,
                Mode::Motion => MOTION_AGGREGATION,
            }),
            rate_aggregation: match mode {
                Mode::Respiration => Some(
                    self.rate_aggregate
                        .or(self.aggregate)
                        .unwrap_or(RATE_AGGREGATION),
                ),
                Mode::Motion => None,
            },
            params,
        })
    }
}

/// Machine-readable result of a command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub command: String,
    pub params_echo: serde_json::Value,
    pub events: Vec<EventInterval>,
    pub rate_hz: Option<f64>,
    pub band_ratio: Option<f64>,
    pub timings_ms: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub metrics: BTreeMap<String, f64>,
}

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_CONFIG,
            message: message.into(),
        }
    }

    pub fn io(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_IO,
            message: message.into(),
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Io(_) => EXIT_IO,
            Error::Detect(
                DetectError::NoPeriodicity { .. }
                | DetectError::FlatBaseline
                | DetectError::ConstantSeries
                | DetectError::TooShort { .. },
            ) => EXIT_NEGATIVE,
            Error::Config(ConfigError::Sim(SimError::NonPositivePower(_)))
            | Error::Sim(SimError::NonPositivePower(_)) => EXIT_NEGATIVE,
            _ => EXIT_CONFIG,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

fn ms(since: Instant) -> f64 {
    since.elapsed().as_secs_f64() * 1e3
}

fn load_trace(path: &Path) -> Result<Trace, CliError> {
    let file = File::open(path).map_err(|e| CliError::io(format!("{}: {e}", path.display())))?;
    read_trace(BufReader::new(file), TraceFormat::from_path(path))
        .map_err(|e| CliError::io(format!("{}: {e}", path.display())))
}

fn load_scenario(path: &Path) -> Result<ScenarioFile, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::io(format!("{}: {e}", path.display())))?;
    ScenarioFile::parse(&text).map_err(|e| CliError::config(format!("{}: {e}", path.display())))
}

/// Parses `args` and runs the command. Returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = write!(stderr, "{}", e.render());
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{}", e.render());
                    EXIT_OK
                }
                _ => EXIT_CONFIG,
            };
        }
    };
    let result = match &cli.command {
        Command::Simulate(a) => cmd_simulate(a, stdout),
        Command::Process(a) => cmd_process(a, stdout, stderr),
        Command::Detect(a) => a.resolve().and_then(|req| cmd_detect(&req, stdout, stderr)),
        Command::CompareBands(a) => cmd_compare_bands(a, stdout, stderr),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.code
        }
    }
}

pub fn cmd_simulate(args: &SimulateArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let file = load_scenario(&args.scenario)?;
    let kind = file
        .scenario()
        .map_err(|e| CliError::config(e.to_string()))?
        .kind();
    let trace = file
        .synthesize(args.band, args.seed)
        .map_err(|e| CliError::from(Error::from(e)))?;
    write_trace_file(&trace, &args.out)?;
    let _ = writeln!(
        stdout,
        "simulated {kind}: {} frames, {:.2} s, band {}, {} subcarriers -> {}",
        trace.len(),
        trace.len() as f64 / trace.sample_rate_hz(),
        args.band,
        trace.grid().num_subcarriers(),
        args.out.display()
    );
    Ok(())
}

fn write_trace_file(trace: &Trace, path: &Path) -> Result<(), CliError> {
    let write = || -> Result<(), String> {
        let f = File::create(path).map_err(|e| e.to_string())?;
        let mut w = BufWriter::new(f);
        write_trace(trace, &mut w, TraceFormat::from_path(path)).map_err(|e| e.to_string())?;
        w.flush().map_err(|e| e.to_string())
    };
    write().map_err(|e| {
        let _ = std::fs::remove_file(path);
        CliError::io(format!("{}: {e}", path.display()))
    })
}

pub fn cmd_process(
    args: &ProcessArgs,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<(), CliError> {
    if args.window == 0 {
        return Err(CliError::config("--window must be at least 1"));
    }
    let trace = load_trace(&args.input)?;
    let n = trace.len();
    let (cfr_raw, cfr_smooth) = if trace.cfr_frames().is_empty() {
        let _ = writeln!(
            stderr,
            "warning: trace has no CFR stream; cfr columns left empty"
        );
        (vec![], vec![])
    } else {
        let raw = aggregate_amplitude(&trace, args.aggregate)
            .map_err(|e| CliError::from(Error::from(e)))?;
        let smooth =
            smooth_series(&raw, args.window).map_err(|e| CliError::from(Error::from(e)))?;
        (raw, smooth)
    };
    let (rssi_raw, rssi_smooth) = if trace.rssi_samples().is_empty() {
        let _ = writeln!(
            stderr,
            "warning: trace has no RSSI stream; rssi columns left empty"
        );
        (vec![], vec![])
    } else {
        let raw = trace.rssi_series();
        let smooth =
            smooth_series(&raw, args.window).map_err(|e| CliError::from(Error::from(e)))?;
        (raw, smooth)
    };

    let io_err = |e: csv::Error| CliError::io(format!("{}: {e}", args.out.display()));
    let file = File::create(&args.out)
        .map_err(|e| CliError::io(format!("{}: {e}", args.out.display())))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    w.write_record([
        "t_s",
        "cfr_raw",
        "cfr_smoothed",
        "rssi_raw",
        "rssi_smoothed",
    ])
    .map_err(io_err)?;
    let cell = |v: &[f64], i: usize| v.get(i).map(|x| x.to_string()).unwrap_or_default();
    for (i, t) in trace.timestamps().iter().enumerate() {
        w.write_record([
            t.to_string(),
            cell(&cfr_raw, i),
            cell(&cfr_smooth, i),
            cell(&rssi_raw, i),
            cell(&rssi_smooth, i),
        ])
        .map_err(io_err)?;
    }
    w.flush()
        .map_err(|e| CliError::io(format!("{}: {e}", args.out.display())))?;
    let _ = writeln!(
        stdout,
        "processed {n} slots with W = {} ({}) -> {}",
        args.window,
        args.aggregate,
        args.out.display()
    );
    Ok(())
}

/// Runs a detection request and returns its report.
pub fn detect_report(req: &DetectRequest) -> Result<RunReport, CliError> {
    if req.window == 0 {
        return Err(CliError::config("window must be at least 1"));
    }
    let mut timings = BTreeMap::new();
    let t = Instant::now();
    let trace = load_trace(&req.input)?;
    timings.insert("read".to_string(), ms(t));
    let t = Instant::now();
    let (events, rate_hz) = match req.mode {
        Mode::Respiration => {
            let aggregation = RespirationAggregation {
                rate: req.rate_aggregation.unwrap_or(req.aggregation),
                holds: req.aggregation,
            };
            let r = analyze_respiration(&trace, aggregation, req.window, &req.params)?;
            (r.holds, Some(r.rate_hz))
        }
        Mode::Motion => (
            analyze_motion(&trace, req.aggregation, req.window, &req.params)?,
            None,
        ),
    };
    timings.insert("analyze".to_string(), ms(t));
    Ok(RunReport {
        command: "detect".into(),
        params_echo: serde_json::to_value(req).expect("request serializes"),
        events,
        rate_hz,
        band_ratio: None,
        timings_ms: timings,
        metrics: BTreeMap::new(),
    })
}

pub fn cmd_detect(
    req: &DetectRequest,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<(), CliError> {
    let report = detect_report(req)?;
    emit(&report, stdout)?;
    if let Some(rate) = report.rate_hz {
        let _ = writeln!(
            stderr,
            "respiration rate: {rate:.4} Hz ({:.1} breaths/min)",
            rate * 60.0
        );
    }
    let _ = writeln!(stderr, "{} event(s)", report.events.len());
    for e in &report.events {
        let _ = writeln!(
            stderr,
            "  {:?} {:.2} s .. {:.2} s (score {:.3})",
            e.kind, e.start_s, e.end_s, e.score
        );
    }
    Ok(())
}

fn emit(report: &RunReport, stdout: &mut dyn Write) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(report).expect("report serializes");
    writeln!(stdout, "{text}").map_err(|e| CliError::io(e.to_string()))
}

pub fn cmd_compare_bands(
    args: &CompareArgs,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<(), CliError> {
    if args.window == 0 {
        return Err(CliError::config("--window must be at least 1"));
    }
    let file = load_scenario(&args.scenario)?;
    let t = Instant::now();
    let cmp = compare_bands(&file, args.seed, args.sweep, args.window)?;
    let mut timings = BTreeMap::new();
    timings.insert("simulate_and_compare".to_string(), ms(t));
    let metrics = BTreeMap::from([
        ("peak_to_peak_2_4ghz".to_string(), cmp.peak_to_peak_low),
        ("peak_to_peak_6ghz".to_string(), cmp.peak_to_peak_high),
        (
            "phase_excursion_2_4ghz_rad".to_string(),
            cmp.phase_excursion_low_rad,
        ),
        (
            "phase_excursion_6ghz_rad".to_string(),
            cmp.phase_excursion_high_rad,
        ),
        (
            "phase_excursion_ratio".to_string(),
            cmp.phase_excursion_ratio,
        ),
    ]);
    let report = RunReport {
        command: "compare-bands".into(),
        params_echo: serde_json::json!({
            "scenario": args.scenario,
            "seed": args.seed,
            "sweep": args.sweep,
            "window": args.window,
            "static_path_lengths_m": cmp.static_path_lengths_m,
        }),
        events: vec![],
        rate_hz: None,
        band_ratio: Some(cmp.band_ratio),
        timings_ms: timings,
        metrics,
    };
    emit(&report, stdout)?;
    let _ = writeln!(
        stderr,
        "peak-to-peak: 2.4GHz {:.6}, 6GHz {:.6}; band ratio (6GHz/2.4GHz) {:.4} over {} path(s)",
        cmp.peak_to_peak_low,
        cmp.peak_to_peak_high,
        cmp.band_ratio,
        cmp.static_path_lengths_m.len()
    );
    let _ = writeln!(
        stderr,
        "phase excursion ratio (6GHz/2.4GHz): {:.3}",
        cmp.phase_excursion_ratio
    );
    Ok(())
}
