//! C ABI for the wisense toolkit.
//!
//! Conventions:
//! - Every fallible call returns a [`WsStatus`]; results go through out-pointers.
//! - On failure, [`ws_last_error_message`] describes the most recent error on
//!   the calling thread.
//! - Handles ([`WsTrace`], [`WsMovingAverage`]) are created by the library and
//!   must be released with their `_free` function.
//! - Buffer-filling calls take a capacity and report the number of elements
//!   needed; a short buffer yields [`WsStatus::BufferTooSmall`] with nothing written.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;

use wisense::detect::{detect_breath_holds, detect_motion, estimate_respiration_rate};
use wisense::dsp::{aggregate_amplitude, smooth_series};
use wisense::io::{read_trace, write_trace};
use wisense::pipeline::{
    analyze_motion, analyze_respiration, RespirationAggregation, MOTION_AGGREGATION,
};
use wisense::sim::quantize_rssi;
use wisense::{
    Aggregation, Band, DetectError, DetectorParams, Error, EventInterval, EventKind, MovingAverage,
    ScenarioFile, Trace, TraceFormat,
};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Format = 4,
    Config = 5,
    /// No periodicity, flat baseline, constant or too-short series.
    DetectionNegative = 6,
    BufferTooSmall = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WsBand {
    Ghz2_4 = 0,
    Ghz6 = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WsAggregationKind {
    Mean = 0,
    MaxVariance = 1,
    /// Uses the `subcarrier` argument.
    Single = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WsEventKind {
    BreathHold = 0,
    Motion = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WsEvent {
    pub start_s: f64,
    pub end_s: f64,
    pub kind: WsEventKind,
    pub score: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WsDetectorParams {
    pub flat_var_threshold: f64,
    pub min_hold_s: f64,
    pub motion_energy_threshold: f64,
    pub hysteresis_ratio: f64,
    pub min_peak_distance_s: f64,
    pub min_prominence: f64,
}

impl From<DetectorParams> for WsDetectorParams {
    fn from(p: DetectorParams) -> Self {
        Self {
            flat_var_threshold: p.flat_var_threshold,
            min_hold_s: p.min_hold_s,
            motion_energy_threshold: p.motion_energy_threshold,
            hysteresis_ratio: p.hysteresis_ratio,
            min_peak_distance_s: p.min_peak_distance_s,
            min_prominence: p.min_prominence,
        }
    }
}

impl From<WsDetectorParams> for DetectorParams {
    fn from(p: WsDetectorParams) -> Self {
        Self {
            flat_var_threshold: p.flat_var_threshold,
            min_hold_s: p.min_hold_s,
            motion_energy_threshold: p.motion_energy_threshold,
            hysteresis_ratio: p.hysteresis_ratio,
            min_peak_distance_s: p.min_peak_distance_s,
            min_prominence: p.min_prominence,
        }
    }
}

impl From<&EventInterval> for WsEvent {
    fn from(e: &EventInterval) -> Self {
        Self {
            start_s: e.start_s,
            end_s: e.end_s,
            kind: match e.kind {
                EventKind::BreathHold => WsEventKind::BreathHold,
                EventKind::Motion => WsEventKind::Motion,
            },
            score: e.score,
        }
    }
}

/// Opaque trace handle.
pub struct WsTrace(Trace);

/// Opaque streaming moving-average handle.
pub struct WsMovingAverage(MovingAverage);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

struct Failure(WsStatus, String);

impl Failure {
    fn null(what: &str) -> Self {
        Self(WsStatus::NullPointer, format!("{what} is null"))
    }

    fn invalid(msg: impl Into<String>) -> Self {
        Self(WsStatus::InvalidArgument, msg.into())
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Io(wisense::TraceIoError::Io(_)) => WsStatus::Io,
            Error::Io(_) => WsStatus::Format,
            Error::Config(_) | Error::Sim(_) => WsStatus::Config,
            Error::Detect(d) => detect_status(d),
            Error::Trace(_) | Error::Dsp(_) => WsStatus::InvalidArgument,
        };
        Self(status, e.to_string())
    }
}

fn detect_status(e: &DetectError) -> WsStatus {
    match e {
        DetectError::NoPeriodicity { .. }
        | DetectError::FlatBaseline
        | DetectError::ConstantSeries
        | DetectError::TooShort { .. } => WsStatus::DetectionNegative,
        DetectError::LengthMismatch(..) | DetectError::Params(_) => WsStatus::InvalidArgument,
    }
}

impl From<DetectError> for Failure {
    fn from(e: DetectError) -> Self {
        Self(detect_status(&e), e.to_string())
    }
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|slot| *slot.borrow_mut() = c);
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> WsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_last_error("");
            WsStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_last_error(&msg);
            status
        }
        Err(_) => {
            set_last_error("panic inside wisense");
            WsStatus::Panic
        }
    }
}

unsafe fn path_arg(p: *const c_char) -> Result<PathBuf, Failure> {
    if p.is_null() {
        return Err(Failure::null("path"));
    }
    let s = CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure::invalid("path is not valid UTF-8"))?;
    Ok(PathBuf::from(s))
}

unsafe fn slice_arg<'a>(p: *const f64, len: usize) -> Result<&'a [f64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Failure::null("series"));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn params_arg(p: *const WsDetectorParams) -> DetectorParams {
    if p.is_null() {
        DetectorParams::default()
    } else {
        (*p).into()
    }
}

unsafe fn fill<T: Copy>(
    values: &[T],
    out: *mut T,
    capacity: usize,
    count: *mut usize,
) -> Result<(), Failure> {
    if count.is_null() {
        return Err(Failure::null("count"));
    }
    *count = values.len();
    if values.len() > capacity {
        return Err(Failure(
            WsStatus::BufferTooSmall,
            format!("need room for {} elements, got {capacity}", values.len()),
        ));
    }
    if !values.is_empty() {
        if out.is_null() {
            return Err(Failure::null("output buffer"));
        }
        std::ptr::copy_nonoverlapping(values.as_ptr(), out, values.len());
    }
    Ok(())
}

unsafe fn trace_ref<'a>(t: *const WsTrace) -> Result<&'a Trace, Failure> {
    t.as_ref()
        .map(|t| &t.0)
        .ok_or_else(|| Failure::null("trace"))
}

fn aggregation(kind: WsAggregationKind, subcarrier: usize) -> Aggregation {
    match kind {
        WsAggregationKind::Mean => Aggregation::Mean,
        WsAggregationKind::MaxVariance => Aggregation::MaxVariance,
        WsAggregationKind::Single => Aggregation::Single(subcarrier),
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ws_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies the calling thread's last error message into `buf` (NUL-terminated,
/// truncated to `len`). Returns the full message length including the NUL.
///
/// # Safety
/// `buf` must be null or valid for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn ws_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|slot| {
        let msg = slot.borrow();
        let bytes = msg.as_bytes_with_nul();
        if !buf.is_null() && len > 0 {
            let n = (bytes.len() - 1).min(len - 1);
            std::ptr::copy_nonoverlapping(bytes.as_ptr().cast(), buf, n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

#[no_mangle]
pub extern "C" fn ws_detector_params_default() -> WsDetectorParams {
    DetectorParams::default().into()
}

/// Reads a trace file; the format follows the extension (`.csv` or binary).
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ws_trace_read(path: *const c_char, out: *mut *mut WsTrace) -> WsStatus {
    guard(|| {
        if out.is_null() {
            return Err(Failure::null("out"));
        }
        let path = path_arg(path)?;
        let file = File::open(&path)
            .map_err(|e| Failure(WsStatus::Io, format!("{}: {e}", path.display())))?;
        let trace = read_trace(BufReader::new(file), TraceFormat::from_path(&path))
            .map_err(|e| Failure::from(Error::from(e)))?;
        *out = Box::into_raw(Box::new(WsTrace(trace)));
        Ok(())
    })
}

/// Writes a trace; the format follows the extension (`.csv` or binary).
///
/// # Safety
/// `trace` must be a live handle; `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn ws_trace_write(trace: *const WsTrace, path: *const c_char) -> WsStatus {
    guard(|| {
        let trace = trace_ref(trace)?;
        let path = path_arg(path)?;
        let io = |e: std::io::Error| Failure(WsStatus::Io, format!("{}: {e}", path.display()));
        let mut w = BufWriter::new(File::create(&path).map_err(io)?);
        write_trace(trace, &mut w, TraceFormat::from_path(&path))
            .map_err(|e| Failure::from(Error::from(e)))?;
        w.flush().map_err(io)
    })
}

/// Releases a trace handle. Null is ignored.
///
/// # Safety
/// `trace` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ws_trace_free(trace: *mut WsTrace) {
    if !trace.is_null() {
        drop(Box::from_raw(trace));
    }
}

/// Number of slots; 0 for a null handle.
///
/// # Safety
/// `trace` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ws_trace_len(trace: *const WsTrace) -> usize {
    trace.as_ref().map_or(0, |t| t.0.len())
}

/// # Safety
/// `trace` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ws_trace_num_subcarriers(trace: *const WsTrace) -> usize {
    trace.as_ref().map_or(0, |t| t.0.grid().num_subcarriers())
}

/// # Safety
/// `trace` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ws_trace_sample_rate_hz(trace: *const WsTrace) -> f64 {
    trace.as_ref().map_or(0.0, |t| t.0.sample_rate_hz())
}

/// # Safety
/// `trace` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ws_trace_center_frequency_hz(trace: *const WsTrace) -> f64 {
    trace
        .as_ref()
        .map_or(0.0, |t| t.0.grid().center_frequency_hz())
}

/// # Safety
/// `trace` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ws_trace_has_cfr(trace: *const WsTrace) -> bool {
    trace.as_ref().is_some_and(|t| !t.0.cfr_frames().is_empty())
}

/// # Safety
/// `trace` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ws_trace_has_rssi(trace: *const WsTrace) -> bool {
    trace
        .as_ref()
        .is_some_and(|t| !t.0.rssi_samples().is_empty())
}

/// Per-frame CFR amplitude reduced across subcarriers.
///
/// # Safety
/// `trace` must be a live handle, `out` valid for `capacity` doubles and
/// `count` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn ws_trace_amplitude_series(
    trace: *const WsTrace,
    kind: WsAggregationKind,
    subcarrier: usize,
    out: *mut f64,
    capacity: usize,
    count: *mut usize,
) -> WsStatus {
    guard(|| {
        let trace = trace_ref(trace)?;
        let series = aggregate_amplitude(trace, aggregation(kind, subcarrier))
            .map_err(|e| Failure::from(Error::from(e)))?;
        fill(&series, out, capacity, count)
    })
}

/// RSSI stream in dBm.
///
/// # Safety
/// As [`ws_trace_amplitude_series`].
#[no_mangle]
pub unsafe extern "C" fn ws_trace_rssi_series(
    trace: *const WsTrace,
    out: *mut f64,
    capacity: usize,
    count: *mut usize,
) -> WsStatus {
    guard(|| fill(&trace_ref(trace)?.rssi_series(), out, capacity, count))
}

/// Synthesizes a trace from a TOML scenario document.
///
/// # Safety
/// `scenario_toml` must be a NUL-terminated string; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ws_simulate(
    scenario_toml: *const c_char,
    band: WsBand,
    seed: u64,
    out: *mut *mut WsTrace,
) -> WsStatus {
    guard(|| {
        if out.is_null() {
            return Err(Failure::null("out"));
        }
        if scenario_toml.is_null() {
            return Err(Failure::null("scenario_toml"));
        }
        let text = CStr::from_ptr(scenario_toml)
            .to_str()
            .map_err(|_| Failure(WsStatus::Config, "scenario is not valid UTF-8".into()))?;
        let file = ScenarioFile::parse(text).map_err(|e| Failure::from(Error::from(e)))?;
        let band = match band {
            WsBand::Ghz2_4 => Band::Ghz2_4,
            WsBand::Ghz6 => Band::Ghz6,
        };
        let trace = file
            .synthesize(band, seed)
            .map_err(|e| Failure::from(Error::from(e)))?;
        *out = Box::into_raw(Box::new(WsTrace(trace)));
        Ok(())
    })
}

/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ws_ma_new(window: usize, out: *mut *mut WsMovingAverage) -> WsStatus {
    guard(|| {
        if out.is_null() {
            return Err(Failure::null("out"));
        }
        let ma = MovingAverage::new(window).map_err(|e| Failure::invalid(e.to_string()))?;
        *out = Box::into_raw(Box::new(WsMovingAverage(ma)));
        Ok(())
    })
}

/// Pushes one sample and writes the current average to `out`.
///
/// # Safety
/// `ma` must be a live handle and `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn ws_ma_update(
    ma: *mut WsMovingAverage,
    sample: f64,
    out: *mut f64,
) -> WsStatus {
    guard(|| {
        let ma = ma.as_mut().ok_or_else(|| Failure::null("moving average"))?;
        if out.is_null() {
            return Err(Failure::null("out"));
        }
        *out =
            ma.0.update(sample)
                .map_err(|e| Failure::invalid(e.to_string()))?;
        Ok(())
    })
}

/// # Safety
/// `ma` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ws_ma_reset(ma: *mut WsMovingAverage) {
    if let Some(ma) = ma.as_mut() {
        ma.0.reset();
    }
}

/// # Safety
/// `ma` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ws_ma_free(ma: *mut WsMovingAverage) {
    if !ma.is_null() {
        drop(Box::from_raw(ma));
    }
}

/// Smooths `len` samples into `out` (also `len` long).
///
/// # Safety
/// `series` and `out` must be valid for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn ws_smooth_series(
    series: *const f64,
    len: usize,
    window: usize,
    out: *mut f64,
) -> WsStatus {
    guard(|| {
        let xs = slice_arg(series, len)?;
        let ys = smooth_series(xs, window).map_err(|e| Failure::invalid(e.to_string()))?;
        let mut count = 0;
        fill(&ys, out, len, &mut count)
    })
}

/// # Safety
/// `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn ws_quantize_rssi(power_mw: f64, out: *mut i32) -> WsStatus {
    guard(|| {
        if out.is_null() {
            return Err(Failure::null("out"));
        }
        *out = quantize_rssi(power_mw).map_err(|e| Failure::invalid(e.to_string()))?;
        Ok(())
    })
}

/// Breathing rate of a smoothed series. `params` may be null for defaults.
///
/// # Safety
/// `series` valid for `len` doubles, `params` null or valid, `out_hz` valid.
#[no_mangle]
pub unsafe extern "C" fn ws_estimate_respiration_rate(
    series: *const f64,
    len: usize,
    sample_rate_hz: f64,
    params: *const WsDetectorParams,
    out_hz: *mut f64,
) -> WsStatus {
    guard(|| {
        if out_hz.is_null() {
            return Err(Failure::null("out_hz"));
        }
        let xs = slice_arg(series, len)?;
        *out_hz = estimate_respiration_rate(xs, sample_rate_hz, &params_arg(params))?;
        Ok(())
    })
}

/// Breath holds in a smoothed series.
///
/// # Safety
/// `series` valid for `len` doubles, `params` null or valid, `events` valid
/// for `capacity` entries, `count` valid.
#[no_mangle]
pub unsafe extern "C" fn ws_detect_breath_holds(
    series: *const f64,
    len: usize,
    sample_rate_hz: f64,
    params: *const WsDetectorParams,
    events: *mut WsEvent,
    capacity: usize,
    count: *mut usize,
) -> WsStatus {
    guard(|| {
        let xs = slice_arg(series, len)?;
        let found = detect_breath_holds(xs, sample_rate_hz, &params_arg(params))?;
        let found: Vec<WsEvent> = found.iter().map(WsEvent::from).collect();
        fill(&found, events, capacity, count)
    })
}

/// Motion episodes in a smoothed series.
///
/// # Safety
/// As [`ws_detect_breath_holds`].
#[no_mangle]
pub unsafe extern "C" fn ws_detect_motion(
    series: *const f64,
    len: usize,
    sample_rate_hz: f64,
    params: *const WsDetectorParams,
    events: *mut WsEvent,
    capacity: usize,
    count: *mut usize,
) -> WsStatus {
    guard(|| {
        let xs = slice_arg(series, len)?;
        let found = detect_motion(xs, sample_rate_hz, &params_arg(params))?;
        let found: Vec<WsEvent> = found.iter().map(WsEvent::from).collect();
        fill(&found, events, capacity, count)
    })
}

/// Full respiration analysis of a trace with the default reductions:
/// rate into `out_rate_hz`, breath holds (trace time) into `events`.
///
/// # Safety
/// `trace` a live handle, `params` null or valid, `out_rate_hz` and `count`
/// valid, `events` valid for `capacity` entries.
#[no_mangle]
pub unsafe extern "C" fn ws_analyze_respiration(
    trace: *const WsTrace,
    window: usize,
    params: *const WsDetectorParams,
    out_rate_hz: *mut f64,
    events: *mut WsEvent,
    capacity: usize,
    count: *mut usize,
) -> WsStatus {
    guard(|| {
        let trace = trace_ref(trace)?;
        if out_rate_hz.is_null() {
            return Err(Failure::null("out_rate_hz"));
        }
        let report = analyze_respiration(
            trace,
            RespirationAggregation::default(),
            window,
            &params_arg(params),
        )?;
        let holds: Vec<WsEvent> = report.holds.iter().map(WsEvent::from).collect();
        fill(&holds, events, capacity, count)?;
        *out_rate_hz = report.rate_hz;
        Ok(())
    })
}

/// Motion episodes (trace time) of a trace with the default reduction.
///
/// # Safety
/// As [`ws_analyze_respiration`] without the rate output.
#[no_mangle]
pub unsafe extern "C" fn ws_analyze_motion(
    trace: *const WsTrace,
    window: usize,
    params: *const WsDetectorParams,
    events: *mut WsEvent,
    capacity: usize,
    count: *mut usize,
) -> WsStatus {
    guard(|| {
        let trace = trace_ref(trace)?;
        let found = analyze_motion(trace, MOTION_AGGREGATION, window, &params_arg(params))?;
        let found: Vec<WsEvent> = found.iter().map(WsEvent::from).collect();
        fill(&found, events, capacity, count)
    })
}
