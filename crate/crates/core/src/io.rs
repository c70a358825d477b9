//! Trace files and paced replay.
//!
//! Binary layout (all little-endian):
//!
//! ```text
//! magic                  8 bytes  "WVSENSE1"
//! schema_version         u32      1
//! streams                u32      bit 0: CFR present, bit 1: RSSI present
//! num_subcarriers        u32
//! sample_rate_hz         f64
//! center_frequency_hz    f64
//! bandwidth_hz           f64
//! subcarrier_spacing_hz  f64
//! frame_count            u64
//! label_len              u32, then label_len bytes of UTF-8
//! records                frame_count × {
//!     timestamp_s f64
//!     rssi_db     i16                 (if RSSI present)
//!     gains       K × (re f32, im f32) (if CFR present)
//! }
//! ```
//!
//! The CSV dialect has a header row `t_s,rssi_db,a_0,...,a_{K-1}` and one row
//! per slot with amplitudes only. Timestamps are written with round-trip
//! precision, amplitudes with 9 significant digits, and an absent RSSI stream
//! leaves its column empty. CSV carries no radio metadata: reading one back
//! assumes a 20 MHz grid at 2.4 GHz and infers the sample rate from the
//! timestamps.

use std::io::{self, Read, Write};
use std::time::{Duration, Instant};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::types::{
    CfrFrame, RssiSample, SubcarrierGrid, Trace, TraceError, DEFAULT_BANDWIDTH_HZ,
    DEFAULT_NUM_SUBCARRIERS, DEFAULT_SUBCARRIER_SPACING_HZ,
};

pub const MAGIC: &[u8; 8] = b"WVSENSE1";
pub const SCHEMA_VERSION: u32 = 1;
/// Fixed part of the header, before the label bytes.
pub const HEADER_FIXED_LEN: usize = 8 + 4 + 4 + 4 + 8 * 4 + 8 + 4;

const STREAM_CFR: u32 = 1;
const STREAM_RSSI: u32 = 2;
/// CSV assumes this carrier when reading.
const CSV_CENTER_FREQUENCY_HZ: f64 = 2.4e9;
/// Guard against absurd header values before allocating.
const MAX_SUBCARRIERS: u32 = 1 << 16;
const MAX_LABEL_LEN: u32 = 1 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceFormat {
    Binary,
    Csv,
}

impl TraceFormat {
    /// `.csv` means CSV, anything else binary.
    pub fn from_path(path: &std::path::Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("csv") => TraceFormat::Csv,
            _ => TraceFormat::Binary,
        }
    }
}

#[derive(Debug, Error)]
pub enum TraceIoError {
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),
    #[error("format error: {0}")]
    Format(String),
    #[error("corrupt trace at byte {offset}: {reason}")]
    Corrupt { offset: u64, reason: String },
    #[error("invalid trace: {0}")]
    Validation(#[from] TraceError),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

/// Writes `trace` and returns the number of bytes written.
pub fn write_trace<W: Write>(
    trace: &Trace,
    destination: W,
    format: TraceFormat,
) -> Result<u64, TraceIoError> {
    let mut sink = CountingWriter {
        inner: destination,
        count: 0,
    };
    match format {
        TraceFormat::Binary => write_binary(trace, &mut sink)?,
        TraceFormat::Csv => write_csv(trace, &mut sink)?,
    }
    sink.flush()?;
    Ok(sink.count)
}

pub fn read_trace<R: Read>(source: R, format: TraceFormat) -> Result<Trace, TraceIoError> {
    match format {
        TraceFormat::Binary => read_binary(source),
        TraceFormat::Csv => read_csv(source),
    }
}

struct CountingWriter<W> {
    inner: W,
    count: u64,
}

impl<W: Write> Write for CountingWriter<W> {
    fn write(&mut self, buf: &[u8]) -> io::Result<usize> {
        let n = self.inner.write(buf)?;
        self.count += n as u64;
        Ok(n)
    }

    fn flush(&mut self) -> io::Result<()> {
        self.inner.flush()
    }
}

fn write_binary<W: Write>(trace: &Trace, w: &mut W) -> Result<(), TraceIoError> {
    let grid = trace.grid();
    let has_cfr = !trace.cfr_frames().is_empty();
    let has_rssi = !trace.rssi_samples().is_empty();
    let streams = if has_cfr { STREAM_CFR } else { 0 } | if has_rssi { STREAM_RSSI } else { 0 };
    let k = u32::try_from(grid.num_subcarriers())
        .map_err(|_| TraceIoError::Format("too many subcarriers".into()))?;
    let label = trace.label().as_bytes();
    let label_len =
        u32::try_from(label.len()).map_err(|_| TraceIoError::Format("label too long".into()))?;

    let mut header = Vec::with_capacity(HEADER_FIXED_LEN + label.len());
    header.extend_from_slice(MAGIC);
    header.extend_from_slice(&SCHEMA_VERSION.to_le_bytes());
    header.extend_from_slice(&streams.to_le_bytes());
    header.extend_from_slice(&k.to_le_bytes());
    header.extend_from_slice(&trace.sample_rate_hz().to_le_bytes());
    header.extend_from_slice(&grid.center_frequency_hz().to_le_bytes());
    header.extend_from_slice(&grid.bandwidth_hz().to_le_bytes());
    header.extend_from_slice(&grid.subcarrier_spacing_hz().to_le_bytes());
    header.extend_from_slice(&(trace.len() as u64).to_le_bytes());
    header.extend_from_slice(&label_len.to_le_bytes());
    header.extend_from_slice(label);
    w.write_all(&header)?;

    let record_len = 8 + if has_rssi { 2 } else { 0 } + if has_cfr { 8 * k as usize } else { 0 };
    let mut record = Vec::with_capacity(record_len);
    let timestamps = trace.timestamps();
    for (i, t) in timestamps.iter().enumerate() {
        record.clear();
        record.extend_from_slice(&t.to_le_bytes());
        if has_rssi {
            record.extend_from_slice(&trace.rssi_samples()[i].rssi_db.to_le_bytes());
        }
        if has_cfr {
            for g in &trace.cfr_frames()[i].gains {
                record.extend_from_slice(&(g.re as f32).to_le_bytes());
                record.extend_from_slice(&(g.im as f32).to_le_bytes());
            }
        }
        w.write_all(&record)?;
    }
    Ok(())
}

/// Reader that tracks its byte offset for corruption reports.
struct Cursor<R> {
    inner: R,
    offset: u64,
}

impl<R: Read> Cursor<R> {
    fn fill(&mut self, buf: &mut [u8], what: &str) -> Result<(), TraceIoError> {
        let mut got = 0;
        while got < buf.len() {
            match self.inner.read(&mut buf[got..]) {
                Ok(0) => {
                    return Err(TraceIoError::Corrupt {
                        offset: self.offset + got as u64,
                        reason: format!(
                            "truncated {what}: expected {} bytes, got {got}",
                            buf.len()
                        ),
                    })
                }
                Ok(n) => got += n,
                Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
                Err(e) => return Err(e.into()),
            }
        }
        self.offset += buf.len() as u64;
        Ok(())
    }

    fn array<const N: usize>(&mut self, what: &str) -> Result<[u8; N], TraceIoError> {
        let mut b = [0u8; N];
        self.fill(&mut b, what)?;
        Ok(b)
    }

    fn u32(&mut self, what: &str) -> Result<u32, TraceIoError> {
        Ok(u32::from_le_bytes(self.array(what)?))
    }

    fn u64(&mut self, what: &str) -> Result<u64, TraceIoError> {
        Ok(u64::from_le_bytes(self.array(what)?))
    }

    fn f64(&mut self, what: &str) -> Result<f64, TraceIoError> {
        Ok(f64::from_le_bytes(self.array(what)?))
    }
}

fn read_binary<R: Read>(source: R) -> Result<Trace, TraceIoError> {
    let mut cur = Cursor {
        inner: source,
        offset: 0,
    };
    let mut magic = [0u8; 8];
    cur.fill(&mut magic, "magic")
        .map_err(|_| TraceIoError::Format("file too short for magic tag".into()))?;
    if &magic != MAGIC {
        return Err(TraceIoError::Format(format!(
            "bad magic {:?}, expected {:?}",
            String::from_utf8_lossy(&magic),
            std::str::from_utf8(MAGIC).unwrap()
        )));
    }
    let version = cur.u32("schema_version")?;
    if version != SCHEMA_VERSION {
        return Err(TraceIoError::Format(format!(
            "unsupported schema_version {version}, expected {SCHEMA_VERSION}"
        )));
    }
    let streams = cur.u32("streams")?;
    if streams & !(STREAM_CFR | STREAM_RSSI) != 0 {
        return Err(TraceIoError::Format(format!(
            "unknown stream flags {streams:#x}"
        )));
    }
    let k = cur.u32("num_subcarriers")?;
    if k == 0 || k > MAX_SUBCARRIERS {
        return Err(TraceIoError::Format(format!(
            "implausible num_subcarriers {k}"
        )));
    }
    let sample_rate_hz = cur.f64("sample_rate_hz")?;
    let center = cur.f64("center_frequency_hz")?;
    let bandwidth = cur.f64("bandwidth_hz")?;
    let spacing = cur.f64("subcarrier_spacing_hz")?;
    let frame_count = cur.u64("frame_count")?;
    let label_len = cur.u32("label_len")?;
    if label_len > MAX_LABEL_LEN {
        return Err(TraceIoError::Format(format!(
            "implausible label length {label_len}"
        )));
    }
    let mut label = vec![0u8; label_len as usize];
    cur.fill(&mut label, "label")?;
    let label = String::from_utf8(label)
        .map_err(|_| TraceIoError::Format("label is not valid UTF-8".into()))?;
    let grid = SubcarrierGrid::new(center, bandwidth, k as usize, spacing)?;

    let has_cfr = streams & STREAM_CFR != 0;
    let has_rssi = streams & STREAM_RSSI != 0;
    if frame_count > 0 && !has_cfr && !has_rssi {
        return Err(TraceIoError::Format(
            "records present but no stream flagged".into(),
        ));
    }
    let k = k as usize;
    // Cap pre-allocation; a lying frame_count surfaces as truncation instead.
    let cap = frame_count.min(1 << 16) as usize;
    let mut frames = Vec::with_capacity(if has_cfr { cap } else { 0 });
    let mut rssi = Vec::with_capacity(if has_rssi { cap } else { 0 });
    let mut gain_bytes = vec![0u8; 8 * k];
    for _ in 0..frame_count {
        let t = cur.f64("record timestamp")?;
        if has_rssi {
            let v = i16::from_le_bytes(cur.array("record rssi")?);
            rssi.push(RssiSample {
                timestamp_s: t,
                rssi_db: v,
            });
        }
        if has_cfr {
            cur.fill(&mut gain_bytes, "record gains")?;
            let gains = gain_bytes
                .chunks_exact(8)
                .map(|c| {
                    Complex64::new(
                        f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64,
                        f32::from_le_bytes([c[4], c[5], c[6], c[7]]) as f64,
                    )
                })
                .collect();
            frames.push(CfrFrame::new(t, gains));
        }
    }
    let mut probe = [0u8; 1];
    if cur.inner.read(&mut probe)? != 0 {
        return Err(TraceIoError::Corrupt {
            offset: cur.offset,
            reason: format!("trailing data after {frame_count} records"),
        });
    }
    Ok(Trace::new(grid, sample_rate_hz, frames, rssi, label)?)
}

fn write_csv<W: Write>(trace: &Trace, w: &mut W) -> Result<(), TraceIoError> {
    let k = if trace.cfr_frames().is_empty() {
        0
    } else {
        trace.grid().num_subcarriers()
    };
    let mut out = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    let mut row: Vec<String> = Vec::with_capacity(k + 2);
    row.push("t_s".into());
    row.push("rssi_db".into());
    row.extend((0..k).map(|i| format!("a_{i}")));
    out.write_record(&row)?;
    for (i, t) in trace.timestamps().into_iter().enumerate() {
        row.clear();
        row.push(format!("{t:?}"));
        row.push(
            trace
                .rssi_samples()
                .get(i)
                .map(|s| s.rssi_db.to_string())
                .unwrap_or_default(),
        );
        if let Some(f) = trace.cfr_frames().get(i) {
            row.extend(f.amplitudes().into_iter().map(|a| format!("{a:.8e}")));
        }
        out.write_record(&row)?;
    }
    out.flush()?;
    Ok(())
}

fn read_csv<R: Read>(source: R) -> Result<Trace, TraceIoError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(source);
    let headers = rdr.headers()?.clone();
    if headers.len() < 2 || &headers[0] != "t_s" || &headers[1] != "rssi_db" {
        return Err(TraceIoError::Format(
            "csv header must start with t_s,rssi_db".into(),
        ));
    }
    let k = headers.len() - 2;
    for (i, h) in headers.iter().skip(2).enumerate() {
        if h != format!("a_{i}") {
            return Err(TraceIoError::Format(format!(
                "unexpected csv column '{h}', expected a_{i}"
            )));
        }
    }
    let mut ts = Vec::new();
    let mut rssi = Vec::new();
    let mut frames = Vec::new();
    let mut rssi_missing = 0usize;
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = line + 2;
        let field = |i: usize| rec.get(i).unwrap_or("");
        let t: f64 = field(0).parse().map_err(|_| {
            TraceIoError::Format(format!("row {row}: bad timestamp '{}'", field(0)))
        })?;
        let r = field(1);
        if r.is_empty() {
            rssi_missing += 1;
        } else {
            let v: i16 = r
                .parse()
                .map_err(|_| TraceIoError::Format(format!("row {row}: bad rssi_db '{r}'")))?;
            rssi.push(RssiSample {
                timestamp_s: t,
                rssi_db: v,
            });
        }
        if k > 0 {
            let gains = (0..k)
                .map(|i| {
                    field(i + 2)
                        .parse::<f64>()
                        .map(|a| Complex64::new(a, 0.0))
                        .map_err(|_| {
                            TraceIoError::Format(format!("row {row}: bad amplitude a_{i}"))
                        })
                })
                .collect::<Result<Vec<_>, _>>()?;
            frames.push(CfrFrame::new(t, gains));
        }
        ts.push(t);
    }
    if rssi_missing != 0 && !rssi.is_empty() {
        return Err(TraceIoError::Format(
            "rssi_db column is only partly filled".into(),
        ));
    }
    let sample_rate_hz = match (ts.first(), ts.last()) {
        (Some(a), Some(b)) if ts.len() > 1 && b > a => (ts.len() - 1) as f64 / (b - a),
        _ => 1.0,
    };
    let grid = if k == 0 {
        SubcarrierGrid::wifi_20mhz(CSV_CENTER_FREQUENCY_HZ)?
    } else {
        let spacing = DEFAULT_SUBCARRIER_SPACING_HZ;
        let bandwidth = DEFAULT_BANDWIDTH_HZ.max(spacing * (k - 1) as f64);
        SubcarrierGrid::new(CSV_CENTER_FREQUENCY_HZ, bandwidth, k, spacing)?
    };
    debug_assert!(k != 0 || grid.num_subcarriers() == DEFAULT_NUM_SUBCARRIERS);
    Ok(Trace::new(grid, sample_rate_hz, frames, rssi, "")?)
}

/// One time slot handed to a replay consumer.
#[derive(Debug, Clone, Copy)]
pub struct Slot<'a> {
    pub index: usize,
    pub timestamp_s: f64,
    pub cfr: Option<&'a CfrFrame>,
    pub rssi: Option<RssiSample>,
}

#[derive(Debug, Error)]
pub enum ReplayError<E: std::error::Error + 'static> {
    #[error("speed factor must be positive, got {0}")]
    Speed(f64),
    #[error("cannot replay an empty trace")]
    Empty,
    #[error("consumer failed after {delivered} slot(s): {source}")]
    Consumer {
        delivered: usize,
        #[source]
        source: E,
    },
}

/// Delivers every slot of `trace` in order, spacing deliveries by
/// Δt / `speed_factor` of wall-clock time. `f64::INFINITY` disables pacing.
/// Returns the elapsed wall-clock seconds.
pub fn replay<E, F>(
    trace: &Trace,
    speed_factor: f64,
    mut consumer: F,
) -> Result<f64, ReplayError<E>>
where
    E: std::error::Error + 'static,
    F: FnMut(Slot<'_>) -> Result<(), E>,
{
    if speed_factor.is_nan() || speed_factor <= 0.0 {
        return Err(ReplayError::Speed(speed_factor));
    }
    if trace.is_empty() {
        return Err(ReplayError::Empty);
    }
    let timestamps = trace.timestamps();
    let t0 = timestamps[0];
    let start = Instant::now();
    for (i, &t) in timestamps.iter().enumerate() {
        if speed_factor.is_finite() {
            // Absolute schedule so sleep overshoot does not accumulate.
            let due = start + Duration::from_secs_f64((t - t0) / speed_factor);
            let now = Instant::now();
            if due > now {
                std::thread::sleep(due - now);
            }
        }
        let slot = Slot {
            index: i,
            timestamp_s: t,
            cfr: trace.cfr_frames().get(i),
            rssi: trace.rssi_samples().get(i).copied(),
        };
        consumer(slot).map_err(|source| ReplayError::Consumer {
            delivered: i,
            source,
        })?;
    }
    Ok(start.elapsed().as_secs_f64())
}
