//! Shared data model: subcarrier layout, CFR frames, RSSI samples and traces.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default OFDM subcarrier count for a 20 MHz channel.
pub const DEFAULT_NUM_SUBCARRIERS: usize = 245;
/// Default channel bandwidth.
pub const DEFAULT_BANDWIDTH_HZ: f64 = 20e6;
/// 20 MHz / 256 FFT bins.
pub const DEFAULT_SUBCARRIER_SPACING_HZ: f64 = 78.125e3;

/// Relative tolerance on the slot spacing of a trace.
const SLOT_SPACING_RTOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TraceError {
    #[error("invalid subcarrier grid: {0}")]
    InvalidGrid(String),
    #[error("subcarrier index {index} out of range (grid has {len} subcarriers)")]
    SubcarrierIndex { index: usize, len: usize },
    #[error("invalid trace: {0}")]
    InvalidTrace(String),
}

/// OFDM frequency layout, symmetric around the center frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubcarrierGrid {
    center_frequency_hz: f64,
    bandwidth_hz: f64,
    num_subcarriers: usize,
    subcarrier_spacing_hz: f64,
}

impl SubcarrierGrid {
    pub fn new(
        center_frequency_hz: f64,
        bandwidth_hz: f64,
        num_subcarriers: usize,
        subcarrier_spacing_hz: f64,
    ) -> Result<Self, TraceError> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(center_frequency_hz) {
            return Err(TraceError::InvalidGrid(format!(
                "center frequency must be positive, got {center_frequency_hz}"
            )));
        }
        if !positive(bandwidth_hz) {
            return Err(TraceError::InvalidGrid(format!(
                "bandwidth must be positive, got {bandwidth_hz}"
            )));
        }
        if !positive(subcarrier_spacing_hz) {
            return Err(TraceError::InvalidGrid(format!(
                "subcarrier spacing must be positive, got {subcarrier_spacing_hz}"
            )));
        }
        if num_subcarriers == 0 {
            return Err(TraceError::InvalidGrid(
                "at least one subcarrier required".into(),
            ));
        }
        let occupied = subcarrier_spacing_hz * (num_subcarriers - 1) as f64;
        if occupied > bandwidth_hz {
            return Err(TraceError::InvalidGrid(format!(
                "{num_subcarriers} subcarriers at {subcarrier_spacing_hz} Hz span {occupied} Hz, \
                 wider than the {bandwidth_hz} Hz bandwidth"
            )));
        }
        // Spacing must stay resolvable at this carrier, otherwise f_k is not increasing.
        let half = (num_subcarriers - 1) as f64 / 2.0;
        let lowest = center_frequency_hz - half * subcarrier_spacing_hz;
        if lowest <= 0.0 || lowest + subcarrier_spacing_hz <= lowest {
            return Err(TraceError::InvalidGrid(
                "subcarrier frequencies are not strictly increasing and positive".into(),
            ));
        }
        Ok(Self {
            center_frequency_hz,
            bandwidth_hz,
            num_subcarriers,
            subcarrier_spacing_hz,
        })
    }

    /// 245 subcarriers, 78.125 kHz spacing in a 20 MHz channel at `center_frequency_hz`.
    pub fn wifi_20mhz(center_frequency_hz: f64) -> Result<Self, TraceError> {
        Self::new(
            center_frequency_hz,
            DEFAULT_BANDWIDTH_HZ,
            DEFAULT_NUM_SUBCARRIERS,
            DEFAULT_SUBCARRIER_SPACING_HZ,
        )
    }

    pub fn center_frequency_hz(&self) -> f64 {
        self.center_frequency_hz
    }

    pub fn bandwidth_hz(&self) -> f64 {
        self.bandwidth_hz
    }

    pub fn num_subcarriers(&self) -> usize {
        self.num_subcarriers
    }

    pub fn subcarrier_spacing_hz(&self) -> f64 {
        self.subcarrier_spacing_hz
    }

    /// Center frequency f_k of subcarrier `k`.
    pub fn subcarrier_frequency(&self, k: usize) -> Result<f64, TraceError> {
        if k >= self.num_subcarriers {
            return Err(TraceError::SubcarrierIndex {
                index: k,
                len: self.num_subcarriers,
            });
        }
        let offset = k as f64 - (self.num_subcarriers - 1) as f64 / 2.0;
        Ok(self.center_frequency_hz + offset * self.subcarrier_spacing_hz)
    }

    /// All subcarrier frequencies in index order.
    pub fn frequencies(&self) -> Vec<f64> {
        (0..self.num_subcarriers)
            .map(|k| {
                let offset = k as f64 - (self.num_subcarriers - 1) as f64 / 2.0;
                self.center_frequency_hz + offset * self.subcarrier_spacing_hz
            })
            .collect()
    }
}

/// Complex channel gains of every subcarrier in one time slot.
#[derive(Debug, Clone, PartialEq)]
pub struct CfrFrame {
    pub timestamp_s: f64,
    pub gains: Vec<Complex64>,
}

impl CfrFrame {
    pub fn new(timestamp_s: f64, gains: Vec<Complex64>) -> Self {
        Self { timestamp_s, gains }
    }

    /// Per-subcarrier amplitude A_{k,t} = |H(f_k, t)|.
    pub fn amplitudes(&self) -> Vec<f64> {
        amplitudes(self)
    }
}

/// Per-subcarrier amplitude A_{k,t} = |H(f_k, t)| of a frame.
pub fn amplitudes(frame: &CfrFrame) -> Vec<f64> {
    frame.gains.iter().map(|g| g.re.hypot(g.im)).collect()
}

/// One RSSI reading in whole dBm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RssiSample {
    pub timestamp_s: f64,
    pub rssi_db: i16,
}

/// Uniformly sampled CFR and RSSI streams from one antenna.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    grid: SubcarrierGrid,
    sample_rate_hz: f64,
    cfr_frames: Vec<CfrFrame>,
    rssi_samples: Vec<RssiSample>,
    label: String,
}

impl Trace {
    /// Builds a trace, checking every structural invariant.
    pub fn new(
        grid: SubcarrierGrid,
        sample_rate_hz: f64,
        cfr_frames: Vec<CfrFrame>,
        rssi_samples: Vec<RssiSample>,
        label: impl Into<String>,
    ) -> Result<Self, TraceError> {
        if !(sample_rate_hz.is_finite() && sample_rate_hz > 0.0) {
            return Err(TraceError::InvalidTrace(format!(
                "sample rate must be positive, got {sample_rate_hz}"
            )));
        }
        let k = grid.num_subcarriers();
        for (i, f) in cfr_frames.iter().enumerate() {
            if f.gains.len() != k {
                return Err(TraceError::InvalidTrace(format!(
                    "frame {i} has {} gains, grid has {k} subcarriers",
                    f.gains.len()
                )));
            }
            if f.gains
                .iter()
                .any(|g| !g.re.is_finite() || !g.im.is_finite())
            {
                return Err(TraceError::InvalidTrace(format!(
                    "frame {i} has a non-finite gain"
                )));
            }
        }
        let cfr_ts: Vec<f64> = cfr_frames.iter().map(|f| f.timestamp_s).collect();
        let rssi_ts: Vec<f64> = rssi_samples.iter().map(|s| s.timestamp_s).collect();
        check_timeline(&cfr_ts, sample_rate_hz, "cfr")?;
        check_timeline(&rssi_ts, sample_rate_hz, "rssi")?;
        if !cfr_ts.is_empty() && !rssi_ts.is_empty() {
            if cfr_ts.len() != rssi_ts.len() {
                return Err(TraceError::InvalidTrace(format!(
                    "{} cfr frames but {} rssi samples",
                    cfr_ts.len(),
                    rssi_ts.len()
                )));
            }
            if let Some(i) = cfr_ts.iter().zip(&rssi_ts).position(|(a, b)| a != b) {
                return Err(TraceError::InvalidTrace(format!(
                    "cfr and rssi timestamps differ at slot {i}"
                )));
            }
        }
        Ok(Self {
            grid,
            sample_rate_hz,
            cfr_frames,
            rssi_samples,
            label: label.into(),
        })
    }

    pub fn grid(&self) -> &SubcarrierGrid {
        &self.grid
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    pub fn cfr_frames(&self) -> &[CfrFrame] {
        &self.cfr_frames
    }

    pub fn rssi_samples(&self) -> &[RssiSample] {
        &self.rssi_samples
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Number of time slots (the longer of the two streams; they agree when both exist).
    pub fn len(&self) -> usize {
        self.cfr_frames.len().max(self.rssi_samples.len())
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Slot timestamps from whichever stream is present.
    pub fn timestamps(&self) -> Vec<f64> {
        if !self.cfr_frames.is_empty() {
            self.cfr_frames.iter().map(|f| f.timestamp_s).collect()
        } else {
            self.rssi_samples.iter().map(|s| s.timestamp_s).collect()
        }
    }

    /// Time between first and last slot.
    pub fn duration_s(&self) -> f64 {
        let ts = self.timestamps();
        match (ts.first(), ts.last()) {
            (Some(a), Some(b)) => b - a,
            _ => 0.0,
        }
    }

    /// Amplitude series of one subcarrier over all frames.
    pub fn subcarrier_amplitudes(&self, k: usize) -> Result<Vec<f64>, TraceError> {
        if k >= self.grid.num_subcarriers() {
            return Err(TraceError::SubcarrierIndex {
                index: k,
                len: self.grid.num_subcarriers(),
            });
        }
        Ok(self
            .cfr_frames
            .iter()
            .map(|f| {
                let g = f.gains[k];
                g.re.hypot(g.im)
            })
            .collect())
    }

    /// RSSI stream as reals.
    pub fn rssi_series(&self) -> Vec<f64> {
        self.rssi_samples.iter().map(|s| s.rssi_db as f64).collect()
    }

    pub fn into_parts(self) -> (SubcarrierGrid, f64, Vec<CfrFrame>, Vec<RssiSample>, String) {
        (
            self.grid,
            self.sample_rate_hz,
            self.cfr_frames,
            self.rssi_samples,
            self.label,
        )
    }
}

fn check_timeline(ts: &[f64], sample_rate_hz: f64, stream: &str) -> Result<(), TraceError> {
    if let Some(i) = ts.iter().position(|t| !t.is_finite() || *t < 0.0) {
        return Err(TraceError::InvalidTrace(format!(
            "{stream} timestamp {i} is negative or non-finite"
        )));
    }
    let period = 1.0 / sample_rate_hz;
    for (i, w) in ts.windows(2).enumerate() {
        let dt = w[1] - w[0];
        if dt <= 0.0 {
            return Err(TraceError::InvalidTrace(format!(
                "{stream} timestamps not strictly increasing at slot {}",
                i + 1
            )));
        }
        if ((dt - period) / period).abs() > SLOT_SPACING_RTOL {
            return Err(TraceError::InvalidTrace(format!(
                "{stream} slot spacing {dt} s at slot {} does not match 1/{sample_rate_hz} Hz",
                i + 1
            )));
        }
    }
    Ok(())
}
