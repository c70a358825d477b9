//! Streaming moving average and the series utilities that feed the detectors.
//!
//! The moving average has two regimes. While fewer than `W` inputs have been
//! seen it returns the mean of everything so far; afterwards it returns the
//! mean of the last `W` inputs.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::types::{Trace, TraceError};

/// Smoothing window used throughout the toolkit.
pub const DEFAULT_WINDOW: usize = 100;

/// Updates between exact re-summations of the running sum.
const RESUM_INTERVAL: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DspError {
    #[error("window length must be at least {min}, got {got}")]
    Window { min: usize, got: usize },
    #[error("non-finite input {value} at position {index}")]
    NonFinite { index: u64, value: f64 },
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error(transparent)]
    Trace(#[from] TraceError),
}

/// O(1) streaming moving average over the last `W` inputs.
#[derive(Debug, Clone)]
pub struct MovingAverage {
    window: usize,
    buffer: VecDeque<f64>,
    // Neumaier-compensated running sum of `buffer`.
    sum: f64,
    compensation: f64,
    count: u64,
    since_resum: u64,
}

impl MovingAverage {
    pub fn new(window: usize) -> Result<Self, DspError> {
        if window == 0 {
            return Err(DspError::Window { min: 1, got: 0 });
        }
        Ok(Self {
            window,
            buffer: VecDeque::with_capacity(window),
            sum: 0.0,
            compensation: 0.0,
            count: 0,
            since_resum: 0,
        })
    }

    pub fn window(&self) -> usize {
        self.window
    }

    /// Number of inputs seen so far.
    pub fn count(&self) -> u64 {
        self.count
    }

    /// Current window contents, oldest first.
    pub fn buffer(&self) -> impl Iterator<Item = f64> + '_ {
        self.buffer.iter().copied()
    }

    pub fn running_sum(&self) -> f64 {
        self.sum + self.compensation
    }

    /// Pushes `gamma` and returns the smoothed value. Non-finite input is
    /// rejected and leaves the state untouched.
    pub fn update(&mut self, gamma: f64) -> Result<f64, DspError> {
        if !gamma.is_finite() {
            return Err(DspError::NonFinite {
                index: self.count,
                value: gamma,
            });
        }
        if self.buffer.len() == self.window {
            let oldest = self.buffer.pop_front().expect("full buffer");
            self.add(-oldest);
        }
        self.buffer.push_back(gamma);
        self.add(gamma);
        self.count += 1;
        self.since_resum += 1;
        if self.since_resum >= RESUM_INTERVAL {
            self.resum();
        }
        Ok(self.running_sum() / self.buffer.len() as f64)
    }

    pub fn reset(&mut self) {
        self.buffer.clear();
        self.sum = 0.0;
        self.compensation = 0.0;
        self.count = 0;
        self.since_resum = 0;
    }

    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn resum(&mut self) {
        self.sum = 0.0;
        self.compensation = 0.0;
        let values: Vec<f64> = self.buffer.iter().copied().collect();
        for v in values {
            self.add(v);
        }
        self.since_resum = 0;
    }
}

/// Batch moving average: the streaming filter folded over `series`.
pub fn smooth_series(series: &[f64], window: usize) -> Result<Vec<f64>, DspError> {
    let mut ma = MovingAverage::new(window)?;
    series.iter().map(|&x| ma.update(x)).collect()
}

/// `series` minus its long-window moving average.
pub fn detrend(series: &[f64], long_window: usize) -> Result<Vec<f64>, DspError> {
    if long_window < 2 {
        return Err(DspError::Window {
            min: 2,
            got: long_window,
        });
    }
    let trend = smooth_series(series, long_window)?;
    Ok(series.iter().zip(trend).map(|(x, m)| x - m).collect())
}

/// Index of the subcarrier whose amplitude varies most over the first
/// `window_s` seconds. Ties go to the smallest index.
pub fn select_subcarrier(trace: &Trace, window_s: f64) -> Result<usize, DspError> {
    if !(window_s.is_finite() && window_s > 0.0) {
        return Err(DspError::InsufficientData(format!(
            "selection window must be positive, got {window_s}"
        )));
    }
    let frames = trace.cfr_frames();
    let needed = ((window_s * trace.sample_rate_hz()).round() as usize).max(1);
    if frames.len() < needed {
        return Err(DspError::InsufficientData(format!(
            "{needed} frames needed for a {window_s} s selection window, trace has {}",
            frames.len()
        )));
    }
    let k = trace.grid().num_subcarriers();
    let n = needed as f64;
    // Two passes over the window per subcarrier, done column-wise.
    let mut mean = vec![0.0; k];
    for f in &frames[..needed] {
        for (m, a) in mean.iter_mut().zip(f.amplitudes()) {
            *m += a;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut var = vec![0.0; k];
    for f in &frames[..needed] {
        for ((v, a), m) in var.iter_mut().zip(f.amplitudes()).zip(&mean) {
            *v += (a - m) * (a - m);
        }
    }
    let mut best = 0;
    for (i, v) in var.iter().enumerate() {
        if *v > var[best] {
            best = i;
        }
    }
    Ok(best)
}

/// How a CFR frame is reduced to one scalar per time slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    Mean,
    Single(usize),
    MaxVariance,
}

impl std::fmt::Display for Aggregation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Aggregation::Mean => write!(f, "mean"),
            Aggregation::Single(k) => write!(f, "single:{k}"),
            Aggregation::MaxVariance => write!(f, "max-variance"),
        }
    }
}

impl std::str::FromStr for Aggregation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "mean" => Ok(Aggregation::Mean),
            "max-variance" | "max_variance" => Ok(Aggregation::MaxVariance),
            other => other
                .strip_prefix("single:")
                .and_then(|k| k.parse().ok())
                .map(Aggregation::Single)
                .ok_or_else(|| {
                    format!("unknown aggregation '{other}' (mean | max-variance | single:<k>)")
                }),
        }
    }
}

/// Reduces each CFR frame to a scalar amplitude. `MaxVariance` selects over
/// the whole trace.
pub fn aggregate_amplitude(trace: &Trace, method: Aggregation) -> Result<Vec<f64>, DspError> {
    let frames = trace.cfr_frames();
    if frames.is_empty() {
        return Err(DspError::InsufficientData("trace has no CFR frames".into()));
    }
    match method {
        Aggregation::Mean => Ok(frames
            .iter()
            .map(|f| {
                let a = f.amplitudes();
                a.iter().sum::<f64>() / a.len() as f64
            })
            .collect()),
        Aggregation::Single(k) => Ok(trace.subcarrier_amplitudes(k)?),
        Aggregation::MaxVariance => {
            let span_s = frames.len() as f64 / trace.sample_rate_hz();
            let k = select_subcarrier(trace, span_s)?;
            Ok(trace.subcarrier_amplitudes(k)?)
        }
    }
}
