//! End-to-end analysis: aggregate → smooth → detect.
//!
//! The first `W - 1` smoothed samples are still in the expanding-mean warm-up
//! and are dropped before detection. Event times are shifted back onto the
//! trace timeline and corrected for the `(W - 1) / 2`-sample delay of the
//! trailing window.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::detect::{
    band_sensitivity_ratio, detect_breath_holds, detect_motion, estimate_respiration_rate,
    peak_to_peak, DetectError, DetectorParams, EventInterval,
};
use crate::dsp::{aggregate_amplitude, smooth_series, Aggregation, DspError};
use crate::scenario::{ConfigError, Scenario, ScenarioFile};
use crate::sim::{reflected_phase_excursion_rad, Band};
use crate::types::Trace;
use crate::Error;

/// Default CFR reduction for breathing-rate estimation.
pub const RATE_AGGREGATION: Aggregation = Aggregation::MaxVariance;
/// Default CFR reduction for breath-hold detection.
pub const HOLD_AGGREGATION: Aggregation = Aggregation::Mean;
/// Default CFR reduction for motion analysis.
pub const MOTION_AGGREGATION: Aggregation = Aggregation::Mean;
/// Range of static reflected-path lengths drawn by a band sweep.
pub const SWEEP_PATH_RANGE_M: (f64, f64) = (1.0, 5.0);

/// A smoothed scalar series with warm-up removed.
#[derive(Debug, Clone, PartialEq)]
pub struct SteadySeries {
    pub values: Vec<f64>,
    /// Trace time `values[0]` represents, delay-corrected.
    pub offset_s: f64,
    pub sample_rate_hz: f64,
}

/// Aggregates the CFR stream, smooths it with window `window`, and drops the warm-up.
pub fn steady_cfr_series(
    trace: &Trace,
    aggregation: Aggregation,
    window: usize,
) -> Result<SteadySeries, Error> {
    let raw = aggregate_amplitude(trace, aggregation)?;
    let smoothed = smooth_series(&raw, window)?;
    let skip = window - 1;
    if skip >= smoothed.len() {
        return Err(DspError::InsufficientData(format!(
            "{} frames do not outlast a {window}-sample smoothing warm-up",
            smoothed.len()
        ))
        .into());
    }
    let t0 = trace.cfr_frames()[0].timestamp_s;
    Ok(SteadySeries {
        values: smoothed[skip..].to_vec(),
        offset_s: t0 + (skip as f64 - (window - 1) as f64 / 2.0) / trace.sample_rate_hz(),
        sample_rate_hz: trace.sample_rate_hz(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RespirationReport {
    pub rate_hz: f64,
    pub holds: Vec<EventInterval>,
}

/// CFR reductions used by [`analyze_respiration`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RespirationAggregation {
    pub rate: Aggregation,
    pub holds: Aggregation,
}

impl Default for RespirationAggregation {
    fn default() -> Self {
        Self {
            rate: RATE_AGGREGATION,
            holds: HOLD_AGGREGATION,
        }
    }
}

impl RespirationAggregation {
    pub fn uniform(method: Aggregation) -> Self {
        Self {
            rate: method,
            holds: method,
        }
    }
}

/// Breath holds over the whole trace, and the breathing rate over the longest
/// stretch between holds.
pub fn analyze_respiration(
    trace: &Trace,
    aggregation: RespirationAggregation,
    window: usize,
    params: &DetectorParams,
) -> Result<RespirationReport, Error> {
    let s = steady_cfr_series(trace, aggregation.holds, window)?;
    let holds = match detect_breath_holds(&s.values, s.sample_rate_hz, params) {
        Ok(h) => h,
        // A flat calibration segment means there is no breathing to measure.
        Err(DetectError::FlatBaseline) => {
            return Err(DetectError::NoPeriodicity { peaks: 0 }.into())
        }
        Err(e) => return Err(e.into()),
    };
    let r = if aggregation.rate == aggregation.holds {
        s.clone()
    } else {
        steady_cfr_series(trace, aggregation.rate, window)?
    };
    let (lo, hi) = longest_gap(&holds, r.values.len(), r.sample_rate_hz);
    let rate_hz = estimate_respiration_rate(&r.values[lo..hi], r.sample_rate_hz, params)?;
    Ok(RespirationReport {
        rate_hz,
        holds: holds.into_iter().map(|h| h.shifted(s.offset_s)).collect(),
    })
}

/// Sample range of the longest stretch not covered by `events`.
fn longest_gap(events: &[EventInterval], len: usize, sample_rate_hz: f64) -> (usize, usize) {
    let mut best = (0, 0);
    let mut cursor = 0usize;
    let consider = |lo: usize, hi: usize, best: &mut (usize, usize)| {
        if hi > lo && hi - lo > best.1 - best.0 {
            *best = (lo, hi);
        }
    };
    for e in events {
        let start = ((e.start_s * sample_rate_hz).floor() as usize).min(len);
        let end = ((e.end_s * sample_rate_hz).ceil() as usize + 1).min(len);
        consider(cursor, start, &mut best);
        cursor = cursor.max(end);
    }
    consider(cursor, len, &mut best);
    best
}

pub fn analyze_motion(
    trace: &Trace,
    aggregation: Aggregation,
    window: usize,
    params: &DetectorParams,
) -> Result<Vec<EventInterval>, Error> {
    let s = steady_cfr_series(trace, aggregation, window)?;
    Ok(detect_motion(&s.values, s.sample_rate_hz, params)?
        .into_iter()
        .map(|e| e.shifted(s.offset_s))
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandComparison {
    /// Mean over runs of peak-to-peak(6 GHz) / peak-to-peak(2.4 GHz).
    pub band_ratio: f64,
    /// Mean smoothed peak-to-peak at 2.4 GHz.
    pub peak_to_peak_low: f64,
    /// Mean smoothed peak-to-peak at 6 GHz.
    pub peak_to_peak_high: f64,
    pub phase_excursion_low_rad: f64,
    pub phase_excursion_high_rad: f64,
    pub phase_excursion_ratio: f64,
    /// Static path lengths simulated.
    pub static_path_lengths_m: Vec<f64>,
}

/// Runs a respiration scenario at 2.4 and 6 GHz and compares the smoothed
/// amplitude fluctuation. With `sweep == 0` the scenario's own static path is
/// used; otherwise `sweep` path lengths are drawn uniformly from
/// [`SWEEP_PATH_RANGE_M`] with `seed`. A still chest (zero amplitude) is a
/// [`DetectError::ConstantSeries`].
pub fn compare_bands(
    file: &ScenarioFile,
    seed: u64,
    sweep: usize,
    window: usize,
) -> Result<BandComparison, Error> {
    let Scenario::Respiration(resp) = file.scenario()? else {
        return Err(ConfigError::Field {
            field: "respiration".into(),
            message: "band comparison needs a respiration scenario".into(),
        }
        .into());
    };
    if resp.chest_amplitude_m == 0.0 {
        return Err(DetectError::ConstantSeries.into());
    }
    let paths: Vec<f64> = if sweep == 0 {
        vec![file.channel.static_path_length_m]
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..sweep)
            .map(|_| rng.random_range(SWEEP_PATH_RANGE_M.0..SWEEP_PATH_RANGE_M.1))
            .collect()
    };

    let fluctuation = |path: f64, band: Band| -> Result<Vec<f64>, Error> {
        let mut f = file.clone();
        f.channel.static_path_length_m = path;
        let trace = f.synthesize(band, seed)?;
        Ok(steady_cfr_series(&trace, RATE_AGGREGATION, window)?.values)
    };

    let (mut ratio_sum, mut low_sum, mut high_sum) = (0.0, 0.0, 0.0);
    for &path in &paths {
        let (low, high) = std::thread::scope(|s| {
            let low = s.spawn(|| fluctuation(path, Band::Ghz2_4));
            let high = fluctuation(path, Band::Ghz6);
            (low.join().expect("band simulation panicked"), high)
        });
        let (low, high) = (low?, high?);
        ratio_sum += band_sensitivity_ratio(&low, &high)?;
        low_sum += peak_to_peak(&low);
        high_sum += peak_to_peak(&high);
    }
    let n = paths.len() as f64;
    let phase_low =
        reflected_phase_excursion_rad(Band::Ghz2_4.center_frequency_hz(), resp.chest_amplitude_m);
    let phase_high =
        reflected_phase_excursion_rad(Band::Ghz6.center_frequency_hz(), resp.chest_amplitude_m);
    Ok(BandComparison {
        band_ratio: ratio_sum / n,
        peak_to_peak_low: low_sum / n,
        peak_to_peak_high: high_sum / n,
        phase_excursion_low_rad: phase_low,
        phase_excursion_high_rad: phase_high,
        // the excursion is linear in the carrier, so its ratio is the carrier ratio
        phase_excursion_ratio: Band::Ghz6.center_frequency_hz()
            / Band::Ghz2_4.center_frequency_hz(),
        static_path_lengths_m: paths,
    })
}
