//! Respiration rate, breath-hold, motion and band-sensitivity detectors.
//!
//! All detectors take an already smoothed scalar series sampled at a fixed
//! rate. Times in returned intervals are seconds from the first sample.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Length of the leading normal-breathing segment used as variance baseline.
pub const CALIBRATION_S: f64 = 10.0;
/// Window of the motion energy statistic.
pub const MOTION_ENERGY_WINDOW_S: f64 = 1.0;
/// Shortest motion episode reported.
pub const MIN_MOTION_S: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DetectError {
    #[error("no periodicity: found {peaks} qualifying peak(s), need at least 2")]
    NoPeriodicity { peaks: usize },
    #[error("series of {len} samples is shorter than the {needed}-sample calibration window")]
    TooShort { len: usize, needed: usize },
    #[error("calibration segment is flat; no breathing baseline to compare against")]
    FlatBaseline,
    #[error("series is constant; peak-to-peak fluctuation is zero")]
    ConstantSeries,
    #[error("series lengths differ ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("invalid detector parameters: {0}")]
    Params(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    BreathHold,
    Motion,
}

/// A detected episode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EventInterval {
    pub start_s: f64,
    pub end_s: f64,
    pub kind: EventKind,
    /// Breath holds: mean variance ratio to baseline. Motion: peak energy over threshold.
    pub score: f64,
}

impl EventInterval {
    pub fn duration_s(&self) -> f64 {
        self.end_s - self.start_s
    }

    pub fn shifted(mut self, offset_s: f64) -> Self {
        self.start_s += offset_s;
        self.end_s += offset_s;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DetectorParams {
    /// Fraction of the baseline variance below which the series counts as flat.
    pub flat_var_threshold: f64,
    pub min_hold_s: f64,
    /// Absolute mean squared first difference that opens a motion episode.
    pub motion_energy_threshold: f64,
    /// Close level as a fraction of the open level (motion), or its reciprocal (holds).
    pub hysteresis_ratio: f64,
    pub min_peak_distance_s: f64,
    /// Fraction of the series peak-to-peak a peak must stand out by.
    pub min_prominence: f64,
}

impl Default for DetectorParams {
    fn default() -> Self {
        Self {
            flat_var_threshold: 0.1,
            min_hold_s: 10.0,
            motion_energy_threshold: 1e-7,
            hysteresis_ratio: 0.5,
            min_peak_distance_s: 2.0,
            min_prominence: 0.2,
        }
    }
}

impl DetectorParams {
    pub fn validate(&self) -> Result<(), DetectError> {
        let checks = [
            ("flat_var_threshold", self.flat_var_threshold),
            ("min_hold_s", self.min_hold_s),
            ("motion_energy_threshold", self.motion_energy_threshold),
            ("hysteresis_ratio", self.hysteresis_ratio),
            ("min_peak_distance_s", self.min_peak_distance_s),
            ("min_prominence", self.min_prominence),
        ];
        for (name, v) in checks {
            if !(v.is_finite() && v > 0.0) {
                return Err(DetectError::Params(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        if self.hysteresis_ratio >= 1.0 {
            return Err(DetectError::Params(format!(
                "hysteresis_ratio must be below 1, got {}",
                self.hysteresis_ratio
            )));
        }
        Ok(())
    }
}

fn check_rate(sample_rate_hz: f64) -> Result<(), DetectError> {
    if sample_rate_hz.is_finite() && sample_rate_hz > 0.0 {
        Ok(())
    } else {
        Err(DetectError::Params(format!(
            "sample rate must be positive, got {sample_rate_hz}"
        )))
    }
}

pub(crate) fn peak_to_peak(series: &[f64]) -> f64 {
    let (lo, hi) = series
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
            (lo.min(x), hi.max(x))
        });
    if series.is_empty() {
        0.0
    } else {
        hi - lo
    }
}

/// A local maximum and its topographic prominence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peak {
    pub index: usize,
    pub prominence: f64,
}

/// Local maxima (plateaus reported at their middle sample) with prominence
/// at least `min_prominence`, thinned so no two are closer than `min_distance`
/// samples. Taller peaks win the distance contest.
pub fn find_peaks(series: &[f64], min_prominence: f64, min_distance: usize) -> Vec<Peak> {
    let n = series.len();
    let mut candidates = Vec::new();
    let mut i = 1;
    while i + 1 < n {
        if series[i] > series[i - 1] {
            let mut j = i;
            while j + 1 < n && series[j + 1] == series[i] {
                j += 1;
            }
            if j + 1 < n && series[j + 1] < series[i] {
                candidates.push((i + j) / 2);
            }
            i = j + 1;
        } else {
            i += 1;
        }
    }

    let mut peaks: Vec<Peak> = candidates
        .into_iter()
        .map(|p| Peak {
            index: p,
            prominence: prominence(series, p),
        })
        .filter(|p| p.prominence >= min_prominence)
        .collect();

    if min_distance > 1 && peaks.len() > 1 {
        let mut order: Vec<usize> = (0..peaks.len()).collect();
        order.sort_by(|&a, &b| {
            series[peaks[b].index]
                .total_cmp(&series[peaks[a].index])
                .then(a.cmp(&b))
        });
        let mut keep = vec![true; peaks.len()];
        for &o in &order {
            if !keep[o] {
                continue;
            }
            let at = peaks[o].index;
            for (q, k) in keep.iter_mut().enumerate() {
                if q != o && *k && peaks[q].index.abs_diff(at) < min_distance {
                    *k = false;
                }
            }
        }
        let mut it = keep.into_iter();
        peaks.retain(|_| it.next().unwrap());
    }
    peaks
}

fn prominence(series: &[f64], peak: usize) -> f64 {
    let h = series[peak];
    let mut left_min = h;
    for &v in series[..peak].iter().rev() {
        if v > h {
            break;
        }
        left_min = left_min.min(v);
    }
    let mut right_min = h;
    for &v in &series[peak + 1..] {
        if v > h {
            break;
        }
        right_min = right_min.min(v);
    }
    h - left_min.max(right_min)
}

/// Breathing rate from peak spacing: (peaks − 1) / (time from first to last peak).
pub fn estimate_respiration_rate(
    series: &[f64],
    sample_rate_hz: f64,
    params: &DetectorParams,
) -> Result<f64, DetectError> {
    params.validate()?;
    check_rate(sample_rate_hz)?;
    let p2p = peak_to_peak(series);
    if p2p.is_nan() || p2p <= 0.0 {
        return Err(DetectError::NoPeriodicity { peaks: 0 });
    }
    let distance = (params.min_peak_distance_s * sample_rate_hz).round() as usize;
    let peaks = find_peaks(series, params.min_prominence * p2p, distance);
    if peaks.len() < 2 {
        return Err(DetectError::NoPeriodicity { peaks: peaks.len() });
    }
    let span_s = (peaks[peaks.len() - 1].index - peaks[0].index) as f64 / sample_rate_hz;
    Ok((peaks.len() - 1) as f64 / span_s)
}

/// Running sums over a window of `w` samples of centered data.
struct WindowStats {
    prefix: Vec<f64>,
    prefix_sq: Vec<f64>,
}

impl WindowStats {
    fn new(xs: &[f64], center: f64) -> Self {
        let mut prefix = Vec::with_capacity(xs.len() + 1);
        let mut prefix_sq = Vec::with_capacity(xs.len() + 1);
        let (mut s, mut s2) = (0.0, 0.0);
        prefix.push(0.0);
        prefix_sq.push(0.0);
        for &x in xs {
            let d = x - center;
            s += d;
            s2 += d * d;
            prefix.push(s);
            prefix_sq.push(s2);
        }
        Self { prefix, prefix_sq }
    }

    /// Population variance of samples `lo..hi`.
    fn variance(&self, lo: usize, hi: usize) -> f64 {
        let n = (hi - lo) as f64;
        let s = self.prefix[hi] - self.prefix[lo];
        let s2 = self.prefix_sq[hi] - self.prefix_sq[lo];
        ((s2 - s * s / n) / n).max(0.0)
    }
}

/// Flat stretches of a breathing series.
///
/// The first [`CALIBRATION_S`] seconds set the baseline variance. A trailing
/// window of `min_hold_s / 2` whose variance drops below
/// `flat_var_threshold × baseline` opens a candidate that starts where that
/// window starts; it stays open while the window variance is at most
/// `threshold / hysteresis_ratio`. Each candidate's edges are then moved to
/// the change points of its squared deviation from the flat level. Candidates of at least
/// `min_hold_s` are kept.
pub fn detect_breath_holds(
    series: &[f64],
    sample_rate_hz: f64,
    params: &DetectorParams,
) -> Result<Vec<EventInterval>, DetectError> {
    params.validate()?;
    check_rate(sample_rate_hz)?;
    let cal = (CALIBRATION_S * sample_rate_hz).round() as usize;
    if series.len() < cal || cal < 2 {
        return Err(DetectError::TooShort {
            len: series.len(),
            needed: cal.max(2),
        });
    }
    let center = series[..cal].iter().sum::<f64>() / cal as f64;
    let stats = WindowStats::new(series, center);
    let baseline = stats.variance(0, cal);
    if baseline.is_nan() || baseline <= 0.0 {
        return Err(DetectError::FlatBaseline);
    }
    let open_level = params.flat_var_threshold * baseline;
    let close_level = open_level / params.hysteresis_ratio;
    let w = ((params.min_hold_s / 2.0 * sample_rate_hz).round() as usize).clamp(2, series.len());

    let mut raw: Vec<(usize, usize, f64, usize)> = Vec::new();
    // (start sample, last sample, summed variance ratio, windows)
    let mut open: Option<(usize, f64, usize)> = None;
    for end in w..=series.len() {
        let v = stats.variance(end - w, end);
        match open {
            None if v < open_level => open = Some((end - w, v / baseline, 1)),
            Some((start, acc, n)) if v <= close_level => {
                open = Some((start, acc + v / baseline, n + 1))
            }
            Some((start, acc, n)) => {
                raw.push((start, end - 2, acc, n));
                open = None;
            }
            None => {}
        }
    }
    if let Some((start, acc, n)) = open {
        raw.push((start, series.len() - 1, acc, n));
    }

    let mut events: Vec<EventInterval> = Vec::new();
    for (start, last, acc, n) in raw {
        let (start, last) = refine_hold(series, start, last, w, baseline);
        let ev = EventInterval {
            start_s: start as f64 / sample_rate_hz,
            end_s: last as f64 / sample_rate_hz,
            kind: EventKind::BreathHold,
            score: acc / n as f64,
        };
        if ev.duration_s() < params.min_hold_s {
            continue;
        }
        match events.last_mut() {
            Some(prev) if ev.start_s <= prev.end_s => {
                prev.end_s = prev.end_s.max(ev.end_s);
                prev.score = prev.score.max(ev.score);
            }
            _ => events.push(ev),
        }
    }
    Ok(events)
}

/// Moves the edges of a coarse flat stretch `start..=last` to the most likely
/// change points between breathing and flatness. Each edge is searched in a
/// range reaching `slack` samples outside the stretch and `2 * slack` inside.
fn refine_hold(
    series: &[f64],
    start: usize,
    last: usize,
    slack: usize,
    baseline: f64,
) -> (usize, usize) {
    let level = median(series[start..=last].to_vec());
    let floor = 1e-9 * baseline;
    let mid = start + (last - start) / 2;
    // an edge at either end of the series is a truncation, not a change
    let lo = (start > 0)
        .then(|| {
            change_point(
                series,
                level,
                start.saturating_sub(slack),
                (start + 2 * slack).min(mid),
                floor,
            )
        })
        .flatten()
        .unwrap_or(start);
    let hi = (last + 1 < series.len())
        .then(|| {
            change_point(
                series,
                level,
                last.saturating_sub(2 * slack).max(mid),
                (last + slack + 1).min(series.len()),
                floor,
            )
        })
        .flatten()
        .map_or(last, |i| i - 1);
    (lo, hi.max(lo))
}

/// Split index of `series[a..b]` into two segments whose mean square
/// deviations from `level` differ, by maximum Gaussian likelihood.
fn change_point(series: &[f64], level: f64, a: usize, b: usize, floor: f64) -> Option<usize> {
    if b < a + 4 {
        return None;
    }
    let mut prefix = Vec::with_capacity(b - a + 1);
    let mut acc = 0.0;
    prefix.push(0.0);
    for &x in &series[a..b] {
        acc += (x - level) * (x - level);
        prefix.push(acc);
    }
    let n = b - a;
    let cost = |i: usize| {
        let (n1, n2) = (i as f64, (n - i) as f64);
        let m1 = (prefix[i] / n1).max(floor);
        let m2 = ((prefix[n] - prefix[i]) / n2).max(floor);
        n1 * m1.ln() + n2 * m2.ln()
    };
    (1..n)
        .min_by(|&i, &j| cost(i).total_cmp(&cost(j)))
        .map(|i| a + i)
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

/// Episodes where the 1 s centered mean of the squared first difference
/// exceeds `motion_energy_threshold`; they close once it falls below
/// `hysteresis_ratio × threshold`. Episodes shorter than [`MIN_MOTION_S`] are dropped.
pub fn detect_motion(
    series: &[f64],
    sample_rate_hz: f64,
    params: &DetectorParams,
) -> Result<Vec<EventInterval>, DetectError> {
    params.validate()?;
    check_rate(sample_rate_hz)?;
    let energy = motion_energy(series, sample_rate_hz);
    let open_level = params.motion_energy_threshold;
    let close_level = params.hysteresis_ratio * open_level;

    let mut events = Vec::new();
    let mut push = |start: usize, end: usize, peak: f64| {
        let ev = EventInterval {
            start_s: start as f64 / sample_rate_hz,
            end_s: end as f64 / sample_rate_hz,
            kind: EventKind::Motion,
            score: peak / open_level,
        };
        if ev.duration_s() >= MIN_MOTION_S {
            events.push(ev);
        }
    };
    let mut open: Option<(usize, f64)> = None;
    for (i, &e) in energy.iter().enumerate() {
        match open {
            None if e > open_level => open = Some((i, e)),
            Some((start, peak)) if e >= close_level => open = Some((start, peak.max(e))),
            Some((start, peak)) => {
                push(start, i, peak);
                open = None;
            }
            None => {}
        }
    }
    if let Some((start, peak)) = open {
        push(start, series.len().saturating_sub(1), peak);
    }
    Ok(events)
}

/// Centered 1 s mean of the squared first difference, aligned with the series.
pub fn motion_energy(series: &[f64], sample_rate_hz: f64) -> Vec<f64> {
    let n = series.len();
    if n < 2 {
        return vec![0.0; n];
    }
    // d[i] = x[i] - x[i-1], with d[0] = 0
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(0.0);
    let mut acc = 0.0;
    for i in 0..n {
        let d = if i == 0 {
            0.0
        } else {
            series[i] - series[i - 1]
        };
        acc += d * d;
        prefix.push(acc);
    }
    let w = ((MOTION_ENERGY_WINDOW_S * sample_rate_hz).round() as usize).max(1);
    let half = w / 2;
    (0..n)
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (lo + w).min(n);
            let lo = hi.saturating_sub(w);
            (prefix[hi] - prefix[lo]) / (hi - lo) as f64
        })
        .collect()
}

/// Peak-to-peak of `series_high` over peak-to-peak of `series_low`.
pub fn band_sensitivity_ratio(series_low: &[f64], series_high: &[f64]) -> Result<f64, DetectError> {
    if series_low.len() != series_high.len() {
        return Err(DetectError::LengthMismatch(
            series_low.len(),
            series_high.len(),
        ));
    }
    let low = peak_to_peak(series_low);
    let high = peak_to_peak(series_high);
    if low.is_nan() || high.is_nan() || low <= 0.0 || high <= 0.0 {
        return Err(DetectError::ConstantSeries);
    }
    Ok(high / low)
}
