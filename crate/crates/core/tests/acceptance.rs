//! End-to-end acceptance checks. Runs every criterion, prints one PASS/FAIL
//! line each, and exits non-zero if any fails.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use wisense::dsp::{smooth_series, MovingAverage};
use wisense::io::{read_trace, write_trace, TraceFormat};
use wisense::pipeline::{
    analyze_motion, analyze_respiration, compare_bands, RespirationAggregation, MOTION_AGGREGATION,
};
use wisense::scenario::{Scenario, ScenarioFile};
use wisense::sim::{quantize_rssi, reflected_phase_excursion_rad, Band};
use wisense::types::{CfrFrame, RssiSample, SubcarrierGrid, Trace};
use wisense::DetectorParams;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn scenario(name: &str) -> ScenarioFile {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .join(name);
    ScenarioFile::parse(&std::fs::read_to_string(&path).unwrap()).unwrap()
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn moving_average_oracle() -> Outcome {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let xs: Vec<f64> = (0..100_000).map(|_| rng.random_range(-1.0..1.0)).collect();
    let mut worst = 0.0f64;
    for w in [1usize, 3, 100, 1000] {
        let mut ma = MovingAverage::new(w).unwrap();
        for (t, &x) in xs.iter().enumerate() {
            let got = ma.update(x).unwrap();
            let lo = (t + 1).saturating_sub(w);
            let mut sum = 0.0;
            for &v in &xs[lo..=t] {
                sum += v;
            }
            let expected = sum / (t + 1 - lo) as f64;
            worst = worst.max((got - expected).abs());
        }
    }
    let elapsed = started.elapsed();
    check(
        worst <= 1e-9 && elapsed < Duration::from_secs(5),
        format!("max |err| = {worst:.2e}, {:.2} s", elapsed.as_secs_f64()),
    )
}

fn regime_boundary() -> Outcome {
    // ramp x_t = t for t = 1, 2, ...
    let ramp: Vec<f64> = (1..=200).map(|t| t as f64).collect();
    let out = smooth_series(&ramp, 100).unwrap();
    // t = 99: mean of 1..=99; t = 100: mean of 1..=100; t = 101: mean of 2..=101
    let expected = [(99, 50.0), (100, 50.5), (101, 51.5)];
    let mut worst = 0.0f64;
    for (t, e) in expected {
        worst = worst.max((out[t - 1] - e).abs());
    }
    check(
        worst <= 1e-12,
        format!(
            "outputs {:?}, max |err| = {worst:.1e}",
            [out[98], out[99], out[100]]
        ),
    )
}

fn protocol_reproduction() -> Outcome {
    let started = Instant::now();
    let file = scenario("respiration_protocol.toml");
    let Scenario::Respiration(truth) = file.scenario().unwrap() else {
        unreachable!()
    };
    let params = DetectorParams::default();
    let mut worst = 0.0f64;
    let mut failures = Vec::new();
    for seed in 0..20u64 {
        let trace = file.synthesize(Band::Ghz2_4, seed).unwrap();
        let holds =
            match analyze_respiration(&trace, RespirationAggregation::default(), 100, &params) {
                Ok(r) => r.holds,
                Err(e) => {
                    failures.push(format!("seed {seed}: {e}"));
                    continue;
                }
            };
        if holds.len() != truth.hold_intervals.len() {
            failures.push(format!("seed {seed}: {} holds", holds.len()));
            continue;
        }
        for (h, &(s, e)) in holds.iter().zip(&truth.hold_intervals) {
            let err = (h.start_s - s).abs().max((h.end_s - e).abs());
            worst = worst.max(err);
            if err > 1.0 {
                failures.push(format!(
                    "seed {seed}: [{:.2}, {:.2}] vs [{s}, {e}]",
                    h.start_s, h.end_s
                ));
            }
        }
    }
    let elapsed = started.elapsed();
    check(
        failures.is_empty() && elapsed < Duration::from_secs(30),
        format!(
            "20 seeds, worst boundary error {worst:.2} s, {:.1} s{}",
            elapsed.as_secs_f64(),
            if failures.is_empty() {
                String::new()
            } else {
                format!("; {}", failures.join("; "))
            }
        ),
    )
}

fn rate_accuracy() -> Outcome {
    let mut file = scenario("respiration_steady.toml");
    let params = DetectorParams::default();
    let mut hits = 0;
    let mut misses = Vec::new();
    for rate in [0.15, 0.25, 0.35] {
        file.respiration.as_mut().unwrap().breath_rate_hz = rate;
        for seed in 0..10u64 {
            let trace = file.synthesize(Band::Ghz2_4, seed).unwrap();
            match analyze_respiration(&trace, RespirationAggregation::default(), 100, &params) {
                Ok(r) if ((r.rate_hz - rate) / rate).abs() <= 0.05 => hits += 1,
                Ok(r) => misses.push(format!("{rate} Hz seed {seed}: {:.4}", r.rate_hz)),
                Err(e) => misses.push(format!("{rate} Hz seed {seed}: {e}")),
            }
        }
    }
    check(
        hits >= 28,
        format!(
            "{hits}/30 within 5%{}",
            if misses.is_empty() {
                String::new()
            } else {
                format!("; {}", misses.join("; "))
            }
        ),
    )
}

fn band_sensitivity() -> Outcome {
    let file = scenario("respiration_steady.toml");
    let cmp = compare_bands(&file, 7, 50, 100).map_err(|e| e.to_string())?;
    let formula =
        reflected_phase_excursion_rad(6.0e9, 0.005) / reflected_phase_excursion_rad(2.4e9, 0.005);
    let exact = cmp.phase_excursion_ratio == 2.5
        && format!("{:.3}", cmp.phase_excursion_ratio) == "2.500"
        && (formula - 2.5).abs() <= 1e-12;
    check(
        exact && cmp.band_ratio > 1.0,
        format!(
            "phase ratio {:.3}, mean peak-to-peak ratio {:.3} over {} paths",
            cmp.phase_excursion_ratio,
            cmp.band_ratio,
            cmp.static_path_lengths_m.len()
        ),
    )
}

fn motion_detection() -> Outcome {
    let params = DetectorParams::default();
    let mut correct = 0;
    let mut worst = 0.0f64;
    let mut notes = Vec::new();
    for name in ["motion_one_walk.toml", "motion_two_walks.toml"] {
        let file = scenario(name);
        let Scenario::Motion(truth) = file.scenario().unwrap() else {
            unreachable!()
        };
        let walks = truth.walk_intervals();
        for seed in 0..10u64 {
            let trace = file.synthesize(Band::Ghz2_4, seed).unwrap();
            let events = analyze_motion(&trace, MOTION_AGGREGATION, 100, &params).unwrap();
            if events.len() != walks.len() {
                notes.push(format!("{name} seed {seed}: {} events", events.len()));
                continue;
            }
            let err = events
                .iter()
                .zip(&walks)
                .map(|(e, &(s, t))| (e.start_s - s).abs().max((e.end_s - t).abs()))
                .fold(0.0, f64::max);
            worst = worst.max(err);
            if err <= 1.5 {
                correct += 1;
            } else {
                notes.push(format!("{name} seed {seed}: boundary error {err:.2} s"));
            }
        }
    }
    check(
        correct >= 18,
        format!(
            "{correct}/20 correct, worst boundary error among matched counts {worst:.2} s{}",
            if notes.is_empty() {
                String::new()
            } else {
                format!("; {}", notes.join("; "))
            }
        ),
    )
}

fn rssi_quantization() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut powers: Vec<f64> = (0..10_000)
        .map(|_| 10f64.powf(rng.random_range(-12.0..3.0)))
        .collect();
    let mut mismatches = 0;
    for &p in &powers {
        let q = quantize_rssi(p).unwrap();
        let oracle = (10.0 * p.log10()).round_ties_even();
        if q as f64 != oracle || oracle.fract() != 0.0 {
            mismatches += 1;
        }
    }
    powers.sort_by(f64::total_cmp);
    let qs: Vec<i32> = powers.iter().map(|&p| quantize_rssi(p).unwrap()).collect();
    let monotone = qs.windows(2).all(|w| w[0] <= w[1]);
    let one_mw = quantize_rssi(1.0).unwrap();
    let micro = quantize_rssi(0.001).unwrap();
    check(
        mismatches == 0 && monotone && one_mw == 0 && micro == -30,
        format!(
            "1 mW -> {one_mw}, 0.001 mW -> {micro}, monotone {monotone}, {mismatches} mismatches"
        ),
    )
}

fn streaming_latency() -> Outcome {
    let n = 1_000_000;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let xs: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();

    let mut ma = MovingAverage::new(100).unwrap();
    let started = Instant::now();
    let mut acc = 0.0;
    for &x in &xs {
        acc += ma.update(x).unwrap();
    }
    let throughput = n as f64 / started.elapsed().as_secs_f64();
    std::hint::black_box(acc);

    let mut ma = MovingAverage::new(100).unwrap();
    let mut lat: Vec<Duration> = Vec::with_capacity(n);
    for &x in &xs {
        let t = Instant::now();
        std::hint::black_box(ma.update(std::hint::black_box(x)).unwrap());
        lat.push(t.elapsed());
    }
    lat.sort();
    let p999 = lat[(n as f64 * 0.999) as usize];
    check(
        throughput >= 1e5 && p999 < Duration::from_millis(1),
        format!(
            "{throughput:.3e} updates/s, p99.9 latency {:.0} ns",
            p999.as_nanos()
        ),
    )
}

fn random_trace(rng: &mut ChaCha8Rng, i: usize) -> Trace {
    let k = rng.random_range(1..=64);
    let spacing = 78.125e3;
    let center = if rng.random_bool(0.5) { 2.4e9 } else { 6.0e9 };
    let grid = SubcarrierGrid::new(center, spacing * k as f64, k, spacing).unwrap();
    let fs = [10.0, 100.0, 1000.0][rng.random_range(0..3)];
    let n = rng.random_range(0..60);
    let t0 = rng.random_range(0.0..1000.0);
    let with_cfr = n == 0 || rng.random_bool(0.8);
    let with_rssi = !with_cfr || rng.random_bool(0.8);
    let ts: Vec<f64> = (0..n).map(|j| t0 + j as f64 / fs).collect();
    let frames = if with_cfr {
        ts.iter()
            .map(|&t| {
                let gains = (0..k)
                    .map(|_| {
                        let re = rng.random_range(-2.0f32..2.0) as f64;
                        let im = rng.random_range(-2.0f32..2.0) as f64;
                        Complex64::new(re, im)
                    })
                    .collect();
                CfrFrame::new(t, gains)
            })
            .collect()
    } else {
        vec![]
    };
    let rssi = if with_rssi {
        ts.iter()
            .map(|&t| RssiSample {
                timestamp_s: t,
                rssi_db: rng.random_range(-100..=20),
            })
            .collect()
    } else {
        vec![]
    };
    Trace::new(grid, fs, frames, rssi, format!("trace-{i}")).unwrap()
}

fn round_trip() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut binary_failures = 0;
    let mut worst_rel = 0.0f64;
    for i in 0..100 {
        let trace = random_trace(&mut rng, i);
        let mut bytes = Vec::new();
        write_trace(&trace, &mut bytes, TraceFormat::Binary).unwrap();
        let back = read_trace(bytes.as_slice(), TraceFormat::Binary).unwrap();
        let mut again = Vec::new();
        write_trace(&back, &mut again, TraceFormat::Binary).unwrap();
        if back != trace || again != bytes {
            binary_failures += 1;
        }

        let mut text = Vec::new();
        write_trace(&trace, &mut text, TraceFormat::Csv).unwrap();
        let csv_back = read_trace(text.as_slice(), TraceFormat::Csv).unwrap();
        for (a, b) in trace.cfr_frames().iter().zip(csv_back.cfr_frames()) {
            for (ga, gb) in a.gains.iter().zip(&b.gains) {
                let amp = ga.re.hypot(ga.im);
                let rel = (gb.re - amp).abs() / amp.max(f64::MIN_POSITIVE);
                worst_rel = worst_rel.max(rel);
            }
        }
        if csv_back.len() != trace.len() {
            binary_failures += 1;
        }
    }
    check(
        binary_failures == 0 && worst_rel <= 1e-8,
        format!(
            "{binary_failures} binary mismatches, csv max relative amplitude error {worst_rel:.2e}"
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("moving-average oracle equivalence", moving_average_oracle),
        ("expanding/sliding regime boundary", regime_boundary),
        ("breath-hold protocol reproduction", protocol_reproduction),
        ("respiration rate accuracy", rate_accuracy),
        ("band sensitivity", band_sensitivity),
        ("motion detection", motion_detection),
        ("RSSI quantization", rssi_quantization),
        ("streaming latency", streaming_latency),
        ("trace round-trip", round_trip),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        match f() {
            Ok(detail) => println!("criterion {}: PASS  {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {}: FAIL  {name}: {detail}", i + 1);
            }
        }
    }
    println!(
        "acceptance: {}/{} passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
