//! Wi-Fi sensing toolkit.
//!
//! Synthesizes CFR/RSSI traces from a two-path channel, smooths amplitude and
//! RSSI streams with a streaming moving average, and detects breathing rate,
//! breath holds and motion.
//!
//! Modules:
//! - [`types`]: subcarrier grid, CFR frames, RSSI samples, traces.
//! - [`sim`]: respiration and motion trace synthesis, RSSI quantization.
//! - [`dsp`]: moving average, subcarrier selection and aggregation.
//! - [`detect`]: rate, breath-hold, motion and band-sensitivity detectors.
//! - [`io`]: binary/CSV trace files and paced replay.
//! - [`scenario`]: TOML scenario files.
//! - [`pipeline`]: aggregate → smooth → detect compositions.
//! - [`cli`]: the `wisense` command line.

pub mod cli;
pub mod detect;
pub mod dsp;
pub mod io;
pub mod pipeline;
pub mod scenario;
pub mod sim;
pub mod types;

pub use detect::{DetectError, DetectorParams, EventInterval, EventKind};
pub use dsp::{Aggregation, DspError, MovingAverage};
pub use io::{TraceFormat, TraceIoError};
pub use scenario::{ConfigError, ScenarioFile};
pub use sim::{Band, ChannelModel, MotionScenario, NoiseLevel, RespirationScenario, SimError};
pub use types::{CfrFrame, RssiSample, SubcarrierGrid, Trace, TraceError};

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Dsp(#[from] DspError),
    #[error(transparent)]
    Detect(#[from] DetectError),
    #[error(transparent)]
    Io(#[from] TraceIoError),
    #[error(transparent)]
    Config(#[from] ConfigError),
}
