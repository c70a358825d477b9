//! Scenario configuration files (TOML, `schema_version = 1`).
//!
//! ```toml
//! schema_version = 1
//! sample_rate_hz = 100.0          # optional, default 100
//!
//! [channel]                        # optional, every key has a default
//! los_gain = [1.0, 0.0]            # re, im
//! reflected_gain_magnitude = 0.3
//! static_path_length_m = 2.5
//! noise_snr_db = 20.0              # or "noiseless"
//! tx_power_mw = 1.0
//!
//! [grid]                           # optional; carrier comes from the band
//! num_subcarriers = 245
//! bandwidth_hz = 20e6
//! subcarrier_spacing_hz = 78125.0
//!
//! [respiration]                    # exactly one of [respiration] / [motion]
//! breath_rate_hz = 0.25
//! chest_amplitude_m = 0.005
//! hold_intervals = [[60.0, 100.0], [130.0, 170.0]]
//! duration_s = 190.0
//!
//! # [motion]
//! # waypoints = [[-0.5, 2.0], [5.5, 2.0]]
//! # speed_mps = 0.3
//! # tx_position = [0.0, 0.0]
//! # rx_position = [5.0, 0.0]
//! # dwell_s = 10.0
//! # duration_s = 40.0
//! ```

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sim::{
    synthesize_motion, synthesize_respiration, Band, ChannelModel, MotionScenario, NoiseLevel,
    RespirationScenario, SimError, DEFAULT_SAMPLE_RATE_HZ, DEFAULT_TX_POWER_MW,
};
use crate::types::{
    SubcarrierGrid, Trace, DEFAULT_BANDWIDTH_HZ, DEFAULT_NUM_SUBCARRIERS,
    DEFAULT_SUBCARRIER_SPACING_HZ,
};

pub const SCENARIO_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    /// Syntax or schema problem; the message carries line/column when known.
    #[error("{0}")]
    Parse(String),
    #[error("field `{field}`: {message}")]
    Field { field: String, message: String },
    #[error(transparent)]
    Sim(#[from] SimError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NoiseSetting {
    SnrDb(f64),
    Keyword(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChannelConfig {
    pub los_gain: [f64; 2],
    pub reflected_gain_magnitude: f64,
    pub static_path_length_m: f64,
    pub noise_snr_db: NoiseSetting,
    pub tx_power_mw: f64,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        let ch = ChannelModel::default();
        Self {
            los_gain: [ch.los_gain.re, ch.los_gain.im],
            reflected_gain_magnitude: ch.reflected_gain_magnitude,
            static_path_length_m: ch.static_path_length_m,
            noise_snr_db: NoiseSetting::SnrDb(20.0),
            tx_power_mw: DEFAULT_TX_POWER_MW,
        }
    }
}

impl ChannelConfig {
    pub fn to_model(&self, rng_seed: u64) -> Result<ChannelModel, ConfigError> {
        let noise = match &self.noise_snr_db {
            NoiseSetting::SnrDb(db) => NoiseLevel::SnrDb(*db),
            NoiseSetting::Keyword(k) if k == "noiseless" => NoiseLevel::Noiseless,
            NoiseSetting::Keyword(k) => {
                return Err(ConfigError::Field {
                    field: "channel.noise_snr_db".into(),
                    message: format!("expected a number or \"noiseless\", got \"{k}\""),
                })
            }
        };
        let model = ChannelModel {
            los_gain: Complex64::new(self.los_gain[0], self.los_gain[1]),
            reflected_gain_magnitude: self.reflected_gain_magnitude,
            static_path_length_m: self.static_path_length_m,
            noise,
            rng_seed,
            tx_power_mw: self.tx_power_mw,
        };
        model.validate()?;
        Ok(model)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub num_subcarriers: usize,
    pub bandwidth_hz: f64,
    pub subcarrier_spacing_hz: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            num_subcarriers: DEFAULT_NUM_SUBCARRIERS,
            bandwidth_hz: DEFAULT_BANDWIDTH_HZ,
            subcarrier_spacing_hz: DEFAULT_SUBCARRIER_SPACING_HZ,
        }
    }
}

fn default_sample_rate() -> f64 {
    DEFAULT_SAMPLE_RATE_HZ
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub schema_version: u32,
    #[serde(default = "default_sample_rate")]
    pub sample_rate_hz: f64,
    #[serde(default)]
    pub channel: ChannelConfig,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub respiration: Option<RespirationScenario>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub motion: Option<MotionScenario>,
}

/// The scenario body of a config file.
#[derive(Debug, Clone, PartialEq)]
pub enum Scenario {
    Respiration(RespirationScenario),
    Motion(MotionScenario),
}

impl Scenario {
    pub fn kind(&self) -> &'static str {
        match self {
            Scenario::Respiration(_) => "respiration",
            Scenario::Motion(_) => "motion",
        }
    }
}

impl ScenarioFile {
    /// Parses and validates a scenario document.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let file: ScenarioFile =
            toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        file.validate()?;
        Ok(file)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.schema_version != SCENARIO_SCHEMA_VERSION {
            return Err(ConfigError::Field {
                field: "schema_version".into(),
                message: format!(
                    "unsupported version {}, expected {SCENARIO_SCHEMA_VERSION}",
                    self.schema_version
                ),
            });
        }
        if !(self.sample_rate_hz.is_finite() && self.sample_rate_hz > 0.0) {
            return Err(ConfigError::Field {
                field: "sample_rate_hz".into(),
                message: format!("must be positive, got {}", self.sample_rate_hz),
            });
        }
        self.scenario()?;
        self.channel.to_model(0)?;
        self.grid(Band::Ghz2_4)?;
        match self.scenario()? {
            Scenario::Respiration(r) => r.validate()?,
            Scenario::Motion(m) => m.validate()?,
        }
        Ok(())
    }

    pub fn scenario(&self) -> Result<Scenario, ConfigError> {
        match (&self.respiration, &self.motion) {
            (Some(r), None) => Ok(Scenario::Respiration(r.clone())),
            (None, Some(m)) => Ok(Scenario::Motion(m.clone())),
            (Some(_), Some(_)) => Err(ConfigError::Field {
                field: "respiration/motion".into(),
                message: "exactly one of [respiration] or [motion] may be given".into(),
            }),
            (None, None) => Err(ConfigError::Field {
                field: "respiration/motion".into(),
                message: "a [respiration] or [motion] table is required".into(),
            }),
        }
    }

    pub fn grid(&self, band: Band) -> Result<SubcarrierGrid, ConfigError> {
        SubcarrierGrid::new(
            band.center_frequency_hz(),
            self.grid.bandwidth_hz,
            self.grid.num_subcarriers,
            self.grid.subcarrier_spacing_hz,
        )
        .map_err(|e| ConfigError::Field {
            field: "grid".into(),
            message: e.to_string(),
        })
    }

    /// Synthesizes the scenario in `band` with noise seeded by `seed`.
    pub fn synthesize(&self, band: Band, seed: u64) -> Result<Trace, ConfigError> {
        let channel = self.channel.to_model(seed)?;
        let grid = self.grid(band)?;
        let trace = match self.scenario()? {
            Scenario::Respiration(r) => {
                synthesize_respiration(&r, &channel, &grid, self.sample_rate_hz)?
            }
            Scenario::Motion(m) => synthesize_motion(&m, &channel, &grid, self.sample_rate_hz)?,
        };
        Ok(trace)
    }
}
