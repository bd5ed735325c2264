//! JSON experiment configuration.
//!
//! Every key except `schema_version`, `kind` and `room` is optional; missing
//! values take the defaults below. Unknown keys are rejected.
//!
//! ```json
//! {
//!   "schema_version": 1,
//!   "description": "free text",
//!   "kind": "convergence | sweep_led_count | sweep_spacing | sweep_height | ber | power_map",
//!   "seed": 0,
//!   "room": { "width": 5, "length": 6, "ceiling_height": 3, "work_plane_height": 0 },
//!   "array": { "m_x": 3, "m_y": 3, "d_x": 0.02, "d_y": 0.02 },
//!   "channel": { "area": 1e-4, "lambertian_order": 1, "filter_gain": 1,
//!                "concentrator_gain": 1, "fov_deg": 70 },
//!   "optimizer": { "mu": 1e8, "epsilon": 1e-4, "max_iter": 500, "stop_mode": "relative" },
//!   "q": 10,
//!   "grid_spacing": 0.1,
//!   "sweep": [],
//!   "led_counts": [],
//!   "baseline_draws": 1000,
//!   "ber": { "n_users": 15, "n_bits": 100000, "trials": 1, "pilot_repetitions": 1,
//!            "known_channel": false, "noise_sweep": [] },
//!   "output": null
//! }
//! ```

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::channel::ChannelParams;
use crate::geometry::{LedArray, RoomScenario};
use crate::link_sim::log_spaced;
use crate::precoder::{OptimizerConfig, StopMode};
use crate::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

/// Noise variances used by `ber` runs that do not list their own.
pub fn default_noise_sweep() -> Vec<f64> {
    log_spaced(1e-16, 1e-11, 10)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Convergence,
    SweepLedCount,
    SweepSpacing,
    SweepHeight,
    Ber,
    PowerMap,
}

impl ExperimentKind {
    pub fn is_sweep(self) -> bool {
        matches!(self, Self::SweepLedCount | Self::SweepSpacing | Self::SweepHeight)
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Convergence => "convergence",
            Self::SweepLedCount => "sweep_led_count",
            Self::SweepSpacing => "sweep_spacing",
            Self::SweepHeight => "sweep_height",
            Self::Ber => "ber",
            Self::PowerMap => "power_map",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopModeSetting {
    Absolute,
    Relative,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RoomSection {
    pub width: f64,
    pub length: f64,
    pub ceiling_height: f64,
    pub work_plane_height: f64,
}

impl Default for RoomSection {
    fn default() -> Self {
        Self {
            width: 5.0,
            length: 6.0,
            ceiling_height: 3.0,
            work_plane_height: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ArraySection {
    pub m_x: usize,
    pub m_y: usize,
    pub d_x: f64,
    pub d_y: f64,
}

impl Default for ArraySection {
    fn default() -> Self {
        Self {
            m_x: 3,
            m_y: 3,
            d_x: 0.02,
            d_y: 0.02,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChannelSection {
    pub area: f64,
    pub lambertian_order: f64,
    pub filter_gain: f64,
    pub concentrator_gain: f64,
    pub fov_deg: f64,
}

impl Default for ChannelSection {
    fn default() -> Self {
        let p = ChannelParams::default();
        Self {
            area: p.area,
            lambertian_order: p.lambertian_order,
            filter_gain: p.filter_gain,
            concentrator_gain: p.concentrator_gain,
            fov_deg: 70.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizerSection {
    pub mu: f64,
    pub epsilon: f64,
    pub max_iter: usize,
    pub stop_mode: StopModeSetting,
}

impl Default for OptimizerSection {
    fn default() -> Self {
        let o = OptimizerConfig::default();
        Self {
            mu: o.mu,
            epsilon: o.epsilon,
            max_iter: o.max_iter,
            stop_mode: StopModeSetting::Relative,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BerSection {
    pub n_users: usize,
    pub n_bits: usize,
    pub trials: usize,
    pub pilot_repetitions: usize,
    pub known_channel: bool,
    pub noise_sweep: Vec<f64>,
}

impl Default for BerSection {
    fn default() -> Self {
        Self {
            n_users: 15,
            n_bits: 100_000,
            trials: 1,
            pilot_repetitions: 1,
            known_channel: false,
            noise_sweep: Vec::new(),
        }
    }
}

fn default_q() -> usize {
    10
}

fn default_grid_spacing() -> f64 {
    0.1
}

fn default_baseline_draws() -> usize {
    1000
}

/// The configuration document as written on disk, with defaults filled in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigDocument {
    pub schema_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub kind: ExperimentKind,
    #[serde(default)]
    pub seed: u64,
    pub room: RoomSection,
    #[serde(default)]
    pub array: ArraySection,
    #[serde(default)]
    pub channel: ChannelSection,
    #[serde(default)]
    pub optimizer: OptimizerSection,
    #[serde(default = "default_q")]
    pub q: usize,
    #[serde(default = "default_grid_spacing")]
    pub grid_spacing: f64,
    /// Swept values: total LED counts (perfect squares), spacings in
    /// meters, or work-plane heights in meters, depending on `kind`.
    #[serde(default)]
    pub sweep: Vec<f64>,
    /// Optional square-array sizes for spacing and height sweeps, one curve
    /// each. Empty means the configured `array` only.
    #[serde(default)]
    pub led_counts: Vec<usize>,
    #[serde(default = "default_baseline_draws")]
    pub baseline_draws: usize,
    #[serde(default)]
    pub ber: BerSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
}

/// BER settings after validation.
#[derive(Debug, Clone, PartialEq)]
pub struct BerSettings {
    pub n_users: usize,
    pub n_bits: usize,
    pub trials: usize,
    pub pilot_repetitions: usize,
    pub known_channel: bool,
    pub noise_sweep: Vec<f64>,
}

/// Validated experiment configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub seed: u64,
    pub room: RoomScenario,
    pub array: LedArray,
    pub channel: ChannelParams,
    pub optimizer: OptimizerConfig,
    pub q: usize,
    pub grid_spacing: f64,
    pub sweep: Vec<f64>,
    pub led_counts: Vec<usize>,
    pub baseline_draws: usize,
    pub ber: BerSettings,
    pub output: Option<PathBuf>,
    document: ConfigDocument,
}

impl ExperimentConfig {
    /// The source document with defaults applied and the active seed.
    pub fn document(&self) -> &ConfigDocument {
        &self.document
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.document).expect("config document serializes")
    }

    pub fn set_seed(&mut self, seed: u64) {
        self.seed = seed;
        self.optimizer.seed = seed;
        self.document.seed = seed;
    }
}

fn invalid(field: &str, reason: impl Into<String>) -> Error {
    Error::ConfigValidation {
        field: field.to_string(),
        reason: reason.into(),
    }
}

fn require(cond: bool, field: &str, reason: &str) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(invalid(field, reason))
    }
}

fn positive(v: f64, field: &str) -> Result<()> {
    require(v.is_finite() && v > 0.0, field, &format!("must be positive (got {v})"))
}

fn non_negative(v: f64, field: &str) -> Result<()> {
    require(v.is_finite() && v >= 0.0, field, &format!("must be non-negative (got {v})"))
}

/// Side length of a square array with `m_t` elements.
pub fn square_side(m_t: usize) -> Option<usize> {
    let side = (m_t as f64).sqrt().round() as usize;
    (side >= 1 && side * side == m_t).then_some(side)
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let document: ConfigDocument = serde_json::from_str(text).map_err(|e| Error::ConfigParse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    validate(document)
}

pub fn validate(document: ConfigDocument) -> Result<ExperimentConfig> {
    let d = &document;
    require(
        d.schema_version == SCHEMA_VERSION,
        "schema_version",
        &format!("must be {SCHEMA_VERSION} (got {})", d.schema_version),
    )?;

    positive(d.room.width, "room.width")?;
    positive(d.room.length, "room.length")?;
    positive(d.room.ceiling_height, "room.ceiling_height")?;
    require(
        d.room.work_plane_height.is_finite()
            && d.room.work_plane_height >= 0.0
            && d.room.work_plane_height < d.room.ceiling_height,
        "room.work_plane_height",
        "must satisfy 0 <= work_plane_height < ceiling_height",
    )?;

    require(d.array.m_x >= 1, "array.m_x", "must be at least 1")?;
    require(d.array.m_y >= 1, "array.m_y", "must be at least 1")?;
    non_negative(d.array.d_x, "array.d_x")?;
    non_negative(d.array.d_y, "array.d_y")?;

    positive(d.channel.area, "channel.area")?;
    positive(d.channel.lambertian_order, "channel.lambertian_order")?;
    require(
        d.channel.filter_gain > 0.0 && d.channel.filter_gain <= 1.0,
        "channel.filter_gain",
        "must lie in (0, 1]",
    )?;
    positive(d.channel.concentrator_gain, "channel.concentrator_gain")?;
    require(
        d.channel.fov_deg > 0.0 && d.channel.fov_deg <= 90.0,
        "channel.fov_deg",
        "must lie in (0, 90]",
    )?;

    positive(d.optimizer.mu, "optimizer.mu")?;
    positive(d.optimizer.epsilon, "optimizer.epsilon")?;
    require(d.optimizer.max_iter >= 1, "optimizer.max_iter", "must be at least 1")?;

    require(d.q >= 1, "q", "must be at least 1")?;
    positive(d.grid_spacing, "grid_spacing")?;
    require(d.baseline_draws >= 1, "baseline_draws", "must be at least 1")?;

    if d.kind.is_sweep() {
        require(!d.sweep.is_empty(), "sweep", "must not be empty for sweep experiments")?;
    }
    for &v in &d.sweep {
        match d.kind {
            ExperimentKind::SweepLedCount => require(
                v.fract() == 0.0 && v >= 1.0 && square_side(v as usize).is_some(),
                "sweep",
                &format!("LED counts must be perfect squares (got {v})"),
            )?,
            ExperimentKind::SweepSpacing => non_negative(v, "sweep")?,
            ExperimentKind::SweepHeight => require(
                v.is_finite() && v >= 0.0 && v < d.room.ceiling_height,
                "sweep",
                &format!("heights must lie in [0, ceiling_height) (got {v})"),
            )?,
            _ => {}
        }
    }
    for &m in &d.led_counts {
        require(
            square_side(m).is_some(),
            "led_counts",
            &format!("LED counts must be perfect squares (got {m})"),
        )?;
    }

    require(d.ber.n_users >= 1, "ber.n_users", "must be at least 1")?;
    require(d.ber.n_bits >= 1, "ber.n_bits", "must be at least 1")?;
    require(d.ber.trials >= 1, "ber.trials", "must be at least 1")?;
    require(d.ber.pilot_repetitions >= 1, "ber.pilot_repetitions", "must be at least 1")?;
    for &v in &d.ber.noise_sweep {
        positive(v, "ber.noise_sweep")?;
    }

    let room = RoomScenario::new(d.room.width, d.room.length, d.room.ceiling_height, d.room.work_plane_height)?;
    let array = LedArray::new(d.array.m_x, d.array.m_y, d.array.d_x, d.array.d_y)?;
    let channel = ChannelParams {
        area: d.channel.area,
        lambertian_order: d.channel.lambertian_order,
        filter_gain: d.channel.filter_gain,
        concentrator_gain: d.channel.concentrator_gain,
        fov: d.channel.fov_deg.to_radians(),
    };
    let optimizer = OptimizerConfig {
        mu: d.optimizer.mu,
        epsilon: d.optimizer.epsilon,
        max_iter: d.optimizer.max_iter,
        stop_mode: match d.optimizer.stop_mode {
            StopModeSetting::Absolute => StopMode::Absolute,
            StopModeSetting::Relative => StopMode::Relative,
        },
        seed: d.seed,
    };
    let ber = BerSettings {
        n_users: d.ber.n_users,
        n_bits: d.ber.n_bits,
        trials: d.ber.trials,
        pilot_repetitions: d.ber.pilot_repetitions,
        known_channel: d.ber.known_channel,
        noise_sweep: if d.ber.noise_sweep.is_empty() {
            default_noise_sweep()
        } else {
            d.ber.noise_sweep.clone()
        },
    };

    Ok(ExperimentConfig {
        kind: d.kind,
        seed: d.seed,
        room,
        array,
        channel,
        optimizer,
        q: d.q,
        grid_spacing: d.grid_spacing,
        sweep: d.sweep.clone(),
        led_counts: d.led_counts.clone(),
        baseline_draws: d.baseline_draws,
        ber,
        output: d.output.as_ref().map(PathBuf::from),
        document,
    })
}
