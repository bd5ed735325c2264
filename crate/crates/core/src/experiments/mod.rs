//! Configuration-driven experiment runner.

mod config;
mod runner;

pub use config::{
    default_noise_sweep, parse_config, square_side, validate, ArraySection, BerSection, BerSettings, ChannelSection,
    ConfigDocument, ExperimentConfig, ExperimentKind, OptimizerSection, RoomSection, StopModeSetting, SCHEMA_VERSION,
};
pub use runner::{
    run, run_ber, run_convergence, run_power_map, run_sweep, sibling_path, ExperimentResult, Metadata,
};
