//! Omnidirectional precoding for multi-user MIMO visible light communication.
//!
//! An LED array on the ceiling broadcasts public information to every
//! possible user location on a work plane. The precoder `P` (one row per
//! LED, one column per symbol stream) is chosen to maximize the average
//! received mean power over a sampled grid of locations, subject to every
//! LED transmitting the same mean power (unit-norm rows of `P`).
//!
//! Module map:
//!
//! * [`geometry`]: room, LED array layout, work-plane sampling grid.
//! * [`channel`]: Lambertian line-of-sight gains and the channel matrix.
//! * [`precoder`]: projected-gradient design on the unit-row-norm set and
//!   random baseline precoders.
//! * [`metrics`]: ARMP, classical baseline, achievable rate, power maps.
//! * [`link_sim`]: Monte Carlo OOK bit-error-rate simulation.
//! * [`experiments`]: JSON-configured experiment runner used by the CLI.

pub mod channel;
pub mod csv_out;
mod error;
pub mod experiments;
pub mod geometry;
pub mod link_sim;
pub mod metrics;
pub mod precoder;
pub mod rng;

pub use error::{Error, Result};
