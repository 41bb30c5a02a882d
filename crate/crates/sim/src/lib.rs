//! File formats, parameter sweeps and the command line front end for
//! `mmimo-core`.
//!
//! A sweep loads a TOML scenario, builds one [`mmimo_core::Network`] per
//! sweep point, runs the Monte Carlo trials on the rayon pool and writes one
//! CSV row per (point, detector, cell, user). Trials are reduced in trial
//! order, so the output does not depend on the number of worker threads.

pub mod config;
pub mod error;
pub mod output;
pub mod sweep;

pub use config::Scenario;
pub use error::SimError;
pub use sweep::{Axis, AxisPoint, RateUnit, Row, SweepSpec};
