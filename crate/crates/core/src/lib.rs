//! Multi-cell massive MIMO uplink under correlated Rician fading.
//!
//! The crate covers the whole per-realization pipeline of a cellular uplink
//! with pilot reuse: second-order channel statistics, channel sampling,
//! MMSE channel estimation with pilot contamination, MRC / single-cell MMSE /
//! multi-cell MMSE combining, SINR evaluation, and the closed-form
//! large-antenna SINR approximations for each combiner.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the command
//! line front end and the parallel Monte Carlo driver live in `mmimo-sim`.
//!
//! Indices are zero-based throughout: `j` is the serving base station,
//! `l` the cell a user belongs to and `k` the user (equivalently, the pilot)
//! inside its cell.

#![no_std]

extern crate alloc;

pub mod asymptotics;
pub mod detection;
pub mod error;
pub mod estimation;
pub mod linalg;
pub mod metrics;
pub mod network;
pub mod rng;
pub mod sampling;
pub mod scenario;
pub mod stats;
pub mod table;

#[cfg(any(test, feature = "oracle"))]
pub mod oracle;

pub use network::Network;
pub use error::{Error, Result};
pub use linalg::{CMatrix, CVector};

pub use scenario::{CorrelationModel, ScenarioConfig};
