//! Sweep runners.
//!
//! Sweep points run concurrently on the rayon pool, and so do the trials of
//! each point. Trial outcomes are collected in trial order before any
//! reduction, which keeps every floating-point sum independent of the
//! scheduling.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use mmimo_core::asymptotics::{analyze, check_assumption2, AsymptoticReport, DEFAULT_SINR_CAP};
use mmimo_core::detection::{Detector, ZsConfig};
use mmimo_core::metrics::{aggregate_rates, run_trial, TrialOutcome, UserRate};
use mmimo_core::stats::ChannelStatistics;
use mmimo_core::{CorrelationModel, Error, Network};

use crate::config::Scenario;
use crate::error::{Result, SimError};

/// Default number of Monte Carlo trials per sweep point.
pub const DEFAULT_TRIALS: u64 = 1000;

/// Tolerance of the Gram-Schmidt basis in the Assumption-2 check.
const ASSUMPTION2_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum Axis {
    Antennas(Vec<usize>),
    /// Log-normal spread `σ_c` in dB.
    SigmaC(Vec<f64>),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AxisPoint {
    Antennas(usize),
    SigmaC(f64),
}

impl Axis {
    /// Sorted, deduplicated antenna counts.
    pub fn antennas(mut n: Vec<usize>) -> Result<Self> {
        if n.is_empty() {
            return Err(SimError::config("sweep axis is empty"));
        }
        if n.contains(&0) {
            return Err(SimError::config("antenna counts must be ≥ 1"));
        }
        n.sort_unstable();
        n.dedup();
        Ok(Axis::Antennas(n))
    }

    /// Sorted, deduplicated `σ_c` values in dB.
    pub fn sigma_c(mut s: Vec<f64>) -> Result<Self> {
        if s.is_empty() {
            return Err(SimError::config("sweep axis is empty"));
        }
        if let Some(bad) = s.iter().find(|x| !(x.is_finite() && **x >= 0.0)) {
            return Err(SimError::config(format!("sigma_c must be ≥ 0 (got {bad})")));
        }
        s.sort_by(f64::total_cmp);
        s.dedup();
        Ok(Axis::SigmaC(s))
    }

    pub fn points(&self) -> Vec<AxisPoint> {
        match self {
            Axis::Antennas(n) => n.iter().map(|&n| AxisPoint::Antennas(n)).collect(),
            Axis::SigmaC(s) => s.iter().map(|&s| AxisPoint::SigmaC(s)).collect(),
        }
    }
}

/// `n=32,64,128` or `sigma=0,2,4`.
impl FromStr for Axis {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self> {
        let (key, values) =
            s.split_once('=').ok_or_else(|| SimError::config(format!("bad sweep '{s}' (expected n=... or sigma=...)")))?;
        let items = values.split(',').map(str::trim).filter(|v| !v.is_empty());
        match key.trim() {
            "n" | "antennas" => {
                let n = items
                    .map(|v| v.parse::<usize>().map_err(|_| SimError::config(format!("bad antenna count '{v}'"))))
                    .collect::<Result<Vec<_>>>()?;
                Axis::antennas(n)
            }
            "sigma" | "sigma_c" => {
                let x = items
                    .map(|v| v.parse::<f64>().map_err(|_| SimError::config(format!("bad sigma_c '{v}'"))))
                    .collect::<Result<Vec<_>>>()?;
                Axis::sigma_c(x)
            }
            other => Err(SimError::config(format!("unknown sweep axis '{other}' (expected n or sigma)"))),
        }
    }
}

impl AxisPoint {
    fn cmp_key(&self, other: &Self) -> Ordering {
        match (self, other) {
            (AxisPoint::Antennas(a), AxisPoint::Antennas(b)) => a.cmp(b),
            (AxisPoint::SigmaC(a), AxisPoint::SigmaC(b)) => a.total_cmp(b),
            (AxisPoint::Antennas(_), AxisPoint::SigmaC(_)) => Ordering::Less,
            (AxisPoint::SigmaC(_), AxisPoint::Antennas(_)) => Ordering::Greater,
        }
    }
}

impl fmt::Display for AxisPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AxisPoint::Antennas(n) => write!(f, "{n}"),
            AxisPoint::SigmaC(s) => write!(f, "{s}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RateUnit {
    #[default]
    Nats,
    Bits,
}

impl RateUnit {
    /// Converts a rate in nats.
    pub fn convert(self, nats: f64) -> f64 {
        match self {
            RateUnit::Nats => nats,
            RateUnit::Bits => nats / std::f64::consts::LN_2,
        }
    }
}

impl FromStr for RateUnit {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nats" => Ok(RateUnit::Nats),
            "bits" => Ok(RateUnit::Bits),
            other => Err(SimError::config(format!("unknown unit '{other}' (expected nats or bits)"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub scenario: Scenario,
    pub axis: Axis,
    pub detectors: Vec<Detector>,
    pub zs: ZsConfig,
    /// 0 skips the Monte Carlo part.
    pub trials: u64,
    pub seed: u64,
    pub unit: RateUnit,
}

impl SweepSpec {
    /// Everything as given in the scenario file. Without a `[sweep]` axis
    /// the single point `[system] antennas` is used.
    pub fn from_scenario(scenario: Scenario) -> Result<Self> {
        let axis = match scenario.axis()? {
            Some(axis) => axis,
            None => match scenario.file().system.antennas {
                Some(n) => Axis::antennas(vec![n])?,
                None => return Err(SimError::config("no sweep axis and no [system] antennas")),
            },
        };
        Ok(Self {
            axis,
            detectors: scenario.detectors()?,
            zs: scenario.zs_config()?,
            trials: scenario.trials().unwrap_or(DEFAULT_TRIALS),
            seed: scenario.seed(),
            unit: RateUnit::Nats,
            scenario,
        })
    }

    pub fn network(&self, point: AxisPoint) -> Result<Network> {
        let config = self.scenario.config(point, self.seed)?;
        Ok(Network::build(&config, &self.zs)?)
    }
}

/// One CSV line. Rates are stored in nats.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub axis: AxisPoint,
    pub detector: Detector,
    pub cell: usize,
    pub user: usize,
    pub rate_mean: Option<f64>,
    pub rate_ci95: Option<f64>,
    pub rate_asymptotic: Option<f64>,
    pub trials: u64,
    pub seed: u64,
    pub warnings: Vec<String>,
}

fn row_order(a: &Row, b: &Row) -> Ordering {
    a.axis
        .cmp_key(&b.axis)
        .then(a.detector.cmp(&b.detector))
        .then(a.cell.cmp(&b.cell))
        .then(a.user.cmp(&b.user))
}

/// Monte Carlo estimate of every user's rate, trials spread over the pool.
pub fn monte_carlo(net: &Network, detectors: &[Detector], trials: u64) -> Result<Vec<UserRate>> {
    if trials == 0 {
        return Err(SimError::config("trials must be ≥ 1"));
    }
    let outcomes: Vec<TrialOutcome> = (0..trials)
        .into_par_iter()
        .map(|t| run_trial(net, detectors, t))
        .collect::<std::result::Result<_, Error>>()?;
    Ok(aggregate_rates(net, detectors, &outcomes))
}

/// Warning attached to a row whose approximation was refused or capped.
fn warnings(report: &AsymptoticReport, detector: Detector, j: usize, k: usize, capped: bool) -> Vec<String> {
    let mut out = Vec::new();
    if detector == Detector::Mmmse && report.users.get(j, k).mmmse.is_err() {
        // Refusal means the margin is zero to working precision.
        out.push("assumption2_margin=0".to_string());
    }
    if capped {
        out.push(format!("sinr_capped={DEFAULT_SINR_CAP:e}"));
    }
    out
}

fn run_point(spec: &SweepSpec, point: AxisPoint) -> Result<Vec<Row>> {
    let net = spec.network(point)?;
    let report = analyze(&net)?;
    let empirical = match spec.trials {
        0 => Vec::new(),
        t => monte_carlo(&net, &spec.detectors, t)?,
    };
    let mut rows = Vec::new();
    for &detector in &spec.detectors {
        for j in 0..net.cells() {
            for k in 0..net.users() {
                let asym = report.rate(detector, j, k, DEFAULT_SINR_CAP);
                let mc = empirical.iter().find(|r| r.detector == detector && r.cell == j && r.user == k);
                rows.push(Row {
                    axis: point,
                    detector,
                    cell: j,
                    user: k,
                    rate_mean: mc.map(|r| r.rate.mean),
                    rate_ci95: mc.map(|r| r.rate.ci95),
                    rate_asymptotic: asym.map(|(r, _)| r),
                    trials: spec.trials,
                    seed: spec.seed,
                    warnings: warnings(&report, detector, j, k, asym.is_some_and(|(_, c)| c)),
                });
            }
        }
    }
    Ok(rows)
}

/// Runs every sweep point; rows come back sorted by
/// (axis, detector, cell, user).
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<Row>> {
    spec.scenario.check_axis(&spec.axis)?;
    if spec.detectors.is_empty() {
        return Err(SimError::config("detector list is empty"));
    }
    let per_point: Vec<Vec<Row>> =
        spec.axis.points().into_par_iter().map(|p| run_point(spec, p)).collect::<Result<_>>()?;
    let mut rows: Vec<Row> = per_point.into_iter().flatten().collect();
    rows.sort_by(row_order);
    Ok(rows)
}

/// Antenna sweep under exponential correlation.
pub fn run_scenario1(spec: &SweepSpec) -> Result<Vec<Row>> {
    if !matches!(spec.axis, Axis::Antennas(_)) {
        return Err(SimError::config("scenario I sweeps the antenna count"));
    }
    let probe = spec.scenario.config(spec.axis.points()[0], spec.seed)?;
    if !matches!(probe.correlation, CorrelationModel::Exponential { .. }) {
        return Err(SimError::config("scenario I needs the exponential channel model"));
    }
    run_sweep(spec)
}

/// `σ_c` sweep under log-normal diagonal correlation at fixed `N`.
pub fn run_scenario2(spec: &SweepSpec) -> Result<Vec<Row>> {
    if !matches!(spec.axis, Axis::SigmaC(_)) {
        return Err(SimError::config("scenario II sweeps sigma_c"));
    }
    run_sweep(spec)
}

/// Assumption-2 margins of one user.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginRow {
    pub axis: AxisPoint,
    pub cell: usize,
    pub user: usize,
    pub margin: f64,
    pub relative_margin: f64,
    /// Whether the M-MMSE approximation was evaluated (or refused).
    pub mmmse_available: bool,
}

pub fn assumption2_sweep(spec: &SweepSpec) -> Result<Vec<MarginRow>> {
    spec.scenario.check_axis(&spec.axis)?;
    let per_point: Vec<Vec<MarginRow>> = spec
        .axis
        .points()
        .into_par_iter()
        .map(|point| {
            let net = spec.network(point)?;
            let stats: &ChannelStatistics = net.stats();
            let report = analyze(&net)?;
            let mut rows = Vec::new();
            for j in 0..net.cells() {
                for k in 0..net.users() {
                    let a2 = check_assumption2(stats, j, k, ASSUMPTION2_TOL);
                    rows.push(MarginRow {
                        axis: point,
                        cell: j,
                        user: k,
                        margin: a2.margin(),
                        relative_margin: a2.relative_margin(),
                        mmmse_available: report.users.get(j, k).mmmse.is_ok(),
                    });
                }
            }
            Ok(rows)
        })
        .collect::<Result<_>>()?;
    Ok(per_point.into_iter().flatten().collect())
}
