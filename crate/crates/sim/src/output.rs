//! CSV output.
//!
//! Rate columns:
//!
//! | column | meaning |
//! |---|---|
//! | `axis` | antenna count or `σ_c` in dB, depending on the sweep |
//! | `rate_mean`, `rate_ci95` | Monte Carlo mean and 95% half-width; empty when `trials = 0` |
//! | `rate_asymptotic` | large-antenna approximation; empty when refused |
//! | `warning` | `;`-separated flags such as `assumption2_margin=0` |
//!
//! Floats use the shortest representation that round-trips.

use std::io::Write;

use crate::error::{Result, SimError};
use crate::sweep::{MarginRow, RateUnit, Row};

pub const RATE_HEADER: [&str; 10] =
    ["axis", "detector", "cell", "user", "rate_mean", "rate_ci95", "rate_asymptotic", "trials", "seed", "warning"];

pub const MARGIN_HEADER: [&str; 6] = ["axis", "cell", "user", "margin", "relative_margin", "mmmse_asymptotic"];

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

fn csv_err(e: csv::Error) -> SimError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => SimError::Io { path: "<csv>".into(), source: io },
        other => SimError::config(format!("csv: {other:?}")),
    }
}

pub fn write_rates<W: Write>(rows: &[Row], unit: RateUnit, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RATE_HEADER).map_err(csv_err)?;
    for r in rows {
        w.write_record([
            r.axis.to_string(),
            r.detector.to_string(),
            r.cell.to_string(),
            r.user.to_string(),
            opt(r.rate_mean.map(|v| unit.convert(v))),
            opt(r.rate_ci95.map(|v| unit.convert(v))),
            opt(r.rate_asymptotic.map(|v| unit.convert(v))),
            r.trials.to_string(),
            r.seed.to_string(),
            r.warnings.join(";"),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| SimError::Io { path: "<csv>".into(), source: e })
}

pub fn write_margins<W: Write>(rows: &[MarginRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(MARGIN_HEADER).map_err(csv_err)?;
    for r in rows {
        w.write_record([
            r.axis.to_string(),
            r.cell.to_string(),
            r.user.to_string(),
            r.margin.to_string(),
            r.relative_margin.to_string(),
            if r.mmmse_available { "ok" } else { "refused" }.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| SimError::Io { path: "<csv>".into(), source: e })
}
