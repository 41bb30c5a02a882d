//! TOML scenario files.
//!
//! Gains and SNRs are written in dB, angles in degrees; everything is
//! converted to linear units and radians when a [`ScenarioConfig`] is
//! resolved for one sweep point. A minimal file:
//!
//! ```toml
//! [system]
//! cells = 4
//! users = 2
//! coherence = 200
//!
//! [channel]
//! model = "exponential"
//! r = 0.5
//!
//! [sweep]
//! antennas = [32, 64, 128]
//! ```
//!
//! `[layout] kind = "default"` (the default) uses the built-in four-cell
//! geometry drawn from the seed; `kind = "explicit"` takes `beta_db` and
//! `theta_deg` tables indexed `[j][l][k]`.

use std::path::Path;

use serde::Deserialize;

use mmimo_core::detection::{Detector, ZsConfig, ZsMode};
use mmimo_core::scenario::{db_to_linear, default_geometry, random_kappa};
use mmimo_core::table::{LinkTable, UserTable};
use mmimo_core::linalg::c;
use mmimo_core::{CMatrix, CorrelationModel, ScenarioConfig};

use crate::error::{Result, SimError};
use crate::sweep::{Axis, AxisPoint};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub system: System,
    #[serde(default)]
    pub layout: Layout,
    pub channel: Channel,
    #[serde(default)]
    pub kappa: Kappa,
    #[serde(default)]
    pub detection: Detection,
    #[serde(default)]
    pub sweep: Sweep,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct System {
    pub cells: usize,
    pub users: usize,
    /// Required unless the sweep runs over the antenna count.
    pub antennas: Option<usize>,
    pub coherence: usize,
    /// Defaults to the number of users.
    pub pilot_length: Option<usize>,
    #[serde(default)]
    pub rho_tr_db: f64,
    #[serde(default)]
    pub rho_d_db: f64,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

fn default_seed() -> u64 {
    1
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Layout {
    #[default]
    Default,
    Explicit {
        beta_db: Vec<Vec<Vec<f64>>>,
        theta_deg: Vec<Vec<Vec<f64>>>,
    },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case", deny_unknown_fields)]
pub enum Channel {
    Exponential {
        r: f64,
    },
    Lognormal {
        #[serde(default)]
        sigma_c_db: f64,
    },
    Identity,
    Explicit {
        matrix: Vec<ExplicitMatrix>,
    },
}

/// One `Θ_{jlk}`, given as real and (optional) imaginary parts.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplicitMatrix {
    pub link: [usize; 3],
    pub re: Vec<Vec<f64>>,
    pub im: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum Kappa {
    /// Uniform on `(0, 2]`, drawn from the seed.
    #[default]
    Random,
    Value {
        value: f64,
    },
    /// `values[j][k]`.
    Table {
        values: Vec<Vec<f64>>,
    },
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Detection {
    pub detectors: Option<Vec<String>>,
    pub zs_mode: Option<String>,
    pub eps: Option<f64>,
    pub d_diag: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub antennas: Option<Vec<usize>>,
    pub sigma_c_db: Option<Vec<f64>>,
    pub trials: Option<u64>,
}

/// A parsed scenario file. Seed-dependent parts (default geometry, random
/// Rician factors, log-normal draws) are resolved per sweep point.
#[derive(Debug, Clone)]
pub struct Scenario {
    file: ScenarioFile,
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| SimError::io(path, e))?;
        Self::from_toml(&text).map_err(|e| match e {
            SimError::Config(msg) => SimError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let file: ScenarioFile = toml::from_str(text).map_err(|e| SimError::config(e.to_string()))?;
        let scenario = Self { file };
        scenario.detectors()?;
        scenario.zs_config()?;
        if let Some(axis) = scenario.axis()? {
            scenario.check_axis(&axis)?;
        }
        Ok(scenario)
    }

    pub fn file(&self) -> &ScenarioFile {
        &self.file
    }

    pub fn seed(&self) -> u64 {
        self.file.system.seed
    }

    pub fn trials(&self) -> Option<u64> {
        self.file.sweep.trials
    }

    /// Detectors listed in `[detection]`, all three when absent.
    pub fn detectors(&self) -> Result<Vec<Detector>> {
        match &self.file.detection.detectors {
            None => Ok(Detector::ALL.to_vec()),
            Some(names) => parse_detectors(names.iter().map(String::as_str)),
        }
    }

    pub fn zs_config(&self) -> Result<ZsConfig> {
        let d = &self.file.detection;
        let mode = match &d.zs_mode {
            None => ZsMode::default(),
            Some(m) => m.parse::<ZsMode>().map_err(SimError::config)?,
        };
        Ok(ZsConfig { mode, eps: d.eps, d_diag: d.d_diag.clone() })
    }

    /// Sweep axis of the `[sweep]` section, if any.
    pub fn axis(&self) -> Result<Option<Axis>> {
        match (&self.file.sweep.antennas, &self.file.sweep.sigma_c_db) {
            (Some(_), Some(_)) => Err(SimError::config("[sweep] takes either antennas or sigma_c_db, not both")),
            (Some(n), None) => Axis::antennas(n.clone()).map(Some),
            (None, Some(s)) => Axis::sigma_c(s.clone()).map(Some),
            (None, None) => Ok(None),
        }
    }

    /// Rejects axes this scenario cannot be evaluated on.
    pub fn check_axis(&self, axis: &Axis) -> Result<()> {
        match axis {
            Axis::SigmaC(_) => {
                if !matches!(self.file.channel, Channel::Lognormal { .. }) {
                    return Err(SimError::config("a sigma_c sweep needs the lognormal channel model"));
                }
                if self.file.system.antennas.is_none() {
                    return Err(SimError::config("a sigma_c sweep needs [system] antennas"));
                }
            }
            Axis::Antennas(ns) => {
                if let Channel::Explicit { .. } = self.file.channel {
                    if ns.len() != 1 {
                        return Err(SimError::config("explicit correlation matrices fix the antenna count"));
                    }
                }
            }
        }
        Ok(())
    }

    /// The model scenario at one sweep point.
    pub fn config(&self, point: AxisPoint, seed: u64) -> Result<ScenarioConfig> {
        let sys = &self.file.system;
        let (cells, users) = (sys.cells, sys.users);
        let antennas = match point {
            AxisPoint::Antennas(n) => n,
            AxisPoint::SigmaC(_) => sys.antennas.ok_or_else(|| SimError::config("[system] antennas is required"))?,
        };

        let (beta, theta, default_kappa) = match &self.file.layout {
            Layout::Default => {
                let g = default_geometry(cells, users, seed)?;
                (g.beta, g.theta, Some(g.kappa))
            }
            Layout::Explicit { beta_db, theta_deg } => {
                let beta = link_table(beta_db, cells, users, "beta_db")?.map(|b| db_to_linear(*b));
                let theta = link_table(theta_deg, cells, users, "theta_deg")?.map(|t| t.to_radians());
                (beta, theta, None)
            }
        };
        let kappa = match &self.file.kappa {
            Kappa::Random => default_kappa.unwrap_or_else(|| random_kappa(cells, users, seed)),
            Kappa::Value { value } => UserTable::filled(cells, users, *value),
            Kappa::Table { values } => user_table(values, cells, users, "kappa values")?,
        };
        let correlation = match (&self.file.channel, point) {
            (Channel::Lognormal { .. }, AxisPoint::SigmaC(s)) => CorrelationModel::LognormalDiagonal { sigma_c: s },
            (_, AxisPoint::SigmaC(_)) => {
                return Err(SimError::config("a sigma_c sweep needs the lognormal channel model"));
            }
            (Channel::Exponential { r }, _) => CorrelationModel::Exponential { r: *r },
            (Channel::Lognormal { sigma_c_db }, _) => CorrelationModel::LognormalDiagonal { sigma_c: *sigma_c_db },
            (Channel::Identity, _) => CorrelationModel::Identity,
            (Channel::Explicit { matrix }, _) => {
                CorrelationModel::Explicit(explicit_table(matrix, cells, users, antennas)?)
            }
        };

        let config = ScenarioConfig {
            cells,
            users,
            antennas,
            coherence: sys.coherence,
            pilot_length: sys.pilot_length.unwrap_or(users),
            rho_tr: db_to_linear(sys.rho_tr_db),
            rho_d: db_to_linear(sys.rho_d_db),
            beta,
            kappa,
            theta,
            correlation,
            base_seed: seed,
        };
        config.validate()?;
        Ok(config)
    }
}

pub fn parse_detectors<'a>(names: impl IntoIterator<Item = &'a str>) -> Result<Vec<Detector>> {
    let mut out: Vec<Detector> = Vec::new();
    for name in names {
        let d = name.trim().parse::<Detector>().map_err(SimError::config)?;
        if !out.contains(&d) {
            out.push(d);
        }
    }
    if out.is_empty() {
        return Err(SimError::config("detector list is empty"));
    }
    out.sort();
    Ok(out)
}

fn link_table(v: &[Vec<Vec<f64>>], cells: usize, users: usize, what: &str) -> Result<LinkTable<f64>> {
    let shape_ok = v.len() == cells && v.iter().all(|row| row.len() == cells && row.iter().all(|u| u.len() == users));
    if !shape_ok {
        return Err(SimError::config(format!("{what} must be an L×L×K array ({cells}×{cells}×{users})")));
    }
    Ok(LinkTable::from_fn(cells, users, |j, l, k| v[j][l][k]))
}

fn user_table(v: &[Vec<f64>], cells: usize, users: usize, what: &str) -> Result<UserTable<f64>> {
    if v.len() != cells || v.iter().any(|row| row.len() != users) {
        return Err(SimError::config(format!("{what} must be an L×K array ({cells}×{users})")));
    }
    Ok(UserTable::from_fn(cells, users, |j, k| v[j][k]))
}

fn explicit_table(list: &[ExplicitMatrix], cells: usize, users: usize, n: usize) -> Result<LinkTable<CMatrix>> {
    let mut slots: Vec<Option<CMatrix>> = vec![None; cells * cells * users];
    for m in list {
        let [j, l, k] = m.link;
        if j >= cells || l >= cells || k >= users {
            return Err(SimError::config(format!("correlation matrix link {:?} is out of range", m.link)));
        }
        let square = |a: &Vec<Vec<f64>>| a.len() == n && a.iter().all(|r| r.len() == n);
        if !square(&m.re) || !m.im.as_ref().is_none_or(square) {
            return Err(SimError::config(format!("correlation matrix {:?} must be {n}×{n}", m.link)));
        }
        let mat = CMatrix::from_fn(n, n, |a, b| c(m.re[a][b], m.im.as_ref().map_or(0.0, |im| im[a][b])));
        let slot = &mut slots[(j * cells + l) * users + k];
        if slot.replace(mat).is_some() {
            return Err(SimError::config(format!("correlation matrix {:?} is given twice", m.link)));
        }
    }
    let data = slots
        .into_iter()
        .enumerate()
        .map(|(i, m)| {
            m.ok_or_else(|| {
                let (jl, k) = (i / users, i % users);
                SimError::config(format!("missing correlation matrix for link [{}, {}, {k}]", jl / cells, jl % cells))
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LinkTable::from_vec(cells, users, data).expect("L×L×K entries"))
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL: &str = r#"
[system]
cells = 4
users = 2
coherence = 200
seed = 5

[channel]
model = "exponential"
r = 0.5

[sweep]
antennas = [16, 8]
trials = 10
"#;

    #[test]
    fn default_layout_matches_the_core_constructor() {
        let s = Scenario::from_toml(SMALL).unwrap();
        assert_eq!(s.axis().unwrap(), Some(Axis::Antennas(vec![8, 16])));
        let cfg = s.config(AxisPoint::Antennas(16), 5).unwrap();
        assert_eq!(cfg, ScenarioConfig::default_exponential(16, 5).unwrap());
        assert_eq!(s.detectors().unwrap(), Detector::ALL.to_vec());
        assert_eq!(s.trials(), Some(10));
    }

    #[test]
    fn explicit_layout_and_matrices() {
        let text = r#"
[system]
cells = 1
users = 1
antennas = 2
coherence = 10
rho_d_db = 10.0

[layout]
kind = "explicit"
beta_db = [[[0.0]]]
theta_deg = [[[30.0]]]

[kappa]
mode = "value"
value = 0.0

[channel]
model = "explicit"
[[channel.matrix]]
link = [0, 0, 0]
re = [[1.0, 0.5], [0.5, 1.0]]
im = [[0.0, 0.1], [-0.1, 0.0]]
"#;
        let s = Scenario::from_toml(text).unwrap();
        let cfg = s.config(AxisPoint::Antennas(2), 1).unwrap();
        assert!((cfg.rho_d - 10.0).abs() < 1e-12);
        assert!((cfg.theta.get(0, 0, 0) - 30f64.to_radians()).abs() < 1e-15);
        let CorrelationModel::Explicit(t) = &cfg.correlation else { panic!() };
        assert_eq!(t.get(0, 0, 0)[(0, 1)], c(0.5, 0.1));
        assert!(s.config(AxisPoint::Antennas(3), 1).is_err());
    }

    #[test]
    fn rejects_bad_files() {
        let cases = [
            SMALL.replace("r = 0.5", "r = 0.5\nbogus = 1"),
            SMALL.replace("antennas = [16, 8]", "antennas = []"),
            SMALL.replace("antennas = [16, 8]", "sigma_c_db = [1.0]"),
            SMALL.replace("[sweep]", "[detection]\ndetectors = [\"zf\"]\n[sweep]"),
            SMALL.replace("[sweep]", "[detection]\nzs_mode = \"nope\"\n[sweep]"),
        ];
        for text in &cases {
            let err = Scenario::from_toml(text).unwrap_err();
            assert_eq!(err.exit_code(), 1, "{text}: {err}");
        }
        let wrong_shape = SMALL.replace("cells = 4", "cells = 3");
        let s = Scenario::from_toml(&wrong_shape).unwrap();
        assert_eq!(s.config(AxisPoint::Antennas(8), 1).unwrap_err().exit_code(), 1);
    }

    #[test]
    fn sigma_sweep_overrides_the_file_value() {
        let text = SMALL
            .replace("model = \"exponential\"\nr = 0.5", "model = \"lognormal\"\nsigma_c_db = 1.0")
            .replace("antennas = [16, 8]", "sigma_c_db = [4.0]")
            .replace("seed = 5", "seed = 5\nantennas = 12");
        let s = Scenario::from_toml(&text).unwrap();
        let cfg = s.config(AxisPoint::SigmaC(4.0), 5).unwrap();
        assert_eq!(cfg.correlation, CorrelationModel::LognormalDiagonal { sigma_c: 4.0 });
        assert_eq!(cfg.antennas, 12);
    }

    #[test]
    fn detector_lists_are_deduplicated_and_ordered() {
        assert_eq!(
            parse_detectors(["mmmse", "mrc", "mrc"]).unwrap(),
            vec![Detector::Mrc, Detector::Mmmse]
        );
        assert!(parse_detectors([]).is_err());
    }
}
