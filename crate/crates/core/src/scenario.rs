//! Scenario parameters and the geometry-derived primitives built from them:
//! correlation matrices, LoS steering vectors and the default four-cell
//! layout.

#[allow(unused_imports)]
use num_traits::Float;
use alloc::format;
use core::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::linalg::{c, psd_sqrt, CMatrix, CVector, ZERO};
use crate::rng::{Purpose, Stream, StreamKey};
use crate::table::{LinkTable, UserTable};

/// How the per-link correlation matrices `Θ_{jlk}` are generated.
#[derive(Debug, Clone, PartialEq)]
pub enum CorrelationModel {
    /// `[Θ]_{mn} = r^{|m−n|} e^{i(m−n)θ_{jlk}}`.
    Exponential { r: f64 },
    /// `Θ = diag(10^{f_i/10})`, `f_i ~ Normal(0, σ_c²)` drawn independently
    /// per link from the scenario seed.
    LognormalDiagonal { sigma_c: f64 },
    /// `Θ = I`.
    Identity,
    /// One `N×N` matrix per link.
    Explicit(LinkTable<CMatrix>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    /// Number of cells `L`.
    pub cells: usize,
    /// Users per cell `K`.
    pub users: usize,
    /// Base-station antennas `N`.
    pub antennas: usize,
    /// Coherence block length `T_c` in symbols.
    pub coherence: usize,
    /// Pilot length `τ` in symbols.
    pub pilot_length: usize,
    /// Training SNR, linear.
    pub rho_tr: f64,
    /// Data SNR, linear.
    pub rho_d: f64,
    /// Large-scale gains `β_{jlk}`, linear.
    pub beta: LinkTable<f64>,
    /// Rician factors `κ_{jk}` of the intra-cell links.
    pub kappa: UserTable<f64>,
    /// Angles of arrival `θ_{jlk}` in radians.
    pub theta: LinkTable<f64>,
    pub correlation: CorrelationModel,
    pub base_seed: u64,
}

impl ScenarioConfig {
    /// Checks every model invariant, naming the first one that fails.
    pub fn validate(&self) -> Result<()> {
        let (l, k, n) = (self.cells, self.users, self.antennas);
        if l == 0 {
            return Err(Error::validation("L must be ≥ 1"));
        }
        if k == 0 {
            return Err(Error::validation("K must be ≥ 1"));
        }
        if n == 0 {
            return Err(Error::validation("N must be ≥ 1"));
        }
        if self.pilot_length < k {
            return Err(Error::validation(format!(
                "tau < K: pilot length {} cannot hold {} orthogonal pilots",
                self.pilot_length, k
            )));
        }
        if self.coherence <= self.pilot_length {
            return Err(Error::validation(format!(
                "T_c must exceed tau (T_c={}, tau={})",
                self.coherence, self.pilot_length
            )));
        }
        if !(self.rho_tr > 0.0 && self.rho_tr.is_finite()) {
            return Err(Error::validation("rho_tr must be > 0"));
        }
        if !(self.rho_d > 0.0 && self.rho_d.is_finite()) {
            return Err(Error::validation("rho_d must be > 0"));
        }
        if self.beta.cells() != l || self.beta.users() != k {
            return Err(Error::validation("beta table must be L×L×K"));
        }
        if self.theta.cells() != l || self.theta.users() != k {
            return Err(Error::validation("theta table must be L×L×K"));
        }
        if self.kappa.cells() != l || self.kappa.users() != k {
            return Err(Error::validation("kappa table must be L×K"));
        }
        if let Some(b) = self.beta.iter().find(|b| !(**b > 0.0 && b.is_finite())) {
            return Err(Error::validation(format!("beta must be > 0 (got {b})")));
        }
        if let Some(x) = self.kappa.iter().find(|x| !(**x >= 0.0 && x.is_finite())) {
            return Err(Error::validation(format!("kappa must be ≥ 0 (got {x})")));
        }
        if self.theta.iter().any(|t| !t.is_finite()) {
            return Err(Error::validation("theta must be finite"));
        }
        match &self.correlation {
            CorrelationModel::Exponential { r } => {
                if !(*r >= 0.0 && *r < 1.0) {
                    return Err(Error::validation(format!("r must lie in [0, 1) (got {r})")));
                }
            }
            CorrelationModel::LognormalDiagonal { sigma_c } => {
                if !(*sigma_c >= 0.0 && sigma_c.is_finite()) {
                    return Err(Error::validation(format!("sigma_c must be ≥ 0 (got {sigma_c})")));
                }
            }
            CorrelationModel::Identity => {}
            CorrelationModel::Explicit(table) => {
                if table.cells() != l || table.users() != k {
                    return Err(Error::validation("explicit correlation table must be L×L×K"));
                }
                for m in table.iter() {
                    if m.nrows() != n || m.ncols() != n {
                        return Err(Error::validation(format!(
                            "explicit correlation matrices must be {n}×{n}"
                        )));
                    }
                    let scale = m.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1.0);
                    let asym = (m - m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
                    if asym > 1e-9 * scale {
                        return Err(Error::validation("explicit correlation matrices must be Hermitian"));
                    }
                }
            }
        }
        Ok(())
    }

    /// Same scenario with a different antenna count.
    pub fn with_antennas(&self, antennas: usize) -> Self {
        Self { antennas, ..self.clone() }
    }

    /// Same scenario with every Rician factor set to `kappa`.
    pub fn with_uniform_kappa(&self, kappa: f64) -> Self {
        Self { kappa: UserTable::filled(self.cells, self.users, kappa), ..self.clone() }
    }

    /// Correlation matrix `Θ_{jlk}` under the configured model.
    pub fn correlation_matrix(&self, j: usize, l: usize, k: usize) -> CMatrix {
        let n = self.antennas;
        match &self.correlation {
            CorrelationModel::Exponential { r } => build_exponential_correlation(*r, *self.theta.get(j, l, k), n),
            CorrelationModel::LognormalDiagonal { sigma_c } => {
                let mut stream = StreamKey::new(self.base_seed, Purpose::Correlation).link(j, l, k).stream();
                build_lognormal_diag_correlation(*sigma_c, n, &mut stream)
            }
            CorrelationModel::Identity => CMatrix::identity(n, n),
            CorrelationModel::Explicit(table) => table.get(j, l, k).clone(),
        }
    }

    /// Every `Θ_{jlk}` together with its principal square root.
    ///
    /// Exponential matrices are unitary diagonal rotations of the `θ = 0`
    /// matrix, `Θ(θ) = D Θ(0) Dᴴ` with `D = diag(e^{inθ})`, so a single
    /// eigendecomposition serves every link.
    pub fn correlation_tables(&self) -> (LinkTable<CMatrix>, LinkTable<CMatrix>) {
        let (cells, users, n) = (self.cells, self.users, self.antennas);
        let theta = LinkTable::from_fn(cells, users, |j, l, k| self.correlation_matrix(j, l, k));
        let roots = match &self.correlation {
            CorrelationModel::Exponential { r } => {
                let base = psd_sqrt(&build_exponential_correlation(*r, 0.0, n));
                LinkTable::from_fn(cells, users, |j, l, k| {
                    let angle = *self.theta.get(j, l, k);
                    let d: alloc::vec::Vec<_> = (0..n).map(|i| c((i as f64 * angle).cos(), (i as f64 * angle).sin())).collect();
                    CMatrix::from_fn(n, n, |a, b| d[a] * base[(a, b)] * d[b].conj())
                })
            }
            _ => theta.map(psd_sqrt),
        };
        (theta, roots)
    }

    /// LoS steering vector `z̄_{jk}` of an intra-cell link.
    pub fn steering(&self, j: usize, k: usize) -> CVector {
        build_los_steering(*self.theta.get(j, j, k), self.antennas)
    }

    /// Fraction of the coherence block spent on data, `1 − τ/T_c`.
    pub fn data_fraction(&self) -> f64 {
        1.0 - self.pilot_length as f64 / self.coherence as f64
    }

    /// Four cells with two cell-edge users each, exponential correlation
    /// with `r = 0.5`, `T_c = 200`, `τ = K` and SNRs folded into `β`.
    pub fn default_exponential(antennas: usize, base_seed: u64) -> Result<Self> {
        Self::default_layout(antennas, base_seed, CorrelationModel::Exponential { r: 0.5 })
    }

    /// The default layout with log-normal diagonal correlation.
    pub fn default_lognormal(antennas: usize, sigma_c: f64, base_seed: u64) -> Result<Self> {
        Self::default_layout(antennas, base_seed, CorrelationModel::LognormalDiagonal { sigma_c })
    }

    fn default_layout(antennas: usize, base_seed: u64, correlation: CorrelationModel) -> Result<Self> {
        let geometry = default_geometry(4, 2, base_seed)?;
        let config = Self {
            cells: 4,
            users: 2,
            antennas,
            coherence: 200,
            pilot_length: 2,
            rho_tr: 1.0,
            rho_d: 1.0,
            beta: geometry.beta,
            kappa: geometry.kappa,
            theta: geometry.theta,
            correlation,
            base_seed,
        };
        config.validate()?;
        Ok(config)
    }
}

/// Exponential correlation model, `[Θ]_{mn} = r^{|m−n|} e^{i(m−n)θ}`.
pub fn build_exponential_correlation(r: f64, theta: f64, n: usize) -> CMatrix {
    CMatrix::from_fn(n, n, |m, p| {
        if m == p {
            return c(1.0, 0.0);
        }
        let d = m as f64 - p as f64;
        let mag = r.powi((m as i64 - p as i64).unsigned_abs() as i32);
        if mag == 0.0 {
            return ZERO;
        }
        let phase = d * theta;
        c(mag * phase.cos(), mag * phase.sin())
    })
}

/// Diagonal correlation with i.i.d. log-normal gains `10^{f_i/10}`,
/// `f_i ~ Normal(0, σ_c²)` in dB.
pub fn build_lognormal_diag_correlation(sigma_c: f64, n: usize, stream: &mut Stream) -> CMatrix {
    let mut diag = CVector::from_element(n, c(1.0, 0.0));
    if sigma_c > 0.0 {
        let normal = Normal::new(0.0, sigma_c).expect("sigma_c is finite and positive");
        for d in diag.iter_mut() {
            let f: f64 = normal.sample(stream);
            *d = c(10f64.powf(f / 10.0), 0.0);
        }
    }
    CMatrix::from_diagonal(&diag)
}

/// Uniform linear array response `[z̄]_n = e^{−i n π sin θ}`, `n = 0..N`.
pub fn build_los_steering(theta: f64, n: usize) -> CVector {
    let s = PI * theta.sin();
    CVector::from_fn(n, |i, _| {
        if i == 0 {
            return c(1.0, 0.0);
        }
        let phase = -(i as f64) * s;
        c(phase.cos(), phase.sin())
    })
}

/// Large-scale tables of the built-in layout.
#[derive(Debug, Clone, PartialEq)]
pub struct DefaultGeometry {
    pub beta: LinkTable<f64>,
    pub theta: LinkTable<f64>,
    pub kappa: UserTable<f64>,
}

/// Intra-cell SNR of the default layout, dB.
pub const INTRA_CELL_SNR_DB: f64 = -6.0;
/// Strongest and weakest inter-cell SNRs of the default layout, dB.
pub const INTER_CELL_SNR_DB: (f64, f64) = (-6.3, -11.5);
/// Users are drawn in a sector of this half-width around broadside.
pub const SECTOR_HALF_WIDTH_DEG: f64 = 30.0;
/// Same-pilot users of other cells stay within this offset of the served user.
pub const PILOT_GROUP_SPREAD_DEG: f64 = 2.0;
/// Rician factors are drawn uniformly from `(0, KAPPA_MAX]`.
pub const KAPPA_MAX: f64 = 2.0;

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Rician factors drawn uniformly from `(0, KAPPA_MAX]`, one stream per user.
pub fn random_kappa(cells: usize, users: usize, base_seed: u64) -> UserTable<f64> {
    UserTable::from_fn(cells, users, |j, k| {
        let mut s = StreamKey::new(base_seed, Purpose::Kappa).link(j, j, k).stream();
        let u: f64 = s.random();
        KAPPA_MAX * (1.0 - u)
    })
}

/// Gains, angles and Rician factors of the four-cell, two-user layout.
///
/// `β` already contains the SNR (`σ² = 1`): intra-cell links sit at −6 dB
/// and the `(L−1)K` interfering links of every cell are spread evenly in dB
/// from −6.3 dB down to −11.5 dB in link order. Served users get angles in a
/// 60° sector, at least a quarter sub-sector apart; users of other cells
/// sharing their pilot are placed within ±2° of them.
pub fn default_geometry(cells: usize, users: usize, base_seed: u64) -> Result<DefaultGeometry> {
    if cells != 4 || users != 2 {
        return Err(Error::UnsupportedLayout { cells, users });
    }
    let links = (cells - 1) * users;
    let (hi, lo) = INTER_CELL_SNR_DB;
    let step = (hi - lo) / (links - 1) as f64;
    let beta = LinkTable::from_fn(cells, users, |j, l, k| {
        if l == j {
            db_to_linear(INTRA_CELL_SNR_DB)
        } else {
            let rank = if l < j { l } else { l - 1 };
            let link = rank * users + k;
            db_to_linear(hi - step * link as f64)
        }
    });

    let kappa = random_kappa(cells, users, base_seed);

    // User k sits in the middle half of the k-th of K equal sub-sectors, so
    // the LoS directions of one cell stay resolvable at moderate N.
    let width = 2.0 * SECTOR_HALF_WIDTH_DEG / users as f64;
    let served = UserTable::from_fn(cells, users, |j, k| {
        let mut s = StreamKey::new(base_seed, Purpose::Angle).link(j, j, k).stream();
        let u: f64 = s.random();
        -SECTOR_HALF_WIDTH_DEG + width * (k as f64 + 0.25 + 0.5 * u)
    });
    let theta = LinkTable::from_fn(cells, users, |j, l, k| {
        let base = *served.get(j, k);
        let deg = if l == j {
            base
        } else {
            let mut s = StreamKey::new(base_seed, Purpose::Angle).link(j, l, k).stream();
            let u: f64 = s.random();
            base + (2.0 * u - 1.0) * PILOT_GROUP_SPREAD_DEG
        };
        deg.to_radians()
    });

    Ok(DefaultGeometry { beta, theta, kappa })
}
