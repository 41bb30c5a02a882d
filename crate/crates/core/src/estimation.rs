//! MMSE channel estimation under pilot contamination.
//!
//! Base station `j` observes `y_{jk} = Σ_l h_{jlk} + n/sqrt(τρ_tr)` for pilot
//! `k`. The estimate of every channel sharing that pilot is
//! `ĥ_{jlk} = R_{jlk} Φ_{jk} (y_{jk} − h̄_{jk}) + δ_{jl} h̄_{jk}` with
//! `Φ_{jk} = (Σ_l R_{jlk} + I/(τρ_tr))⁻¹`. The known LoS mean is removed from
//! the observation before filtering, so `ĥ_{jlk} ~ CN(δ_{jl} h̄_{jk}, R̃_{jlk})`
//! and the error `h − ĥ` is zero-mean with covariance `R − R̃`.

use alloc::vec::Vec;

use crate::error::Result;
use crate::linalg::{c, hermitian_inverse, hermitize, product, CMatrix, CVector};
use crate::stats::ChannelStatistics;
use crate::table::{LinkTable, UserTable};

/// `Φ = (Σ R + I/(τρ_tr))⁻¹`.
pub fn compute_phi(covariances: &[&CMatrix], tau: usize, rho_tr: f64) -> Result<CMatrix> {
    let n = covariances[0].nrows();
    let mut sum = CMatrix::zeros(n, n);
    for r in covariances {
        sum += *r;
    }
    let noise = 1.0 / (tau as f64 * rho_tr);
    for i in 0..n {
        sum[(i, i)] += c(noise, 0.0);
    }
    hermitian_inverse(&sum, "pilot-group covariance Σ R + I/(τρ_tr)")
}

/// Covariance of the estimate, `R̃ = R Φ R`.
pub fn estimate_covariance(r: &CMatrix, phi: &CMatrix) -> CMatrix {
    let mut out = product(&product(r, phi), r);
    hermitize(&mut out);
    out
}

/// Deterministic part of the estimator: `Φ_{jk}` and `R̃_{jlk}`.
#[derive(Debug, Clone)]
pub struct EstimatorModel {
    tau: usize,
    rho_tr: f64,
    phi: UserTable<CMatrix>,
    rtilde: LinkTable<CMatrix>,
}

impl EstimatorModel {
    pub fn build(stats: &ChannelStatistics, tau: usize, rho_tr: f64) -> Result<Self> {
        let (cells, users) = (stats.cells(), stats.users());
        let phi = UserTable::try_from_fn(cells, users, |j, k| {
            let group: Vec<&CMatrix> = (0..cells).map(|l| stats.r(j, l, k)).collect();
            compute_phi(&group, tau, rho_tr)
        })?;
        let rtilde = LinkTable::from_fn(cells, users, |j, l, k| estimate_covariance(stats.r(j, l, k), phi.get(j, k)));
        Ok(Self { tau, rho_tr, phi, rtilde })
    }

    pub fn tau(&self) -> usize {
        self.tau
    }

    pub fn rho_tr(&self) -> f64 {
        self.rho_tr
    }

    pub fn phi(&self, j: usize, k: usize) -> &CMatrix {
        self.phi.get(j, k)
    }

    pub fn rtilde(&self, j: usize, l: usize, k: usize) -> &CMatrix {
        self.rtilde.get(j, l, k)
    }

    /// Covariance of the estimation error, `R − R̃`.
    pub fn error_covariance(&self, stats: &ChannelStatistics, j: usize, l: usize, k: usize) -> CMatrix {
        stats.r(j, l, k) - self.rtilde(j, l, k)
    }

    /// `Σ_{l,i} (R_{jli} − R̃_{jli})` over the given cells.
    pub fn total_error_covariance(&self, stats: &ChannelStatistics, j: usize, cells: impl Iterator<Item = usize>) -> CMatrix {
        let n = stats.antennas();
        let mut acc = CMatrix::zeros(n, n);
        for l in cells {
            for i in 0..stats.users() {
                acc += stats.r(j, l, i);
                acc -= self.rtilde(j, l, i);
            }
        }
        acc
    }
}

/// MMSE estimate of `h_{jlk}` from the training observation of pilot `k`.
pub fn mmse_estimate(
    observation: &CVector,
    j: usize,
    l: usize,
    k: usize,
    stats: &ChannelStatistics,
    model: &EstimatorModel,
) -> CVector {
    let filtered = model.phi(j, k) * (observation - stats.hbar(j, k));
    let mut est = stats.r(j, l, k) * filtered;
    if l == j {
        est += stats.hbar(j, k);
    }
    est
}

/// Which channels a base station estimates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scope {
    /// Only its own users, `ĥ_{jjk}`.
    SingleCell,
    /// Every user of every cell, `ĥ_{jlk}`.
    MultiCell,
}

/// Channel estimates of one trial.
///
/// For every base station `j` the estimates are stored as one `N×(LK)`
/// matrix (multi-cell scope, column `l·K + k`) or one `N×K` matrix
/// (single-cell scope, column `k`).
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateSet {
    scope: Scope,
    users: usize,
    per_cell: Vec<CMatrix>,
}

impl EstimateSet {
    /// Estimates every channel in `scope` from one observation per `(j, k)`.
    pub fn estimate(
        stats: &ChannelStatistics,
        model: &EstimatorModel,
        observations: &UserTable<CVector>,
        scope: Scope,
    ) -> Self {
        let (cells, users, n) = (stats.cells(), stats.users(), stats.antennas());
        let mut per_cell = Vec::with_capacity(cells);
        for j in 0..cells {
            let width = match scope {
                Scope::SingleCell => users,
                Scope::MultiCell => cells * users,
            };
            let mut m = CMatrix::zeros(n, width);
            for k in 0..users {
                let filtered = model.phi(j, k) * (observations.get(j, k) - stats.hbar(j, k));
                let mut write = |col: usize, l: usize| {
                    let mut est = stats.r(j, l, k) * &filtered;
                    if l == j {
                        est += stats.hbar(j, k);
                    }
                    m.set_column(col, &est);
                };
                match scope {
                    Scope::SingleCell => write(k, j),
                    Scope::MultiCell => (0..cells).for_each(|l| write(l * users + k, l)),
                }
            }
            per_cell.push(m);
        }
        Self { scope, users, per_cell }
    }

    /// Wraps precomputed estimate matrices (see the type docs for layout).
    pub fn from_matrices(scope: Scope, users: usize, per_cell: Vec<CMatrix>) -> Self {
        Self { scope, users, per_cell }
    }

    pub fn scope(&self) -> Scope {
        self.scope
    }

    pub fn cells(&self) -> usize {
        self.per_cell.len()
    }

    pub fn users(&self) -> usize {
        self.users
    }

    fn column(&self, l: usize, k: usize) -> Option<usize> {
        match self.scope {
            Scope::MultiCell => Some(l * self.users + k),
            Scope::SingleCell => None,
        }
    }

    /// `ĥ_{jlk}`; `None` for inter-cell channels of a single-cell set.
    pub fn hhat(&self, j: usize, l: usize, k: usize) -> Option<CVector> {
        let col = match self.scope {
            Scope::SingleCell if l == j => k,
            Scope::SingleCell => return None,
            Scope::MultiCell => self.column(l, k)?,
        };
        Some(self.per_cell[j].column(col).into_owned())
    }

    /// `ĥ_{jjk}`.
    pub fn local(&self, j: usize, k: usize) -> CVector {
        self.hhat(j, j, k).expect("intra-cell estimates exist in every scope")
    }

    /// `Ĥ_{jj}`, the `N×K` estimates of cell `j`'s own users.
    pub fn local_matrix(&self, j: usize) -> CMatrix {
        match self.scope {
            Scope::SingleCell => self.per_cell[j].clone(),
            Scope::MultiCell => self.per_cell[j].columns(j * self.users, self.users).into_owned(),
        }
    }

    /// Every estimate held by base station `j`, one column per channel.
    pub fn cell_matrix(&self, j: usize) -> &CMatrix {
        &self.per_cell[j]
    }

    /// Every multi-cell estimate at `j` except `ĥ_{jjk}`.
    pub fn all_but(&self, j: usize, k: usize) -> CMatrix {
        let m = &self.per_cell[j];
        let skip = self.column(j, k).unwrap_or(k);
        let cols: Vec<usize> = (0..m.ncols()).filter(|&c| c != skip).collect();
        m.select_columns(cols.iter())
    }

    /// The single-cell view of a multi-cell set.
    pub fn to_single_cell(&self) -> Self {
        let per_cell = (0..self.cells()).map(|j| self.local_matrix(j)).collect();
        Self { scope: Scope::SingleCell, users: self.users, per_cell }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{min_eigenvalue, relative_frobenius, scaled_identity};
    use crate::rng::{Purpose, StreamKey};
    use crate::sampling::{sample_channels, sample_training_observation};
    use crate::scenario::{CorrelationModel, ScenarioConfig};

    #[test]
    fn phi_examples() {
        let i = CMatrix::identity(3, 3);
        let phi = compute_phi(&[&i], 1, 1.0).unwrap();
        assert!(relative_frobenius(&phi, &scaled_identity(3, 0.5)) < 1e-15);
        let phi = compute_phi(&[&i, &i], 1, 1.0).unwrap();
        assert!(relative_frobenius(&phi, &scaled_identity(3, 1.0 / 3.0)) < 1e-15);
    }

    #[test]
    fn phi_inverts_the_group_covariance() {
        let a = crate::scenario::build_exponential_correlation(0.6, 0.2, 6);
        let b = crate::scenario::build_exponential_correlation(0.3, -0.7, 6) * c(0.4, 0.0);
        let phi = compute_phi(&[&a, &b], 2, 0.5).unwrap();
        let total = &a + &b + scaled_identity(6, 1.0);
        assert!(relative_frobenius(&(&phi * total), &scaled_identity(6, 1.0)) < 1e-12);
    }

    #[test]
    fn estimate_covariance_examples() {
        let i = CMatrix::identity(2, 2);
        let half = scaled_identity(2, 0.5);
        assert!(relative_frobenius(&estimate_covariance(&i, &half), &half) < 1e-15);
        assert_eq!(estimate_covariance(&CMatrix::zeros(2, 2), &half), CMatrix::zeros(2, 2));
        let r = crate::scenario::build_exponential_correlation(0.8, 0.4, 5);
        let phi = compute_phi(&[&r, &r], 1, 2.0).unwrap();
        assert!(min_eigenvalue(&(&r - estimate_covariance(&r, &phi))) >= -1e-10);
    }

    fn single_cell(kappa: f64, rho_tr: f64) -> ScenarioConfig {
        ScenarioConfig {
            cells: 1,
            users: 1,
            antennas: 3,
            coherence: 10,
            pilot_length: 1,
            rho_tr,
            rho_d: 1.0,
            beta: LinkTable::filled(1, 1, 1.0),
            kappa: UserTable::filled(1, 1, kappa),
            theta: LinkTable::filled(1, 1, 0.2),
            correlation: CorrelationModel::Identity,
            base_seed: 1,
        }
    }

    #[test]
    fn rayleigh_estimate_halves_observation() {
        let cfg = single_cell(0.0, 1.0);
        let stats = ChannelStatistics::build(&cfg).unwrap();
        let model = EstimatorModel::build(&stats, 1, 1.0).unwrap();
        let y = CVector::from_vec(alloc::vec![c(1.0, 2.0), c(-0.5, 0.0), c(0.0, 3.0)]);
        let est = mmse_estimate(&y, 0, 0, 0, &stats, &model);
        assert!((est - &y * c(0.5, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn strong_los_estimate_recovers_channel() {
        let cfg = single_cell(1e14, 1e12);
        let stats = ChannelStatistics::build(&cfg).unwrap();
        let model = EstimatorModel::build(&stats, 1, 1e12).unwrap();
        let real = sample_channels(&stats, 5, 0);
        let mut s = StreamKey::new(5, Purpose::TrainingNoise).stream();
        let y = sample_training_observation(&real, 0, 0, 1, 1e12, &mut s);
        let est = mmse_estimate(&y, 0, 0, 0, &stats, &model);
        let h = real.h(0, 0, 0);
        assert!((est - &h).norm() / h.norm() < 1e-6);
    }

    #[test]
    fn estimate_set_layouts_agree() {
        let cfg = ScenarioConfig::default_exponential(6, 2).unwrap();
        let stats = ChannelStatistics::build(&cfg).unwrap();
        let model = EstimatorModel::build(&stats, cfg.pilot_length, cfg.rho_tr).unwrap();
        let real = sample_channels(&stats, 2, 3);
        let obs = crate::sampling::sample_all_observations(&real, 2, cfg.pilot_length, cfg.rho_tr, 2);
        let multi = EstimateSet::estimate(&stats, &model, &obs, Scope::MultiCell);
        let single = EstimateSet::estimate(&stats, &model, &obs, Scope::SingleCell);
        assert_eq!(multi.to_single_cell(), single);
        for j in 0..4 {
            for l in 0..4 {
                for k in 0..2 {
                    let direct = mmse_estimate(obs.get(j, k), j, l, k, &stats, &model);
                    assert_eq!(multi.hhat(j, l, k).unwrap(), direct);
                    assert_eq!(single.hhat(j, l, k).is_some(), l == j);
                }
            }
            assert_eq!(multi.all_but(j, 1).ncols(), 7);
            assert_eq!(single.all_but(j, 1).ncols(), 1);
        }
    }
}
