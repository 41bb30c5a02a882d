//! Channel realizations and training observations.
//!
//! Pilots are orthogonal inside a cell and reused across cells, so the
//! despread training signal of pilot `k` at base station `j` is generated
//! directly as `Σ_l h_{jlk} + n / sqrt(τ ρ_tr)`; no pilot matrices are
//! simulated.

#[allow(unused_imports)]
use num_traits::Float;
use alloc::vec::Vec;


use crate::linalg::{c, CMatrix, CVector};
use crate::rng::{complex_gaussian_vector, Purpose, Stream, StreamKey};
use crate::stats::ChannelStatistics;
use crate::table::UserTable;

/// Channel matrices `H_{jl}` (`N×K`, column `k` is `h_{jlk}`) of one
/// coherence block.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    cells: usize,
    blocks: Vec<CMatrix>,
    pub trial: u64,
}

impl ChannelRealization {
    pub fn from_blocks(cells: usize, blocks: Vec<CMatrix>, trial: u64) -> Self {
        assert_eq!(blocks.len(), cells * cells);
        Self { cells, blocks, trial }
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    /// `H_{jl}`.
    pub fn block(&self, j: usize, l: usize) -> &CMatrix {
        &self.blocks[j * self.cells + l]
    }

    /// `h_{jlk}`.
    pub fn h(&self, j: usize, l: usize, k: usize) -> CVector {
        self.block(j, l).column(k).into_owned()
    }
}

/// Draws every channel of one trial.
///
/// Intra-cell channels are `R^{1/2} z + h̄`, inter-cell channels `R^{1/2} z`,
/// with `z ~ CN(0, I)` taken from the stream of `(seed, trial, j, l, k)`.
pub fn sample_channels(stats: &ChannelStatistics, seed: u64, trial: u64) -> ChannelRealization {
    let (cells, users, n) = (stats.cells(), stats.users(), stats.antennas());
    let mut blocks = Vec::with_capacity(cells * cells);
    for j in 0..cells {
        for l in 0..cells {
            let mut block = CMatrix::zeros(n, users);
            for k in 0..users {
                let mut stream = StreamKey::new(seed, Purpose::Scattering).trial(trial).link(j, l, k).stream();
                let z = complex_gaussian_vector(&mut stream, n);
                let mut h = stats.r_sqrt(j, l, k) * z;
                if let Some(mean) = stats.mean(j, l, k) {
                    h += mean;
                }
                block.set_column(k, &h);
            }
            blocks.push(block);
        }
    }
    ChannelRealization { cells, blocks, trial }
}

/// Despread training signal of pilot `k` at base station `j`:
/// `Σ_l h_{jlk} + n / sqrt(τ ρ_tr)`, `n ~ CN(0, I)`.
pub fn sample_training_observation(
    realization: &ChannelRealization,
    j: usize,
    k: usize,
    tau: usize,
    rho_tr: f64,
    stream: &mut Stream,
) -> CVector {
    let n = realization.block(j, j).nrows();
    let mut y = CVector::zeros(n);
    for l in 0..realization.cells() {
        y += realization.block(j, l).column(k);
    }
    let noise = complex_gaussian_vector(stream, n);
    let weight = 1.0 / (tau as f64 * rho_tr).sqrt();
    y + noise * c(weight, 0.0)
}

/// Training observations of every pilot at every base station for one
/// trial, each from its own `(seed, trial, j, k)` noise stream.
pub fn sample_all_observations(
    realization: &ChannelRealization,
    users: usize,
    tau: usize,
    rho_tr: f64,
    seed: u64,
) -> UserTable<CVector> {
    UserTable::from_fn(realization.cells(), users, |j, k| {
        let mut stream = StreamKey::new(seed, Purpose::TrainingNoise)
            .trial(realization.trial)
            .link(j, j, k)
            .stream();
        sample_training_observation(realization, j, k, tau, rho_tr, &mut stream)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{relative_frobenius, scaled_identity};
    use crate::scenario::{CorrelationModel, ScenarioConfig};
    use crate::table::{LinkTable, UserTable};

    fn identity_config(cells: usize, antennas: usize, kappa: f64, beta: f64) -> ScenarioConfig {
        ScenarioConfig {
            cells,
            users: 1,
            antennas,
            coherence: 10,
            pilot_length: 1,
            rho_tr: 1.0,
            rho_d: 1.0,
            beta: LinkTable::filled(cells, 1, beta),
            kappa: UserTable::filled(cells, 1, kappa),
            theta: LinkTable::filled(cells, 1, 0.3),
            correlation: CorrelationModel::Identity,
            base_seed: 17,
        }
    }

    #[test]
    fn strong_los_is_deterministic() {
        let cfg = identity_config(1, 4, 1e16, 2.0);
        let stats = ChannelStatistics::build(&cfg).unwrap();
        let h = sample_channels(&stats, 1, 0).h(0, 0, 0);
        let want = cfg.steering(0, 0) * c(2f64.sqrt(), 0.0);
        assert!((h - want).norm() < 1e-7);
    }

    #[test]
    fn same_trial_same_realization() {
        let cfg = ScenarioConfig::default_exponential(8, 4).unwrap();
        let stats = ChannelStatistics::build(&cfg).unwrap();
        assert_eq!(sample_channels(&stats, 4, 11), sample_channels(&stats, 4, 11));
        assert_ne!(sample_channels(&stats, 4, 11), sample_channels(&stats, 4, 12));
    }

    #[test]
    fn rayleigh_covariance_matches_beta() {
        let beta = 0.7;
        let n = 4;
        let cfg = identity_config(1, n, 0.0, beta);
        let stats = ChannelStatistics::build(&cfg).unwrap();
        let trials = 100_000;
        let mut cov = CMatrix::zeros(n, n);
        for t in 0..trials {
            let h = sample_channels(&stats, 3, t).h(0, 0, 0);
            cov += &h * h.adjoint();
        }
        cov /= c(trials as f64, 0.0);
        assert!(relative_frobenius(&cov, &scaled_identity(n, beta)) < 0.05);
    }

    #[test]
    fn noiseless_observation_sums_pilot_group() {
        let cfg = identity_config(3, 4, 1.0, 1.0);
        let stats = ChannelStatistics::build(&cfg).unwrap();
        let real = sample_channels(&stats, 2, 0);
        let mut s = StreamKey::new(0, Purpose::TrainingNoise).stream();
        let y = sample_training_observation(&real, 1, 0, 1, f64::INFINITY, &mut s);
        let want = real.h(1, 0, 0) + real.h(1, 1, 0) + real.h(1, 2, 0);
        assert!((y - want).norm() < 1e-14);

        let single = identity_config(1, 4, 1.0, 1.0);
        let stats = ChannelStatistics::build(&single).unwrap();
        let real = sample_channels(&stats, 2, 0);
        let y = sample_training_observation(&real, 0, 0, 1, f64::INFINITY, &mut s);
        assert_eq!(y, real.h(0, 0, 0));
    }

    #[test]
    fn training_noise_variance() {
        let cfg = identity_config(1, 2, 0.0, 1.0);
        let stats = ChannelStatistics::build(&cfg).unwrap();
        let real = sample_channels(&stats, 2, 0);
        let h = real.h(0, 0, 0);
        let (tau, rho) = (2usize, 0.8);
        let trials = 100_000;
        let mut acc = 0.0;
        let mut s = StreamKey::new(8, Purpose::TrainingNoise).stream();
        for _ in 0..trials {
            let y = sample_training_observation(&real, 0, 0, tau, rho, &mut s);
            acc += (y - &h).norm_squared() / 2.0;
        }
        let var = acc / trials as f64;
        let want = 1.0 / (tau as f64 * rho);
        assert!((var - want).abs() < 0.05 * want, "{var} vs {want}");
    }
}
