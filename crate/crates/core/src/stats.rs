//! Second-order channel statistics: covariance matrices `R_{jlk}`, their
//! square roots for sampling, and LoS means `h̄_{jk}`.
//!
//! Statistics depend only on the scenario and are built once, then shared
//! read-only by every trial.

#[allow(unused_imports)]
use num_traits::Float;
use alloc::vec::Vec;


use crate::error::Result;
use crate::linalg::{c, psd_sqrt, CMatrix, CVector};
use crate::scenario::ScenarioConfig;
use crate::table::{LinkTable, UserTable};

/// `R = β / (1 + κ δ) · Θ`, where `δ = 1` for an intra-cell link.
pub fn effective_covariance(beta: f64, kappa: f64, same_cell: bool, theta: &CMatrix) -> CMatrix {
    let scale = if same_cell { beta / (1.0 + kappa) } else { beta };
    theta * c(scale, 0.0)
}

/// `h̄ = sqrt(β κ / (1 + κ)) · z̄`.
pub fn los_component(beta: f64, kappa: f64, steering: &CVector) -> CVector {
    let scale = (beta * kappa / (1.0 + kappa)).sqrt();
    steering * c(scale, 0.0)
}

#[derive(Debug, Clone)]
pub struct ChannelStatistics {
    antennas: usize,
    beta: LinkTable<f64>,
    kappa: UserTable<f64>,
    theta: LinkTable<CMatrix>,
    covariance: LinkTable<CMatrix>,
    covariance_sqrt: LinkTable<CMatrix>,
    los: UserTable<CVector>,
    los_matrix: Vec<CMatrix>,
}

impl ChannelStatistics {
    /// Builds all statistics of a validated scenario.
    pub fn build(config: &ScenarioConfig) -> Result<Self> {
        config.validate()?;
        let (theta, roots) = config.correlation_tables();
        let steering = UserTable::from_fn(config.cells, config.users, |j, k| config.steering(j, k));
        Ok(Self::from_factored(theta, roots, config.beta.clone(), config.kappa.clone(), &steering))
    }

    /// Statistics from explicit correlation matrices and LoS directions.
    ///
    /// `steering[j][k]` is the unscaled LoS direction `z̄_{jk}`; only
    /// intra-cell links carry a LoS mean.
    pub fn from_parts(
        theta: LinkTable<CMatrix>,
        beta: LinkTable<f64>,
        kappa: UserTable<f64>,
        steering: &UserTable<CVector>,
    ) -> Self {
        let roots = theta.map(psd_sqrt);
        Self::from_factored(theta, roots, beta, kappa, steering)
    }

    /// As [`Self::from_parts`] with precomputed square roots of `Θ`.
    pub fn from_factored(
        theta: LinkTable<CMatrix>,
        theta_sqrt: LinkTable<CMatrix>,
        beta: LinkTable<f64>,
        kappa: UserTable<f64>,
        steering: &UserTable<CVector>,
    ) -> Self {
        let (cells, users) = (theta.cells(), theta.users());
        let antennas = theta.get(0, 0, 0).nrows();
        let scale = |j: usize, l: usize, k: usize| {
            let b = *beta.get(j, l, k);
            if l == j {
                b / (1.0 + *kappa.get(j, k))
            } else {
                b
            }
        };
        let covariance = LinkTable::from_fn(cells, users, |j, l, k| {
            effective_covariance(*beta.get(j, l, k), *kappa.get(j, k), l == j, theta.get(j, l, k))
        });
        let covariance_sqrt =
            LinkTable::from_fn(cells, users, |j, l, k| theta_sqrt.get(j, l, k) * c(scale(j, l, k).sqrt(), 0.0));
        let los = UserTable::from_fn(cells, users, |j, k| {
            los_component(*beta.get(j, j, k), *kappa.get(j, k), steering.get(j, k))
        });
        let los_matrix = (0..cells)
            .map(|j| CMatrix::from_fn(antennas, users, |n, k| los.get(j, k)[n]))
            .collect();
        Self { antennas, beta, kappa, theta, covariance, covariance_sqrt, los, los_matrix }
    }

    pub fn antennas(&self) -> usize {
        self.antennas
    }

    pub fn cells(&self) -> usize {
        self.theta.cells()
    }

    pub fn users(&self) -> usize {
        self.theta.users()
    }

    pub fn beta(&self, j: usize, l: usize, k: usize) -> f64 {
        *self.beta.get(j, l, k)
    }

    pub fn kappa(&self, j: usize, k: usize) -> f64 {
        *self.kappa.get(j, k)
    }

    /// Correlation matrix `Θ_{jlk}`.
    pub fn theta(&self, j: usize, l: usize, k: usize) -> &CMatrix {
        self.theta.get(j, l, k)
    }

    /// Covariance of the scattered component, `R_{jlk}`.
    pub fn r(&self, j: usize, l: usize, k: usize) -> &CMatrix {
        self.covariance.get(j, l, k)
    }

    /// PSD square root of `R_{jlk}`.
    pub fn r_sqrt(&self, j: usize, l: usize, k: usize) -> &CMatrix {
        self.covariance_sqrt.get(j, l, k)
    }

    /// LoS mean `h̄_{jk}` (zero vector when `κ_{jk} = 0`).
    pub fn hbar(&self, j: usize, k: usize) -> &CVector {
        self.los.get(j, k)
    }

    /// `H̄_j = [h̄_{j0} … h̄_{j,K−1}]`.
    pub fn hbar_matrix(&self, j: usize) -> &CMatrix {
        &self.los_matrix[j]
    }

    /// Mean of the channel `h_{jlk}`: `h̄_{jk}` for `l = j`, zero otherwise.
    pub fn mean(&self, j: usize, l: usize, k: usize) -> Option<&CVector> {
        (l == j).then(|| self.hbar(j, k))
    }
}
