//! Everything deterministic about a scenario, computed once: statistics,
//! the estimator, and the per-cell regularizers of both MMSE combiners.

use alloc::vec::Vec;

use crate::detection::{build_zm, build_zs, Regularizer, ZsConfig, ZsDesign};
use crate::error::Result;
use crate::estimation::EstimatorModel;
use crate::scenario::ScenarioConfig;
use crate::stats::ChannelStatistics;

#[derive(Debug, Clone)]
pub struct Network {
    config: ScenarioConfig,
    zs_config: ZsConfig,
    stats: ChannelStatistics,
    estimator: EstimatorModel,
    zm: Vec<Regularizer>,
    zs: Vec<ZsDesign>,
}

impl Network {
    pub fn build(config: &ScenarioConfig, zs_config: &ZsConfig) -> Result<Self> {
        let stats = ChannelStatistics::build(config)?;
        let estimator = EstimatorModel::build(&stats, config.pilot_length, config.rho_tr)?;
        let zm = (0..config.cells)
            .map(|j| build_zm(&stats, &estimator, config.rho_d, j))
            .collect::<Result<Vec<_>>>()?;
        let zs = (0..config.cells)
            .map(|j| build_zs(zs_config, &stats, &estimator, config.rho_d, j))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { config: config.clone(), zs_config: zs_config.clone(), stats, estimator, zm, zs })
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.config
    }

    pub fn zs_config(&self) -> &ZsConfig {
        &self.zs_config
    }

    pub fn stats(&self) -> &ChannelStatistics {
        &self.stats
    }

    pub fn estimator(&self) -> &EstimatorModel {
        &self.estimator
    }

    /// `Z^M_j` and its inverse.
    pub fn zm(&self, j: usize) -> &Regularizer {
        &self.zm[j]
    }

    /// `Z^S_j` under the configured design.
    pub fn zs(&self, j: usize) -> &ZsDesign {
        &self.zs[j]
    }

    pub fn cells(&self) -> usize {
        self.config.cells
    }

    pub fn users(&self) -> usize {
        self.config.users
    }

    pub fn antennas(&self) -> usize {
        self.config.antennas
    }
}
