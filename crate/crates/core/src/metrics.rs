//! Per-realization SINR, ergodic rates and the Monte Carlo engine.
//!
//! The SINR of every combiner is evaluated with the conditional expectation
//! over the estimation errors in closed form: given all multi-cell
//! estimates, `E[h hᴴ | Ĥ] = ĥĥᴴ + R − R̃`, so
//!
//! `γ_{jk} = |gᴴĥ_{jjk}|² / (Σ_{(l,i)≠(j,k)} |gᴴĥ_{jli}|² + gᴴ (Z^M_j)⁻¹ g)`
//!
//! with `(Z^M_j)⁻¹ = I/ρ_d + Σ_{l,i}(R_{jli} − R̃_{jli})`. M-MMSE is the
//! maximizer of this quotient.

#[allow(unused_imports)]
use num_traits::Float;
use alloc::boxed::Box;
use alloc::vec::Vec;

use crate::detection::{CombinerSet, Detector, Regularizer};
use crate::error::{Error, Result};
use crate::estimation::{EstimateSet, Scope};
use crate::linalg::{inner, CMatrix, CVector, LowRankInverse};
use crate::network::Network;
use crate::sampling::{sample_all_observations, sample_channels};
use crate::table::UserTable;

/// `γ_{jk}` of an arbitrary combiner `g` (zero for `g = 0`).
pub fn sinr_conditional(g: &CVector, estimates: &EstimateSet, zm_inv: &CMatrix, j: usize, k: usize) -> f64 {
    if g.iter().all(|z| z.norm_sqr() == 0.0) {
        return 0.0;
    }
    let all = estimates.cell_matrix(j);
    let own = match estimates.scope() {
        Scope::MultiCell => j * estimates.users() + k,
        Scope::SingleCell => k,
    };
    let proj = all.adjoint() * g;
    let signal = proj[own].norm_sqr();
    let interference: f64 = proj.iter().enumerate().filter(|(c, _)| *c != own).map(|(_, z)| z.norm_sqr()).sum();
    let noise = inner(g, &(zm_inv * g)).re;
    signal / (interference + noise)
}

/// `γ^{M-MMSE}_{jk} = ĥᴴ (Σ_{(l,i)≠(j,k)} ĥĥᴴ + (Z^M)⁻¹)⁻¹ ĥ`.
pub fn sinr_mmmse_direct(estimates: &EstimateSet, zm: &Regularizer, j: usize, k: usize) -> Result<f64> {
    if estimates.scope() != Scope::MultiCell {
        return Err(Error::validation("M-MMSE SINR needs multi-cell channel estimates"));
    }
    let others = estimates.all_but(j, k);
    let solver = LowRankInverse::new(&zm.z, &others)?;
    Ok(solver.quadratic_form(&estimates.local(j, k)).max(0.0))
}

/// SINRs of one trial, per detector, for every `(j, k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    pub trial: u64,
    pub gamma: Vec<(Detector, UserTable<f64>)>,
}

impl TrialOutcome {
    pub fn gamma(&self, detector: Detector) -> Option<&UserTable<f64>> {
        self.gamma.iter().find(|(d, _)| *d == detector).map(|(_, g)| g)
    }
}

/// Channel estimates of one trial (multi-cell scope).
pub fn trial_estimates(net: &Network, trial: u64) -> EstimateSet {
    let cfg = net.config();
    let realization = sample_channels(net.stats(), cfg.base_seed, trial);
    let observations = sample_all_observations(&realization, cfg.users, cfg.pilot_length, cfg.rho_tr, cfg.base_seed);
    EstimateSet::estimate(net.stats(), net.estimator(), &observations, Scope::MultiCell)
}

/// sample → estimate → combine → SINR, for one trial.
pub fn run_trial(net: &Network, detectors: &[Detector], trial: u64) -> Result<TrialOutcome> {
    let wrap = |e: Error| Error::Trial { trial, source: Box::new(e) };
    let estimates = trial_estimates(net, trial);
    let (cells, users) = (net.cells(), net.users());
    let mut gamma = Vec::with_capacity(detectors.len());
    for &detector in detectors {
        let mut table = UserTable::filled(cells, users, 0.0);
        for j in 0..cells {
            let combiners = CombinerSet::for_cell(detector, &estimates, net.zs(j), net.zm(j), j).map_err(wrap)?;
            for (k, g) in combiners.g.iter().enumerate() {
                let value = sinr_conditional(g, &estimates, &net.zm(j).z_inv, j, k);
                if !(value.is_finite() && value >= 0.0) {
                    return Err(wrap(Error::NotPositiveDefinite { context: "SINR denominator" }));
                }
                *table.get_mut(j, k) = value;
            }
        }
        gamma.push((detector, table));
    }
    Ok(TrialOutcome { trial, gamma })
}

/// `(1 − τ/T_c) / K`: the weight of one user's `E[log(1+γ)]` in the cell
/// rate `R_j`. Zero when the whole block is spent on pilots.
pub fn rate_prefactor(pilot_length: usize, coherence: usize, users: usize) -> f64 {
    let fraction = 1.0 - pilot_length as f64 / coherence as f64;
    fraction.max(0.0) / users as f64
}

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Sample mean with a normal-approximation 95% half-width.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanEstimate {
    pub mean: f64,
    pub ci95: f64,
    pub count: u64,
}

/// Mean and 95% half-width of `values`, summed in iteration order.
pub fn mean_estimate(values: impl IntoIterator<Item = f64>) -> MeanEstimate {
    let values: Vec<f64> = values.into_iter().collect();
    let count = values.len() as u64;
    if count == 0 {
        return MeanEstimate { mean: f64::NAN, ci95: f64::NAN, count };
    }
    let mean = values.iter().sum::<f64>() / count as f64;
    let ci95 = if count > 1 {
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (count - 1) as f64;
        Z95 * (var / count as f64).sqrt()
    } else {
        0.0
    };
    MeanEstimate { mean, ci95, count }
}

/// Empirical per-user rate, in nats, already weighted by
/// [`rate_prefactor`] so the users of a cell sum to `R_j`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UserRate {
    pub detector: Detector,
    pub cell: usize,
    pub user: usize,
    pub rate: MeanEstimate,
}

/// Reduces trial outcomes (in trial order) to per-user rates.
pub fn aggregate_rates(net: &Network, detectors: &[Detector], outcomes: &[TrialOutcome]) -> Vec<UserRate> {
    let cfg = net.config();
    let weight = rate_prefactor(cfg.pilot_length, cfg.coherence, cfg.users);
    let mut rows = Vec::new();
    for &detector in detectors {
        for j in 0..cfg.cells {
            for k in 0..cfg.users {
                let est = mean_estimate(outcomes.iter().map(|o| {
                    let g = *o.gamma(detector).expect("detector evaluated in every trial").get(j, k);
                    weight * g.ln_1p()
                }));
                rows.push(UserRate { detector, cell: j, user: k, rate: est });
            }
        }
    }
    rows
}

/// Sequential Monte Carlo over trials `0..trials`.
pub fn run_monte_carlo(net: &Network, detectors: &[Detector], trials: u64) -> Result<Vec<UserRate>> {
    if trials == 0 {
        return Err(Error::validation("trials must be ≥ 1"));
    }
    let outcomes = (0..trials).map(|t| run_trial(net, detectors, t)).collect::<Result<Vec<_>>>()?;
    Ok(aggregate_rates(net, detectors, &outcomes))
}
