//! Brute-force reference computations for small instances.
//!
//! Nothing here shares a solver with the production code: inverses come
//! from a plain Gauss-Jordan elimination with partial pivoting, and the
//! SINR identities are evaluated from their textbook expansions.

#[allow(unused_imports)]
use num_traits::Float;

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::asymptotics::CellTraces;
use crate::detection::{smmse_combiner, ZsConfig};
use crate::error::Result;
use crate::estimation::EstimateSet;
use crate::linalg::{c, CMatrix, CVector, ONE, ZERO};
use crate::metrics::{sinr_mmmse_direct, trial_estimates};
use crate::network::Network;
use crate::scenario::{CorrelationModel, ScenarioConfig};
use crate::table::{LinkTable, UserTable};

/// Solves `A X = B` by Gauss-Jordan elimination with partial pivoting.
/// `None` when a pivot vanishes.
pub fn gauss_solve(a: &CMatrix, b: &CMatrix) -> Option<CMatrix> {
    let n = a.nrows();
    assert_eq!(n, a.ncols());
    assert_eq!(n, b.nrows());
    let m = b.ncols();
    let mut w: Vec<Vec<num_complex::Complex64>> =
        (0..n).map(|i| (0..n).map(|j| a[(i, j)]).chain((0..m).map(|j| b[(i, j)])).collect()).collect();
    for col in 0..n {
        let pivot = (col..n).max_by(|&x, &y| w[x][col].norm().total_cmp(&w[y][col].norm()))?;
        if w[pivot][col].norm() == 0.0 {
            return None;
        }
        w.swap(col, pivot);
        let p = w[col][col];
        for v in w[col].iter_mut() {
            *v /= p;
        }
        let row = w[col].clone();
        for (r, line) in w.iter_mut().enumerate() {
            if r == col {
                continue;
            }
            let f = line[col];
            if f != ZERO {
                for (x, y) in line.iter_mut().zip(&row) {
                    *x -= f * y;
                }
            }
        }
    }
    Some(CMatrix::from_fn(n, m, |i, j| w[i][n + j]))
}

pub fn gauss_inverse(a: &CMatrix) -> Option<CMatrix> {
    gauss_solve(a, &CMatrix::identity(a.nrows(), a.nrows()))
}

/// A small, fully explicit network plus one sampled set of estimates.
#[derive(Debug, Clone)]
pub struct OracleInstance {
    pub network: Network,
    pub estimates: EstimateSet,
}

fn random_correlation(n: usize, rng: &mut ChaCha8Rng) -> CMatrix {
    let a = CMatrix::from_fn(n, n, |_, _| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
    let mut theta = &a * a.adjoint() + CMatrix::identity(n, n) * c(0.05, 0.0);
    let scale = n as f64 / (0..n).map(|i| theta[(i, i)].re).sum::<f64>();
    theta *= c(scale, 0.0);
    theta
}

/// Random explicit-correlation scenario (`N ≤ 8`, `L ≤ 3`, `K ≤ 2`).
pub fn random_config(seed: u64, antennas: usize, cells: usize, users: usize) -> Result<ScenarioConfig> {
    assert!(antennas <= 8 && cells <= 3 && users <= 2, "oracle instances are small by design");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let theta_m = LinkTable::from_fn(cells, users, |_, _, _| random_correlation(antennas, &mut rng));
    let beta = LinkTable::from_fn(cells, users, |j, l, _| {
        if j == l {
            0.5 + rng.random::<f64>()
        } else {
            0.05 + 0.5 * rng.random::<f64>()
        }
    });
    let kappa = UserTable::from_fn(cells, users, |_, _| 2.0 * rng.random::<f64>());
    let theta = LinkTable::from_fn(cells, users, |_, _, _| (rng.random::<f64>() - 0.5) * 2.0);
    let config = ScenarioConfig {
        cells,
        users,
        antennas,
        coherence: 50,
        pilot_length: users,
        rho_tr: 0.5 + 2.0 * rng.random::<f64>(),
        rho_d: 0.5 + 2.0 * rng.random::<f64>(),
        beta,
        kappa,
        theta,
        correlation: CorrelationModel::Explicit(theta_m),
        base_seed: seed,
    };
    config.validate()?;
    Ok(config)
}

pub fn random_instance(seed: u64, antennas: usize, cells: usize, users: usize) -> Result<OracleInstance> {
    let config = random_config(seed, antennas, cells, users)?;
    let network = Network::build(&config, &ZsConfig::default())?;
    let estimates = trial_estimates(&network, 0);
    Ok(OracleInstance { network, estimates })
}

/// `γ^{M-MMSE}/N` through `Π₁ − Π₂ Π₃ Π₂ᴴ`, splitting the interferers into
/// the pilot contaminators `P` and the rest, `A = Σ_rest ĥĥᴴ + (Z^M)⁻¹`:
///
/// `Π₁ = ĥᴴA⁻¹ĥ/N`, `Π₂ = ĥᴴA⁻¹P/N`, `Π₃ = (I/N + PᴴA⁻¹P/N)⁻¹`.
pub fn woodbury_expansion(inst: &OracleInstance, j: usize, k: usize) -> f64 {
    let net = &inst.network;
    let (cells, users, n) = (net.cells(), net.users(), net.antennas() as f64);
    let est = &inst.estimates;
    let h = est.local(j, k);
    let mut a = net.zm(j).z_inv.clone();
    for l in 0..cells {
        for i in (0..users).filter(|&i| i != k) {
            let v = est.hhat(j, l, i).expect("multi-cell estimates");
            a += &v * v.adjoint();
        }
    }
    let p_cols: Vec<CVector> =
        (0..cells).filter(|&l| l != j).map(|l| est.hhat(j, l, k).expect("multi-cell estimates")).collect();
    let a_inv = gauss_inverse(&a).expect("A is positive definite");
    let pi1 = (h.adjoint() * &a_inv * &h)[(0, 0)].re / n;
    if p_cols.is_empty() {
        return pi1;
    }
    let p = CMatrix::from_columns(&p_cols);
    let pi2 = h.adjoint() * &a_inv * &p / c(n, 0.0);
    let inner = CMatrix::identity(p.ncols(), p.ncols()) / c(n, 0.0) + p.adjoint() * &a_inv * &p / c(n, 0.0);
    let pi3 = gauss_inverse(&inner).expect("Π₃ argument is positive definite");
    pi1 - (&pi2 * pi3 * pi2.adjoint())[(0, 0)].re
}

/// Largest relative gap between the expansion and the direct M-MMSE SINR
/// over all users of the instance.
pub fn woodbury_expansion_check(inst: &OracleInstance) -> f64 {
    let net = &inst.network;
    let n = net.antennas() as f64;
    let mut worst = 0.0f64;
    for j in 0..net.cells() {
        for k in 0..net.users() {
            let direct = sinr_mmmse_direct(&inst.estimates, net.zm(j), j, k).expect("direct SINR") / n;
            let expanded = woodbury_expansion(inst, j, k);
            worst = worst.max((expanded - direct).abs() / direct.abs());
        }
    }
    worst
}

/// One point of the `Q̃ → Q` convergence study.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QtildePoint {
    pub antennas: usize,
    /// `max | |gᴴĥ|² − |1 − [Q̃]_kk/N|² |` over users and trials.
    pub signal_deviation: f64,
    /// Mean over users and trials of `|[Q̃_j]_kk − [Q_j]_kk|`.
    pub q_error: f64,
}

/// `Q̃_j = (Ĥᴴ Z^S Ĥ / N + I/N)⁻¹` from the local estimates of cell `j`.
pub fn qtilde(estimates: &EstimateSet, zs: &CMatrix, j: usize) -> CMatrix {
    let h = estimates.local_matrix(j);
    let n = h.nrows() as f64;
    let k = h.ncols();
    let m = h.adjoint() * zs * &h / c(n, 0.0) + CMatrix::identity(k, k) / c(n, 0.0);
    gauss_inverse(&m).expect("Q̃ argument is positive definite")
}

/// Evaluates the signal identity and `|Q̃ − Q|` for each antenna count,
/// averaging over `trials` realizations.
pub fn qtilde_convergence_check(
    family: impl Fn(usize) -> Result<ScenarioConfig>,
    antennas: &[usize],
    trials: u64,
) -> Result<Vec<QtildePoint>> {
    let mut out = Vec::with_capacity(antennas.len());
    for &n in antennas {
        let net = Network::build(&family(n)?, &ZsConfig::default())?;
        let mut signal_deviation = 0.0f64;
        let mut q_error = 0.0;
        let mut count = 0usize;
        for j in 0..net.cells() {
            let zs = &net.zs(j).design;
            let q = CellTraces::build(net.stats(), net.estimator(), Some(zs), None, j).q_matrix()?;
            for trial in 0..trials {
                let est = trial_estimates(&net, trial);
                let qt = qtilde(&est, zs, j);
                for k in 0..net.users() {
                    let g = smmse_combiner(&est, &net.zs(j).combiner, j, k)?;
                    let lhs = g.dotc(&est.local(j, k)).norm_sqr();
                    let rhs = (ONE - qt[(k, k)] / c(n as f64, 0.0)).norm_sqr();
                    signal_deviation = signal_deviation.max((lhs - rhs).abs());
                    q_error += (qt[(k, k)] - q[(k, k)]).norm();
                    count += 1;
                }
            }
        }
        out.push(QtildePoint { antennas: n, signal_deviation, q_error: q_error / count as f64 });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::relative_frobenius;

    #[test]
    fn gauss_inverse_round_trip() {
        let inst = random_instance(3, 6, 2, 2).unwrap();
        let m = &inst.network.zm(0).z_inv;
        let inv = gauss_inverse(m).unwrap();
        assert!(relative_frobenius(&(m * inv), &CMatrix::identity(6, 6)) < 1e-12);
        assert!(gauss_inverse(&CMatrix::zeros(2, 2)).is_none());
    }

    #[test]
    fn expansion_matches_direct_sinr() {
        for seed in 0..100 {
            let cells = 1 + (seed % 3) as usize;
            let users = 1 + (seed % 2) as usize;
            let inst = random_instance(seed, 4 + (seed % 5) as usize, cells, users).unwrap();
            let dev = woodbury_expansion_check(&inst);
            assert!(dev <= 1e-9, "seed {seed}: {dev}");
        }
    }

    #[test]
    fn single_cell_expansion_is_pi1() {
        let inst = random_instance(5, 5, 1, 2).unwrap();
        let net = &inst.network;
        let direct = sinr_mmmse_direct(&inst.estimates, net.zm(0), 0, 1).unwrap() / 5.0;
        assert!((woodbury_expansion(&inst, 0, 1) - direct).abs() <= 1e-12 * direct);
    }

    #[test]
    fn qtilde_signal_identity_and_trend() {
        let points =
            qtilde_convergence_check(|n| ScenarioConfig::default_exponential(n, 31), &[16, 32, 64, 128], 4).unwrap();
        for p in &points {
            assert!(p.signal_deviation <= 1e-9, "{p:?}");
        }
        assert!(points[3].q_error < points[0].q_error, "{points:?}");
    }

    #[test]
    fn strong_los_single_cell_qtilde_follows_los_gram() {
        let cfg = random_config(8, 8, 1, 2).unwrap().with_uniform_kappa(1e4);
        let net = Network::build(&cfg, &ZsConfig::default()).unwrap();
        let est = trial_estimates(&net, 0);
        let zs = &net.zs(0).design;
        let hbar = net.stats().hbar_matrix(0);
        let los = hbar.adjoint() * zs * hbar / c(8.0, 0.0) + CMatrix::identity(2, 2) / c(8.0, 0.0);
        let qt_inv = gauss_inverse(&qtilde(&est, zs, 0)).unwrap();
        assert!(relative_frobenius(&qt_inv, &los) < 0.05);
    }
}
