//! Deterministic large-antenna approximations `γ̄` of the per-user SINR.
//!
//! All three detectors reduce to a handful of normalized traces of the form
//! `(1/N) tr(R_a Φ R_b Z)`. [`CellTraces`] computes every trace a cell needs
//! once (the `O(N³)` part); the per-user formulas afterwards only touch
//! `L×L` and `LK×LK` matrices.

#[allow(unused_imports)]
use num_traits::Float;
use alloc::format;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::detection::Detector;
use crate::error::{Error, Result};
use crate::estimation::EstimatorModel;
use crate::linalg::{
    c, cholesky, hermitian_inverse, hermitian_solve, hermitize, inner, product, psd_sqrt, trace, trace_of_product, CMatrix,
    ZERO,
};
use crate::metrics::rate_prefactor;
use crate::network::Network;
use crate::stats::ChannelStatistics;
use crate::table::UserTable;

/// SINR cap substituted for an infinite `γ̄` when converting to a rate.
pub const DEFAULT_SINR_CAP: f64 = 1e12;
/// Relative Schur complement of a pilot group below which M-MMSE is refused:
/// a residual norm of about 1e-11, the rounding floor of its construction.
pub const MIN_RELATIVE_MARGIN: f64 = 1e-22;

/// Denominator terms of the MRC approximation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MrcComponents {
    pub signal: f64,
    pub los_intra: f64,
    pub pilot_contamination: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MrcAsymptotic {
    pub gamma: f64,
    /// The value with the LoS intra-cell term dropped.
    pub favorable: f64,
    pub components: MrcComponents,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmmseComponents {
    pub pilot_contamination: f64,
    pub uncorrelated_inter_cell: f64,
    /// `|1 − [Q]_kk / N|²`, the finite-`N` signal term.
    pub appendix_signal: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SmmseAsymptotic {
    /// Unit numerator over the two interference sums.
    pub gamma: f64,
    /// Same denominator with the finite-`N` signal term as numerator.
    pub appendix_gamma: f64,
    pub components: SmmseComponents,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MmmseAsymptotic {
    pub gamma_over_n: f64,
    pub gamma: f64,
    /// `1 / [T⁻¹]₁₁`
    pub scattered: f64,
    /// `(1/N) h̄ᴴ Q̄ h̄`
    pub los: f64,
}

/// Linear-independence margins of the covariances `{R_{jlk}}_l` of one
/// pilot group.
#[derive(Debug, Clone, PartialEq)]
pub struct Assumption2 {
    /// `(1/N)‖residual‖²_F` of `R_{jl'k}` against the span of the others.
    pub per_cell: Vec<f64>,
    /// The same residuals relative to `(1/N)‖R_{jl'k}‖²_F`.
    pub relative: Vec<f64>,
}

impl Assumption2 {
    pub fn margin(&self) -> f64 {
        self.per_cell.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn relative_margin(&self) -> f64 {
        self.relative.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Residual of each `R_{jl'k}` after projection onto the span of the other
/// cells' covariances, under `⟨A, B⟩ = tr(Aᴴ B)`.
///
/// Vectors whose remaining norm falls below `tol` times their original norm
/// are dropped from the basis.
pub fn check_assumption2(stats: &ChannelStatistics, j: usize, k: usize, tol: f64) -> Assumption2 {
    let n = stats.antennas() as f64;
    let cells = stats.cells();
    let flat: Vec<Vec<Complex64>> = (0..cells).map(|l| stats.r(j, l, k).iter().copied().collect()).collect();
    let mut per_cell = Vec::with_capacity(cells);
    let mut relative = Vec::with_capacity(cells);
    for target in 0..cells {
        let (res, own) = projection_residual(&flat, target, tol);
        per_cell.push(res / n);
        relative.push(if own > 0.0 { res / own } else { 0.0 });
    }
    Assumption2 { per_cell, relative }
}

/// `(‖r‖², ‖v_target‖²)` where `r` is `v_target` minus its projection onto
/// the span of the other vectors (Gram-Schmidt, two passes).
fn projection_residual(vectors: &[Vec<Complex64>], target: usize, tol: f64) -> (f64, f64) {
    let norm_sq = |a: &[Complex64]| a.iter().map(|z| z.norm_sqr()).sum::<f64>();
    let mut basis: Vec<Vec<Complex64>> = Vec::new();
    for (l, v) in vectors.iter().enumerate() {
        if l == target {
            continue;
        }
        let original = norm_sq(v).sqrt();
        let mut w = v.clone();
        orthogonalize(&mut w, &basis);
        let left = norm_sq(&w).sqrt();
        if original > 0.0 && left > tol * original {
            w.iter_mut().for_each(|z| *z /= left);
            basis.push(w);
        }
    }
    let mut residual = vectors[target].clone();
    orthogonalize(&mut residual, &basis);
    (norm_sq(&residual), norm_sq(&vectors[target]))
}

fn orthogonalize(w: &mut [Complex64], basis: &[Vec<Complex64>]) {
    for _ in 0..2 {
        for q in basis {
            let p: Complex64 = q.iter().zip(w.iter()).map(|(x, y)| x.conj() * y).sum();
            w.iter_mut().zip(q).for_each(|(x, y)| *x -= y * p);
        }
    }
}

/// Every normalized trace cell `j` needs, for all of its users.
#[derive(Debug, Clone)]
pub struct CellTraces {
    cell: usize,
    cells: usize,
    users: usize,
    antennas: usize,
    /// `(1/N) tr R̃_{jjk}`
    rtilde: Vec<f64>,
    /// `(1/N) tr(R_{jjk} Φ_{jk} R_{jlk})`, index `k·L + l`.
    contamination: Vec<Complex64>,
    /// `β^S_{ji,lj}`, index `i·L + l`; present with a `Z^S` design.
    beta_s: Option<Vec<Complex64>>,
    /// `β^M_{jk,nm}`, index `(k·L + n)·L + m`; present with `Z^M`.
    beta_m: Option<Vec<Complex64>>,
    /// Per pilot group `k`: `1/[T_{jk}⁻¹]₁₁` and the same value relative
    /// to `[T_{jk}]₁₁`; present with `Z^M`.
    schur: Option<Vec<(f64, f64)>>,
    hbar: CMatrix,
    zs: Option<CMatrix>,
    zm: Option<CMatrix>,
}

impl CellTraces {
    /// Computes the traces of cell `j`. `zs` and `zm` are optional; the
    /// corresponding detectors are unavailable without them.
    pub fn build(
        stats: &ChannelStatistics,
        model: &EstimatorModel,
        zs: Option<&CMatrix>,
        zm: Option<&CMatrix>,
        j: usize,
    ) -> Self {
        let (cells, users, n) = (stats.cells(), stats.users(), stats.antennas());
        let nf = n as f64;
        // R_{jli} Φ_{ji}
        let rphi: Vec<CMatrix> = (0..users)
            .flat_map(|i| (0..cells).map(move |l| (i, l)))
            .map(|(i, l)| product(stats.r(j, l, i), model.phi(j, i)))
            .collect();
        let at = |i: usize, l: usize| &rphi[i * cells + l];
        let rtilde = (0..users).map(|k| trace(model.rtilde(j, j, k)).re / nf).collect();
        let contamination = (0..users)
            .flat_map(|k| (0..cells).map(move |l| (k, l)))
            .map(|(k, l)| trace_of_product(at(k, j), stats.r(j, l, k)) / nf)
            .collect();
        let beta_s = zs.map(|z| {
            let rz: Vec<CMatrix> = (0..users).map(|i| product(stats.r(j, j, i), z)).collect();
            (0..users)
                .flat_map(|i| (0..cells).map(move |l| (i, l)))
                .map(|(i, l)| trace_of_product(at(i, l), &rz[i]) / nf)
                .collect()
        });
        // β^M_{jk,nm} = (1/N)⟨X_n, X_m⟩_F with X_m = L_Φᴴ R_{jmk} L_Z,
        // Φ = L_Φ L_Φᴴ and Z = L_Z L_Zᴴ. The Schur complement of T_{jk} is
        // taken as a projection residual of the X_m themselves: going
        // through T would square its (often huge) condition number.
        let (beta_m, schur) = match zm {
            None => (None, None),
            Some(z) => {
                let lz = cholesky(z, "Z^M").map(|f| f.l()).unwrap_or_else(|_| psd_sqrt(z));
                let mut beta = Vec::with_capacity(users * cells * cells);
                let mut schur = Vec::with_capacity(users);
                for k in 0..users {
                    let phi = model.phi(j, k);
                    let lphi = cholesky(phi, "Φ").map(|f| f.l()).unwrap_or_else(|_| psd_sqrt(phi)).adjoint();
                    let xs: Vec<Vec<Complex64>> = (0..cells)
                        .map(|m| product(&product(&lphi, stats.r(j, m, k)), &lz).iter().copied().collect())
                        .collect();
                    for xn in &xs {
                        for xm in &xs {
                            beta.push(xn.iter().zip(xm).map(|(a, b)| a.conj() * b).sum::<Complex64>() / nf);
                        }
                    }
                    let (res, own) = projection_residual(&xs, j, 1e-14);
                    schur.push((res / nf, if own > 0.0 { res / own } else { 0.0 }));
                }
                (Some(beta), Some(schur))
            }
        };
        Self {
            cell: j,
            cells,
            users,
            antennas: n,
            rtilde,
            contamination,
            beta_s,
            beta_m,
            schur,
            hbar: stats.hbar_matrix(j).clone(),
            zs: zs.cloned(),
            zm: zm.cloned(),
        }
    }

    fn beta_s(&self, i: usize, l: usize) -> Complex64 {
        self.beta_s.as_ref().expect("Z^S traces")[i * self.cells + l]
    }

    fn beta_m(&self, k: usize, n: usize, m: usize) -> Complex64 {
        self.beta_m.as_ref().expect("Z^M traces")[(k * self.cells + n) * self.cells + m]
    }

    /// MRC approximation of user `k`.
    pub fn mrc(&self, k: usize) -> MrcAsymptotic {
        let nf = self.antennas as f64;
        let j = self.cell;
        let own = self.hbar.column(k);
        let signal = (self.rtilde[k] + own.norm_squared() / nf).powi(2);
        let los_intra: f64 = (0..self.users)
            .filter(|&i| i != k)
            .map(|i| own.dotc(&self.hbar.column(i)).norm_sqr() / (nf * nf))
            .sum();
        let pilot_contamination: f64 =
            (0..self.cells).filter(|&l| l != j).map(|l| self.contamination[k * self.cells + l].norm_sqr()).sum();
        MrcAsymptotic {
            gamma: ratio(signal, los_intra + pilot_contamination),
            favorable: ratio(signal, pilot_contamination),
            components: MrcComponents { signal, los_intra, pilot_contamination },
        }
    }

    /// `Q_j = ((1/N) H̄ᴴ Z^S H̄ + diag{β^S_{ji,jj}})⁻¹`.
    pub fn q_matrix(&self) -> Result<CMatrix> {
        let z = self.zs.as_ref().ok_or(Error::validation("S-MMSE approximation needs a Z^S design"))?;
        let nf = self.antennas as f64;
        let mut m = self.hbar.adjoint() * product(z, &self.hbar) / c(nf, 0.0);
        for i in 0..self.users {
            m[(i, i)] += self.beta_s(i, self.cell);
        }
        hermitize(&mut m);
        hermitian_inverse(&m, "S-MMSE matrix Q_j⁻¹")
    }

    /// S-MMSE approximation of user `k` given `Q_j` from [`Self::q_matrix`].
    pub fn smmse(&self, q: &CMatrix, k: usize) -> SmmseAsymptotic {
        let j = self.cell;
        let others = || (0..self.cells).filter(move |&l| l != j);
        let pilot_contamination: f64 = others().map(|l| (q[(k, k)] * self.beta_s(k, l)).norm_sqr()).sum();
        let uncorrelated_inter_cell: f64 = others()
            .flat_map(|l| (0..self.users).filter(|&i| i != k).map(move |i| (l, i)))
            .map(|(l, i)| (q[(k, i)] * self.beta_s(i, l)).norm_sqr())
            .sum();
        let appendix_signal = (c(1.0, 0.0) - q[(k, k)] / c(self.antennas as f64, 0.0)).norm_sqr();
        let denominator = pilot_contamination + uncorrelated_inter_cell;
        SmmseAsymptotic {
            gamma: ratio(1.0, denominator),
            appendix_gamma: ratio(appendix_signal, denominator),
            components: SmmseComponents { pilot_contamination, uncorrelated_inter_cell, appendix_signal },
        }
    }

    /// `T_{jk}`: `L×L`, cell `j` first, then the other cells ascending.
    pub fn t_matrix(&self, k: usize) -> CMatrix {
        let order = self.cell_order();
        let mut t = CMatrix::from_fn(self.cells, self.cells, |a, b| self.beta_m(k, order[a], order[b]));
        hermitize(&mut t);
        t
    }

    /// `D_{jk}`: `L(K−1)` square, block `(u, v)` is `diag{β^M_{jm,uv}}_{m≠k}`.
    pub fn d_matrix(&self, k: usize) -> CMatrix {
        let others: Vec<usize> = (0..self.users).filter(|&m| m != k).collect();
        let w = others.len();
        let size = self.cells * w;
        let mut d = CMatrix::from_fn(size, size, |r, s| {
            let (u, a) = (r / w, r % w);
            let (v, b) = (s / w, s % w);
            if a == b {
                self.beta_m(others[a], u, v)
            } else {
                ZERO
            }
        });
        hermitize(&mut d);
        d
    }

    /// `H̄_{j,/k}`: `N × L(K−1)`, zero except the block of cell `j`.
    pub fn hbar_without(&self, k: usize) -> CMatrix {
        let others: Vec<usize> = (0..self.users).filter(|&m| m != k).collect();
        let w = others.len();
        CMatrix::from_fn(self.antennas, self.cells * w, |r, s| {
            if s / w == self.cell {
                self.hbar[(r, others[s % w])]
            } else {
                ZERO
            }
        })
    }

    /// M-MMSE approximation of user `k`.
    ///
    /// `D_{jk}` is block diagonal across pilot groups once permuted, so
    /// `H̄_{j,/k} D⁻¹ H̄ᴴ_{j,/k} = Σ_{m≠k} h̄_m h̄_mᴴ / s_m` with `s_m` the
    /// Schur complement of group `m`; that is the form evaluated here.
    pub fn mmmse(&self, k: usize) -> Result<MmmseAsymptotic> {
        let z = self.zm.as_ref().ok_or(Error::validation("M-MMSE approximation needs Z^M"))?;
        let schur = self.schur.as_ref().expect("Schur complements built with Z^M");
        let cell = self.cell;
        for (m, &(_, rel)) in schur.iter().enumerate() {
            if !(rel > MIN_RELATIVE_MARGIN) {
                let which = if m == k { "T_{jk}" } else { "D_{jk}" };
                let detail = format!("{which} is singular: pilot group {m} has relative margin {rel:.3e}");
                return Err(Error::LinearlyDependent { cell, user: k, detail });
            }
        }
        let scattered = schur[k].0;

        let nf = self.antennas as f64;
        let h = self.hbar.column(k).into_owned();
        let mut los = inner(&h, &(z * &h)).re;
        let others: Vec<usize> = (0..self.users).filter(|&m| m != k).collect();
        if !others.is_empty() {
            // (Z⁻¹ + Σ h̄h̄ᴴ/(N s))⁻¹ = Z − ZH̄ (N S + H̄ᴴZH̄)⁻¹ H̄ᴴZ
            let hb = CMatrix::from_fn(self.antennas, others.len(), |r, s| self.hbar[(r, others[s])]);
            let zhb = z * &hb;
            let mut core_m = hb.adjoint() * &zhb;
            for (s, &m) in others.iter().enumerate() {
                core_m[(s, s)] += c(nf * schur[m].0, 0.0);
            }
            hermitize(&mut core_m);
            let rhs = zhb.adjoint() * &h;
            let x = hermitian_solve(&core_m, &rhs, "M-MMSE LoS core")?;
            los -= inner(&rhs, &x).re;
        }
        let los = (los / nf).max(0.0);
        let gamma_over_n = scattered + los;
        Ok(MmmseAsymptotic { gamma_over_n, gamma: gamma_over_n * nf, scattered, los })
    }

    fn cell_order(&self) -> Vec<usize> {
        core::iter::once(self.cell).chain((0..self.cells).filter(|&l| l != self.cell)).collect()
    }
}

fn ratio(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        num / den
    } else {
        f64::INFINITY
    }
}

/// MRC approximation of user `(j, k)`.
pub fn gamma_mrc_asymptotic(stats: &ChannelStatistics, model: &EstimatorModel, j: usize, k: usize) -> MrcAsymptotic {
    CellTraces::build(stats, model, None, None, j).mrc(k)
}

/// S-MMSE approximation of user `(j, k)` with the exact design matrix `zs`.
pub fn gamma_smmse_asymptotic(
    stats: &ChannelStatistics,
    model: &EstimatorModel,
    zs: &CMatrix,
    j: usize,
    k: usize,
) -> Result<(SmmseAsymptotic, CMatrix)> {
    let traces = CellTraces::build(stats, model, Some(zs), None, j);
    let q = traces.q_matrix()?;
    Ok((traces.smmse(&q, k), q))
}

/// M-MMSE approximation of user `(j, k)` with regularizer `zm = Z^M_j`.
pub fn gamma_mmmse_asymptotic(
    stats: &ChannelStatistics,
    model: &EstimatorModel,
    zm: &CMatrix,
    j: usize,
    k: usize,
) -> Result<MmmseAsymptotic> {
    CellTraces::build(stats, model, None, Some(zm), j).mmmse(k)
}

/// `(1 − τ/T_c)/K · ln(1 + min(γ̄, cap))`; returns whether the cap applied.
pub fn asymptotic_rate(gamma: f64, prefactor: f64, cap: f64) -> (f64, bool) {
    let capped = !(gamma <= cap);
    (prefactor * gamma.min(cap).ln_1p(), capped)
}

#[derive(Debug, Clone)]
pub struct UserAsymptotics {
    pub mrc: MrcAsymptotic,
    pub smmse: SmmseAsymptotic,
    pub mmmse: core::result::Result<MmmseAsymptotic, Error>,
    pub assumption2: Assumption2,
}

#[derive(Debug, Clone)]
pub struct AsymptoticReport {
    pub users: UserTable<UserAsymptotics>,
    /// `Q_j` per cell.
    pub q: Vec<CMatrix>,
    prefactor: f64,
}

impl AsymptoticReport {
    /// `γ̄` of a detector, `None` when M-MMSE was refused.
    pub fn gamma(&self, detector: Detector, j: usize, k: usize) -> Option<f64> {
        let u = self.users.get(j, k);
        match detector {
            Detector::Mrc => Some(u.mrc.gamma),
            Detector::Smmse => Some(u.smmse.gamma),
            Detector::Mmmse => u.mmmse.as_ref().ok().map(|m| m.gamma),
        }
    }

    /// Per-user rate in nats (same weighting as the empirical rates) and
    /// whether the SINR cap was hit.
    pub fn rate(&self, detector: Detector, j: usize, k: usize, cap: f64) -> Option<(f64, bool)> {
        self.gamma(detector, j, k).map(|g| asymptotic_rate(g, self.prefactor, cap))
    }
}

/// Evaluates every approximation for every user of the network.
pub fn analyze(net: &Network) -> Result<AsymptoticReport> {
    let (cells, users) = (net.cells(), net.users());
    let mut per_user: Vec<UserAsymptotics> = Vec::with_capacity(cells * users);
    let mut qs = Vec::with_capacity(cells);
    for j in 0..cells {
        let traces =
            CellTraces::build(net.stats(), net.estimator(), Some(&net.zs(j).design), Some(&net.zm(j).z), j);
        let q = traces.q_matrix()?;
        for k in 0..users {
            let assumption2 = check_assumption2(net.stats(), j, k, 1e-12);
            let mmmse = match traces.mmmse(k) {
                Err(e @ Error::LinearlyDependent { .. }) => Err(e),
                other => Ok(other?),
            };
            per_user.push(UserAsymptotics { mrc: traces.mrc(k), smmse: traces.smmse(&q, k), mmmse, assumption2 });
        }
        qs.push(q);
    }
    let cfg = net.config();
    Ok(AsymptoticReport {
        users: UserTable::from_vec(cells, users, per_user).expect("one entry per user"),
        q: qs,
        prefactor: rate_prefactor(cfg.pilot_length, cfg.coherence, cfg.users),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detection::{build_zm, ZsConfig, ZsMode};
    use crate::linalg::{scaled_identity, CVector};
    use crate::scenario::{build_los_steering, ScenarioConfig};
    use crate::table::LinkTable;

    fn isotropic(
        cells: usize,
        users: usize,
        n: usize,
        beta: impl Fn(usize, usize, usize) -> f64,
        kappa: f64,
    ) -> ChannelStatistics {
        let theta = LinkTable::from_fn(cells, users, |_, _, _| CMatrix::identity(n, n));
        let beta = LinkTable::from_fn(cells, users, beta);
        let kappa = UserTable::filled(cells, users, kappa);
        let steering = UserTable::from_fn(cells, users, |_, k| build_los_steering(0.3 * k as f64, n));
        ChannelStatistics::from_parts(theta, beta, kappa, &steering)
    }

    #[test]
    fn mrc_isotropic_closed_form() {
        for (tau, rho) in [(1, 1.0), (2, 5.0), (3, 0.1)] {
            let stats = isotropic(2, 1, 16, |j, l, _| if j == l { 1.0 } else { 0.5 }, 0.0);
            let model = EstimatorModel::build(&stats, tau, rho).unwrap();
            for j in 0..2 {
                let mrc = gamma_mrc_asymptotic(&stats, &model, j, 0);
                assert!((mrc.gamma - 4.0).abs() < 1e-10, "{}", mrc.gamma);
                assert_eq!(mrc.components.los_intra, 0.0);
            }
        }
    }

    #[test]
    fn mrc_same_angle_interferer_hits_cauchy_schwarz() {
        let n = 12;
        let theta = LinkTable::from_fn(2, 2, |_, _, _| CMatrix::identity(n, n));
        let steering = UserTable::from_fn(2, 2, |_, _| build_los_steering(0.2, n));
        let stats = ChannelStatistics::from_parts(
            theta,
            LinkTable::from_fn(2, 2, |j, l, _| if j == l { 1.0 } else { 0.3 }),
            UserTable::from_fn(2, 2, |_, k| 0.5 + k as f64),
            &steering,
        );
        let model = EstimatorModel::build(&stats, 2, 1.0).unwrap();
        let mrc = gamma_mrc_asymptotic(&stats, &model, 0, 0);
        let nf = n as f64;
        let expect = stats.hbar(0, 0).norm_squared() * stats.hbar(0, 1).norm_squared() / (nf * nf);
        assert!((mrc.components.los_intra - expect).abs() <= 1e-12 * expect);
    }

    #[test]
    fn favorable_matches_with_orthogonal_steering() {
        let n = 8;
        // sin θ = 2m/N gives exactly orthogonal steering vectors
        let angles = [0.0, (2.0 / n as f64).asin()];
        let theta = LinkTable::from_fn(2, 2, |_, _, _| CMatrix::identity(n, n));
        let steering = UserTable::from_fn(2, 2, |_, k| build_los_steering(angles[k], n));
        let stats = ChannelStatistics::from_parts(
            theta,
            LinkTable::from_fn(2, 2, |j, l, _| if j == l { 1.0 } else { 0.2 }),
            UserTable::filled(2, 2, 1.0),
            &steering,
        );
        let model = EstimatorModel::build(&stats, 2, 1.0).unwrap();
        let mrc = gamma_mrc_asymptotic(&stats, &model, 0, 1);
        assert!(mrc.components.los_intra < 1e-28);
        assert!((mrc.gamma - mrc.favorable).abs() <= 1e-12 * mrc.gamma);
    }

    #[test]
    fn single_cell_is_flagged_infinite() {
        let stats = isotropic(1, 1, 4, |_, _, _| 1.0, 0.0);
        let model = EstimatorModel::build(&stats, 1, 1.0).unwrap();
        let mrc = gamma_mrc_asymptotic(&stats, &model, 0, 0);
        assert!(mrc.gamma.is_infinite() && mrc.favorable.is_infinite());
        let (s, _) = gamma_smmse_asymptotic(&stats, &model, &scaled_identity(4, 1.0), 0, 0).unwrap();
        assert!(s.gamma.is_infinite());
        assert_eq!(asymptotic_rate(f64::INFINITY, 1.0, 1e12), (1e12f64.ln_1p(), true));
    }

    #[test]
    fn smmse_plain_single_user_equals_favorable_mrc() {
        let cfg = ScenarioConfig::default_exponential(24, 5).unwrap().with_uniform_kappa(0.0);
        let stats = ChannelStatistics::build(&cfg).unwrap();
        // keep only user 0: rebuild with K=1
        let one = ChannelStatistics::from_parts(
            LinkTable::from_fn(4, 1, |j, l, _| stats.theta(j, l, 0).clone()),
            LinkTable::from_fn(4, 1, |j, l, _| stats.beta(j, l, 0)),
            UserTable::filled(4, 1, 0.0),
            &UserTable::from_fn(4, 1, |_, _| CVector::zeros(24)),
        );
        let model = EstimatorModel::build(&one, 1, 1.0).unwrap();
        for j in 0..4 {
            let (s, _) = gamma_smmse_asymptotic(&one, &model, &scaled_identity(24, 1.0), j, 0).unwrap();
            let f = gamma_mrc_asymptotic(&one, &model, j, 0).favorable;
            assert!((s.gamma - f).abs() <= 1e-10 * f, "{} {}", s.gamma, f);
        }
    }

    #[test]
    fn projector_design_diagonalizes_q() {
        let cfg = ScenarioConfig::default_exponential(32, 3).unwrap();
        let net = Network::build(&cfg, &ZsConfig { mode: ZsMode::LosProjector, ..Default::default() }).unwrap();
        let report = analyze(&net).unwrap();
        for q in &report.q {
            assert!(q[(0, 1)].norm() <= 1e-10 && q[(1, 0)].norm() <= 1e-10);
        }
        for u in report.users.iter() {
            assert!(u.smmse.components.uncorrelated_inter_cell <= 1e-18);
        }
    }

    #[test]
    fn mmmse_scalar_case() {
        for n in [1, 7, 32] {
            let stats = isotropic(1, 1, n, |_, _, _| 1.0, 0.0);
            let model = EstimatorModel::build(&stats, 1, 1.0).unwrap();
            let zm = build_zm(&stats, &model, 2.0, 0).unwrap();
            assert!((&zm.z - CMatrix::identity(n, n)).norm() < 1e-14);
            let m = gamma_mmmse_asymptotic(&stats, &model, &zm.z, 0, 0).unwrap();
            assert!((m.gamma_over_n - 0.5).abs() < 1e-10);
            assert!((m.gamma - n as f64 / 2.0).abs() < 1e-9);
            assert_eq!(m.los, 0.0);
        }
    }

    #[test]
    fn mmmse_refuses_identical_covariances() {
        let stats = isotropic(2, 1, 6, |j, l, _| if j == l { 1.0 } else { 0.4 }, 0.0);
        let model = EstimatorModel::build(&stats, 1, 1.0).unwrap();
        let a2 = check_assumption2(&stats, 0, 0, 1e-12);
        assert!(a2.margin() <= 1e-12);
        let zm = build_zm(&stats, &model, 1.0, 0).unwrap();
        let err = gamma_mmmse_asymptotic(&stats, &model, &zm.z, 0, 0).unwrap_err();
        assert!(matches!(err, Error::LinearlyDependent { cell: 0, user: 0, .. }));
    }

    #[test]
    fn assumption2_orthogonal_diagonals() {
        let n = 2;
        let theta = LinkTable::from_fn(2, 1, |_, l, _| {
            let mut m = CMatrix::zeros(n, n);
            m[(l, l)] = c(1.0, 0.0);
            m
        });
        let stats = ChannelStatistics::from_parts(
            theta,
            LinkTable::filled(2, 1, 1.0),
            UserTable::filled(2, 1, 0.0),
            &UserTable::from_fn(2, 1, |_, _| CVector::zeros(n)),
        );
        let a2 = check_assumption2(&stats, 0, 0, 1e-12);
        for m in &a2.per_cell {
            assert!((m - 0.5).abs() < 1e-15);
        }
        assert!((a2.relative_margin() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn t_matrix_is_hermitian_and_gamma_scales_with_n() {
        let mut prev = None;
        for n in [16, 32] {
            let cfg = ScenarioConfig::default_exponential(n, 9).unwrap();
            let net = Network::build(&cfg, &ZsConfig::default()).unwrap();
            let traces = CellTraces::build(net.stats(), net.estimator(), None, Some(&net.zm(1).z), 1);
            let t = traces.t_matrix(0);
            for a in 0..4 {
                assert!(t[(a, a)].re >= 0.0);
                for b in 0..4 {
                    let raw_ab = traces.beta_m(0, a, b);
                    let raw_ba = traces.beta_m(0, b, a);
                    assert!((raw_ab - raw_ba.conj()).norm() <= 1e-12 * raw_ab.norm().max(1.0));
                }
            }
            let report = analyze(&net).unwrap();
            let g = report.gamma(Detector::Mmmse, 1, 0).unwrap();
            if let Some(p) = prev {
                assert!(g > p);
            }
            prev = Some(g);
        }
    }

    #[test]
    fn stable_mmmse_matches_literal_block_formulas() {
        // σ_c = 6 dB diagonals are far from collinear, so T and D are well
        // conditioned and the literal expressions are accurate.
        let cfg = ScenarioConfig::default_lognormal(24, 6.0, 17).unwrap();
        let net = Network::build(&cfg, &ZsConfig::default()).unwrap();
        let nf = 24.0;
        for j in 0..4 {
            let z = &net.zm(j).z;
            let traces = CellTraces::build(net.stats(), net.estimator(), None, Some(z), j);
            for k in 0..2 {
                let got = traces.mmmse(k).unwrap();
                let t_inv = hermitian_inverse(&traces.t_matrix(k), "T").unwrap();
                let scattered = 1.0 / t_inv[(0, 0)].re;
                let d_inv = hermitian_inverse(&traces.d_matrix(k), "D").unwrap();
                let hb = traces.hbar_without(k);
                let mut q_inv = &hb * d_inv * hb.adjoint() / c(nf, 0.0) + &net.zm(j).z_inv;
                hermitize(&mut q_inv);
                let q = hermitian_inverse(&q_inv, "Q̄").unwrap();
                let h = net.stats().hbar(j, k);
                let los = inner(h, &(&q * h)).re / nf;
                assert!((got.scattered - scattered).abs() <= 1e-9 * scattered, "{} {}", got.scattered, scattered);
                assert!((got.los - los).abs() <= 1e-9 * los.max(1e-12), "{} {}", got.los, los);
            }
        }
    }

    #[test]
    fn components_nonnegative_on_default_scenario() {
        let cfg = ScenarioConfig::default_exponential(24, 4).unwrap();
        let net = Network::build(&cfg, &ZsConfig::default()).unwrap();
        let report = analyze(&net).unwrap();
        for u in report.users.iter() {
            let m = u.mrc.components;
            assert!(m.signal > 0.0 && m.los_intra >= 0.0 && m.pilot_contamination >= 0.0);
            let s = u.smmse.components;
            assert!(s.pilot_contamination >= 0.0 && s.uncorrelated_inter_cell >= 0.0);
            assert!(u.mmmse.is_ok());
        }
    }
}
