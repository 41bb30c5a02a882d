//! Linear receive combiners: MRC, single-cell MMSE (S-MMSE) and multi-cell
//! MMSE (M-MMSE).
//!
//! The MMSE combiners solve `(Σ ĥĥᴴ + Z⁻¹) g = ĥ_{jjk}`. The Gram part has
//! rank at most `LK` while `Z` is fixed per scenario, so every solve goes
//! through [`LowRankInverse`] and one factorization serves all users of a
//! cell.

#[allow(unused_imports)]
use num_traits::Float;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::error::{Error, Result};
use crate::estimation::{EstimateSet, EstimatorModel, Scope};
use crate::linalg::{c, cholesky, hermitian_inverse, hermitize, scaled_identity, CMatrix, CVector, LowRankInverse};
use crate::stats::ChannelStatistics;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Detector {
    Mrc,
    Smmse,
    Mmmse,
}

impl Detector {
    pub const ALL: [Detector; 3] = [Detector::Mrc, Detector::Smmse, Detector::Mmmse];

    pub fn name(self) -> &'static str {
        match self {
            Detector::Mrc => "mrc",
            Detector::Smmse => "smmse",
            Detector::Mmmse => "mmmse",
        }
    }
}

impl fmt::Display for Detector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Detector {
    type Err = String;

    fn from_str(s: &str) -> core::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "mrc" => Ok(Detector::Mrc),
            "smmse" | "s-mmse" => Ok(Detector::Smmse),
            "mmmse" | "m-mmse" => Ok(Detector::Mmmse),
            other => Err(alloc::format!("unknown detector '{other}' (expected mrc, smmse or mmmse)")),
        }
    }
}

/// Design of the S-MMSE regularizer `Z^S_j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ZsMode {
    /// `Z^S = ρ_d I`.
    #[default]
    Plain,
    /// `(Z^S)⁻¹ = I/ρ_d + Σ_i (R_{jji} − R̃_{jji}) + Σ_{l≠j} Σ_i R_{jli}`.
    CovDesign,
    /// `Z^S = H̄ (H̄ᴴH̄)⁻¹ D (H̄ᴴH̄)⁻¹ H̄ᴴ`, which makes `Q_j` diagonal.
    LosProjector,
}

impl ZsMode {
    pub fn name(self) -> &'static str {
        match self {
            ZsMode::Plain => "plain",
            ZsMode::CovDesign => "cov_design",
            ZsMode::LosProjector => "los_projector",
        }
    }
}

impl fmt::Display for ZsMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ZsMode {
    type Err = String;

    fn from_str(s: &str) -> core::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "plain" => Ok(ZsMode::Plain),
            "cov_design" | "cov" => Ok(ZsMode::CovDesign),
            "los_projector" | "projector" => Ok(ZsMode::LosProjector),
            other => Err(alloc::format!("unknown Z^S mode '{other}' (expected plain, cov_design or los_projector)")),
        }
    }
}

/// S-MMSE regularizer settings.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ZsConfig {
    pub mode: ZsMode,
    /// Ridge added to the projector before inversion; `1e-6·ρ_d` when unset.
    pub eps: Option<f64>,
    /// Diagonal of `D_j` in the projector design; identity when unset.
    pub d_diag: Option<Vec<f64>>,
}

pub const DEFAULT_EPS_FACTOR: f64 = 1e-6;

/// A Hermitian PD matrix `Z` paired with its inverse.
#[derive(Debug, Clone)]
pub struct Regularizer {
    pub z: CMatrix,
    pub z_inv: CMatrix,
}

impl Regularizer {
    /// Normwise relative residual `‖Z Z⁻¹ − I‖ / (‖Z‖ ‖Z⁻¹‖)` (Frobenius).
    pub fn inverse_residual(&self) -> f64 {
        let n = self.z.nrows();
        let prod = &self.z * &self.z_inv - CMatrix::identity(n, n);
        let norm = |m: &CMatrix| crate::linalg::frobenius_sq(m).sqrt();
        norm(&prod) / (norm(&self.z) * norm(&self.z_inv))
    }

    pub fn from_inverse(z_inv: CMatrix, context: &'static str) -> Result<Self> {
        let z = hermitian_inverse(&z_inv, context)?;
        Ok(Self { z, z_inv })
    }
}

/// `Z^S_j` for one cell.
#[derive(Debug, Clone)]
pub struct ZsDesign {
    pub mode: ZsMode,
    /// The design matrix itself; the exact (rank-K) projector in
    /// `LosProjector` mode. Used by the large-antenna approximation.
    pub design: CMatrix,
    /// The invertible pair consumed by the combiner.
    pub combiner: Regularizer,
}

/// Builds `Z^S_j` and the inverse used by the S-MMSE combiner.
pub fn build_zs(
    config: &ZsConfig,
    stats: &ChannelStatistics,
    model: &EstimatorModel,
    rho_d: f64,
    j: usize,
) -> Result<ZsDesign> {
    let n = stats.antennas();
    match config.mode {
        ZsMode::Plain => {
            let z = scaled_identity(n, rho_d);
            let combiner = Regularizer { z: z.clone(), z_inv: scaled_identity(n, 1.0 / rho_d) };
            Ok(ZsDesign { mode: config.mode, design: z, combiner })
        }
        ZsMode::CovDesign => {
            let mut z_inv = scaled_identity(n, 1.0 / rho_d);
            z_inv += model.total_error_covariance(stats, j, core::iter::once(j));
            for l in (0..stats.cells()).filter(|&l| l != j) {
                for i in 0..stats.users() {
                    z_inv += stats.r(j, l, i);
                }
            }
            hermitize(&mut z_inv);
            let combiner = Regularizer::from_inverse(z_inv, "S-MMSE covariance design")?;
            Ok(ZsDesign { mode: config.mode, design: combiner.z.clone(), combiner })
        }
        ZsMode::LosProjector => {
            let eps = config.eps.unwrap_or(DEFAULT_EPS_FACTOR * rho_d);
            if !(eps > 0.0 && eps.is_finite()) {
                return Err(Error::validation("projector ridge eps must be > 0"));
            }
            los_projector(stats.hbar_matrix(j), config.d_diag.as_deref(), eps, j)
        }
    }
}

fn los_projector(hbar: &CMatrix, d_diag: Option<&[f64]>, eps: f64, cell: usize) -> Result<ZsDesign> {
    let (n, users) = hbar.shape();
    let d: Vec<f64> = match d_diag {
        Some(d) if d.len() != users => {
            return Err(Error::validation(alloc::format!("D_j needs {users} diagonal entries (got {})", d.len())))
        }
        Some(d) if d.iter().any(|x| !(*x > 0.0 && x.is_finite())) => {
            return Err(Error::validation("D_j entries must be > 0"))
        }
        Some(d) => d.to_vec(),
        None => alloc::vec![1.0; users],
    };
    check_los_rank(hbar, cell)?;
    // With H̄ = U Rq (U orthonormal), the projector is U S Uᴴ where
    // S = Rq⁻ᴴ D Rq⁻¹. Building Z and Z⁻¹ in the (U, I − UUᴴ) split avoids
    // the 1/ε cancellation of a Woodbury update.
    let basis = orthonormal_basis(hbar);
    let rq = basis.adjoint() * hbar;
    let rq_inv = rq.try_inverse().ok_or(Error::RankDeficientLos { cell, first: 0, second: users.saturating_sub(1) })?;
    let dm = CMatrix::from_fn(users, users, |a, b| if a == b { c(d[a], 0.0) } else { c(0.0, 0.0) });
    let mut core_s = rq_inv.adjoint() * dm * &rq_inv;
    hermitize(&mut core_s);
    let mut design = &basis * &core_s * basis.adjoint();
    hermitize(&mut design);

    let complement = CMatrix::identity(n, n) - &basis * basis.adjoint();
    let mut shifted = core_s.clone();
    for i in 0..users {
        shifted[(i, i)] += c(eps, 0.0);
    }
    let shifted_inv = hermitian_inverse(&shifted, "projector core S + εI")?;
    let mut z = &basis * &shifted * basis.adjoint() + &complement * c(eps, 0.0);
    let mut z_inv = &basis * shifted_inv * basis.adjoint() + &complement * c(1.0 / eps, 0.0);
    hermitize(&mut z);
    hermitize(&mut z_inv);
    Ok(ZsDesign { mode: ZsMode::LosProjector, design, combiner: Regularizer { z, z_inv } })
}

/// Orthonormal basis of the column space by Gram-Schmidt with one full
/// re-orthogonalization pass, so `UᴴU = I` to a few ulps.
fn orthonormal_basis(m: &CMatrix) -> CMatrix {
    let mut basis = m.clone();
    for k in 0..basis.ncols() {
        let mut v = basis.column(k).into_owned();
        for _ in 0..2 {
            for prev in 0..k {
                let q = basis.column(prev);
                let proj = q.dotc(&v);
                v -= q * proj;
            }
        }
        let norm = v.norm();
        basis.set_column(k, &(v / c(norm, 0.0)));
    }
    basis
}

/// Fails when two LoS columns are collinear (or one vanishes).
fn check_los_rank(hbar: &CMatrix, cell: usize) -> Result<()> {
    let users = hbar.ncols();
    let norms: Vec<f64> = (0..users).map(|k| hbar.column(k).norm()).collect();
    for a in 0..users {
        if norms[a] == 0.0 {
            return Err(Error::RankDeficientLos { cell, first: a, second: a });
        }
    }
    let normalized = CMatrix::from_fn(hbar.nrows(), users, |n, k| hbar[(n, k)] / norms[k]);
    let gram = normalized.adjoint() * &normalized;
    if cholesky(&gram, "normalized LoS Gram").is_ok() && crate::linalg::min_eigenvalue(&gram) > 1e-10 {
        return Ok(());
    }
    let mut worst = (0, 1.min(users - 1), -1.0);
    for a in 0..users {
        for b in (a + 1)..users {
            let coh = gram[(a, b)].norm();
            if coh > worst.2 {
                worst = (a, b, coh);
            }
        }
    }
    Err(Error::RankDeficientLos { cell, first: worst.0, second: worst.1 })
}

/// `Z^M_j` with `(Z^M_j)⁻¹ = I/ρ_d + Σ_{l,i} (R_{jli} − R̃_{jli})`.
pub fn build_zm(stats: &ChannelStatistics, model: &EstimatorModel, rho_d: f64, j: usize) -> Result<Regularizer> {
    let n = stats.antennas();
    let mut z_inv = scaled_identity(n, 1.0 / rho_d);
    z_inv += model.total_error_covariance(stats, j, 0..stats.cells());
    hermitize(&mut z_inv);
    Regularizer::from_inverse(z_inv, "M-MMSE regularizer (Z^M)⁻¹")
}

/// MRC: `g = ĥ_{jjk}`.
pub fn mrc_combiner(estimates: &EstimateSet, j: usize, k: usize) -> CVector {
    estimates.local(j, k)
}

/// S-MMSE: `g = (Σ_i ĥ_{jji}ĥ_{jji}ᴴ + (Z^S)⁻¹)⁻¹ ĥ_{jjk}`.
pub fn smmse_combiner(estimates: &EstimateSet, zs: &Regularizer, j: usize, k: usize) -> Result<CVector> {
    let local = estimates.local_matrix(j);
    let solver = LowRankInverse::new(&zs.z, &local)?;
    Ok(solver.apply(&local.column(k).into_owned()))
}

/// M-MMSE: `g = (Σ_{l,i} ĥ_{jli}ĥ_{jli}ᴴ + (Z^M)⁻¹)⁻¹ ĥ_{jjk}`.
pub fn mmmse_combiner(estimates: &EstimateSet, zm: &Regularizer, j: usize, k: usize) -> Result<CVector> {
    require_multi_cell(estimates)?;
    let solver = LowRankInverse::new(&zm.z, estimates.cell_matrix(j))?;
    Ok(solver.apply(&estimates.local(j, k)))
}

fn require_multi_cell(estimates: &EstimateSet) -> Result<()> {
    match estimates.scope() {
        Scope::MultiCell => Ok(()),
        Scope::SingleCell => Err(Error::validation("M-MMSE needs multi-cell channel estimates")),
    }
}

/// Combiners of every user of cell `j`.
#[derive(Debug, Clone)]
pub struct CombinerSet {
    pub detector: Detector,
    pub zs_mode: Option<ZsMode>,
    pub g: Vec<CVector>,
}

impl CombinerSet {
    /// Builds all `K` combiners of a cell, sharing one factorization.
    pub fn for_cell(
        detector: Detector,
        estimates: &EstimateSet,
        zs: &ZsDesign,
        zm: &Regularizer,
        j: usize,
    ) -> Result<Self> {
        let users = estimates.users();
        let (g, zs_mode) = match detector {
            Detector::Mrc => ((0..users).map(|k| estimates.local(j, k)).collect(), None),
            Detector::Smmse => {
                let local = estimates.local_matrix(j);
                let solver = LowRankInverse::new(&zs.combiner.z, &local)?;
                ((0..users).map(|k| solver.apply(&local.column(k).into_owned())).collect(), Some(zs.mode))
            }
            Detector::Mmmse => {
                require_multi_cell(estimates)?;
                let solver = LowRankInverse::new(&zm.z, estimates.cell_matrix(j))?;
                ((0..users).map(|k| solver.apply(&estimates.local(j, k))).collect(), None)
            }
        };
        Ok(Self { detector, zs_mode, g })
    }
}
