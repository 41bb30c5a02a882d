//! Dense complex linear algebra used by the statistics, estimators and
//! combiners.
//!
//! Every Hermitian factorization symmetrizes its input first, `(B + Bᴴ)/2`,
//! so accumulated rounding in products such as `RΦR` never breaks the
//! Cholesky factorization.

#[allow(unused_imports)]
use num_traits::Float;
use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[inline]
pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Replaces `m` by its Hermitian part.
pub fn hermitize(m: &mut CMatrix) {
    let n = m.nrows();
    debug_assert_eq!(n, m.ncols());
    for i in 0..n {
        m[(i, i)] = c(m[(i, i)].re, 0.0);
        for j in (i + 1)..n {
            let avg = (m[(i, j)] + m[(j, i)].conj()) * 0.5;
            m[(i, j)] = avg;
            m[(j, i)] = avg.conj();
        }
    }
}

pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    let mut out = m.clone();
    hermitize(&mut out);
    out
}

/// Cholesky factorization of the Hermitian part of `m`.
pub fn cholesky(m: &CMatrix, context: &'static str) -> Result<Cholesky<Complex64, Dyn>> {
    let sym = hermitian_part(m);
    if sym.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NotPositiveDefinite { context });
    }
    let chol = Cholesky::new(sym).ok_or(Error::NotPositiveDefinite { context })?;
    // Complex square roots of negative pivots succeed, so check the factor.
    let l = chol.l_dirty();
    let pivots_ok = (0..l.nrows()).all(|i| {
        let d = l[(i, i)];
        d.re > 0.0 && d.re.is_finite() && d.im.abs() <= 1e-12 * d.re
    });
    if pivots_ok {
        Ok(chol)
    } else {
        Err(Error::NotPositiveDefinite { context })
    }
}

/// Inverse of a Hermitian positive definite matrix, returned Hermitian.
pub fn hermitian_inverse(m: &CMatrix, context: &'static str) -> Result<CMatrix> {
    let mut inv = cholesky(m, context)?.inverse();
    hermitize(&mut inv);
    Ok(inv)
}

pub fn hermitian_solve(m: &CMatrix, rhs: &CVector, context: &'static str) -> Result<CVector> {
    Ok(cholesky(m, context)?.solve(rhs))
}

/// `true` for a square matrix whose off-diagonal entries are exactly zero.
pub fn is_diagonal(m: &CMatrix) -> bool {
    let n = m.nrows();
    n == m.ncols() && (0..n).all(|i| (0..n).all(|j| i == j || m[(i, j)] == ZERO))
}

/// Principal square root of a Hermitian positive semi-definite matrix.
///
/// Negative eigenvalues produced by rounding are clamped to zero, so the
/// result is exactly PSD. Diagonal inputs skip the eigendecomposition.
pub fn psd_sqrt(m: &CMatrix) -> CMatrix {
    let n = m.nrows();
    if is_diagonal(m) {
        return CMatrix::from_fn(n, n, |i, j| {
            if i == j {
                c(m[(i, i)].re.max(0.0).sqrt(), 0.0)
            } else {
                ZERO
            }
        });
    }
    let eig = hermitian_part(m).symmetric_eigen();
    let mut scaled = eig.eigenvectors.clone();
    for (col, &lambda) in eig.eigenvalues.iter().enumerate() {
        let s = lambda.max(0.0).sqrt();
        scaled.column_mut(col).scale_mut(s);
    }
    let mut root = &scaled * eig.eigenvectors.adjoint();
    hermitize(&mut root);
    root
}

/// Smallest eigenvalue of the Hermitian part of `m`.
pub fn min_eigenvalue(m: &CMatrix) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    hermitian_part(m)
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Eigenvalues of the Hermitian part of `m`, ascending.
pub fn eigenvalues(m: &CMatrix) -> alloc::vec::Vec<f64> {
    let mut ev: alloc::vec::Vec<f64> = hermitian_part(m).symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

/// `tr(A B)` without forming the product.
pub fn trace_of_product(a: &CMatrix, b: &CMatrix) -> Complex64 {
    debug_assert_eq!(a.ncols(), b.nrows());
    debug_assert_eq!(a.nrows(), b.ncols());
    let mut acc = ZERO;
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            acc += a[(i, j)] * b[(j, i)];
        }
    }
    acc
}

/// `A B` with fast paths when either factor is diagonal.
pub fn product(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (da, db) = (is_diagonal(a), is_diagonal(b));
    match (da, db) {
        (true, true) => CMatrix::from_fn(a.nrows(), b.ncols(), |i, j| if i == j { a[(i, i)] * b[(i, i)] } else { ZERO }),
        (false, true) => CMatrix::from_fn(a.nrows(), b.ncols(), |i, j| a[(i, j)] * b[(j, j)]),
        (true, false) => CMatrix::from_fn(a.nrows(), b.ncols(), |i, j| a[(i, i)] * b[(i, j)]),
        (false, false) => gemm(a, b),
    }
}

/// Dense `A B` through a blocked complex kernel; nalgebra's generic
/// complex product is several times slower for `N` in the hundreds.
pub fn gemm(a: &CMatrix, b: &CMatrix) -> CMatrix {
    assert_eq!(a.ncols(), b.nrows(), "gemm: inner dimensions differ");
    let (m, k, n) = (a.nrows(), a.ncols(), b.ncols());
    let mut out = CMatrix::zeros(m, n);
    if m == 0 || n == 0 || k == 0 {
        return out;
    }
    let (rs_a, cs_a) = a.strides();
    let (rs_b, cs_b) = b.strides();
    let (rs_c, cs_c) = out.strides();
    // SAFETY: Complex64 is repr(C) {re, im}, the layout of [f64; 2]. The
    // pointers and (column-major) strides describe the full, live buffers of
    // `a`, `b` and `out`, and `out` does not alias the inputs.
    unsafe {
        matrixmultiply::zgemm(
            matrixmultiply::CGemmOption::Standard,
            matrixmultiply::CGemmOption::Standard,
            m,
            k,
            n,
            [1.0, 0.0],
            a.as_ptr().cast(),
            rs_a as isize,
            cs_a as isize,
            b.as_ptr().cast(),
            rs_b as isize,
            cs_b as isize,
            [0.0, 0.0],
            out.as_mut_ptr().cast(),
            rs_c as isize,
            cs_c as isize,
        );
    }
    out
}

pub fn trace(m: &CMatrix) -> Complex64 {
    (0..m.nrows().min(m.ncols())).map(|i| m[(i, i)]).sum()
}

/// `aᴴ b`.
#[inline]
pub fn inner(a: &CVector, b: &CVector) -> Complex64 {
    a.dotc(b)
}

pub fn frobenius_sq(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum()
}

/// Relative Frobenius distance `‖a − b‖ / ‖b‖` (absolute when `b = 0`).
pub fn relative_frobenius(a: &CMatrix, b: &CMatrix) -> f64 {
    let diff = (a - b).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let scale = frobenius_sq(b).sqrt();
    if scale > 0.0 {
        diff / scale
    } else {
        diff
    }
}

pub fn scaled_identity(n: usize, s: f64) -> CMatrix {
    CMatrix::from_diagonal_element(n, n, c(s, 0.0))
}

/// Inverse of a low-rank update `(Z⁻¹ + C Cᴴ)⁻¹`, applied through the
/// Woodbury identity
/// `(Z⁻¹ + C Cᴴ)⁻¹ = Z − Z C (I + Cᴴ Z C)⁻¹ Cᴴ Z`.
///
/// `Z` is the Hermitian PD base matrix (not its inverse). Applying the
/// operator costs `O(N² + N·M)` with `M` the number of columns in `C`, so one
/// instance is shared across every right-hand side of a cell.
pub struct LowRankInverse<'a> {
    base: &'a CMatrix,
    zc: CMatrix,
    core: Option<Cholesky<Complex64, Dyn>>,
}

impl<'a> LowRankInverse<'a> {
    pub fn new(base: &'a CMatrix, columns: &CMatrix) -> Result<Self> {
        let zc = base * columns;
        if columns.ncols() == 0 {
            return Ok(Self { base, zc, core: None });
        }
        let mut gram = columns.adjoint() * &zc;
        for i in 0..gram.nrows() {
            gram[(i, i)] += ONE;
        }
        let core = cholesky(&gram, "Woodbury core matrix")?;
        Ok(Self { base, zc, core: Some(core) })
    }

    pub fn apply(&self, rhs: &CVector) -> CVector {
        let mut out = self.base * rhs;
        if let Some(core) = &self.core {
            let proj = self.zc.adjoint() * rhs;
            let coeff = core.solve(&proj);
            out -= &self.zc * coeff;
        }
        out
    }

    /// `vᴴ (Z⁻¹ + C Cᴴ)⁻¹ v`, real for Hermitian operators.
    pub fn quadratic_form(&self, v: &CVector) -> f64 {
        inner(v, &self.apply(v)).re
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec::Vec;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(n: usize, m: usize, seed: u64) -> CMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        CMatrix::from_fn(n, m, |_, _| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
    }

    fn random_hpd(n: usize, seed: u64) -> CMatrix {
        let a = random_matrix(n, n, seed);
        &a * a.adjoint() + scaled_identity(n, 0.5)
    }

    #[test]
    fn inner_conjugates_left_argument() {
        let a = CVector::from_vec(alloc::vec![c(0.0, 1.0)]);
        let b = CVector::from_vec(alloc::vec![c(1.0, 0.0)]);
        assert_eq!(inner(&a, &b), c(0.0, -1.0));
    }

    #[test]
    fn hermitian_inverse_contract() {
        let m = random_hpd(6, 3);
        let inv = hermitian_inverse(&m, "test").unwrap();
        let err = relative_frobenius(&(&m * &inv), &scaled_identity(6, 1.0));
        assert!(err < 1e-12, "{err}");
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let m = CMatrix::from_diagonal(&CVector::from_vec(alloc::vec![ONE, c(-1.0, 0.0)]));
        assert!(matches!(hermitian_inverse(&m, "x"), Err(Error::NotPositiveDefinite { .. })));
    }

    #[test]
    fn psd_sqrt_squares_back() {
        let m = random_hpd(5, 9);
        let r = psd_sqrt(&m);
        assert!(relative_frobenius(&(&r * &r), &m) < 1e-12);
        assert!(min_eigenvalue(&r) >= 0.0);
    }

    #[test]
    fn psd_sqrt_clamps_rank_deficient_input() {
        let v = random_matrix(4, 1, 1);
        let m = &v * v.adjoint();
        let r = psd_sqrt(&m);
        assert!(relative_frobenius(&(&r * &r), &m) < 1e-10);
    }

    #[test]
    fn trace_of_product_matches_dense() {
        let a = random_matrix(4, 4, 5);
        let b = random_matrix(4, 4, 6);
        let d = trace_of_product(&a, &b) - trace(&(&a * &b));
        assert!(d.norm() < 1e-14);
    }

    #[test]
    fn low_rank_inverse_matches_direct_solve() {
        let n = 7;
        let z_inv = random_hpd(n, 11);
        let z = hermitian_inverse(&z_inv, "z").unwrap();
        let cols = random_matrix(n, 3, 12);
        let full = &z_inv + &cols * cols.adjoint();
        let rhs = random_matrix(n, 1, 13).column(0).into_owned();
        let direct = hermitian_solve(&full, &rhs, "full").unwrap();
        let w = LowRankInverse::new(&z, &cols).unwrap();
        let got = w.apply(&rhs);
        let err = (&got - &direct).norm() / direct.norm();
        assert!(err < 1e-12, "{err}");
        let empty = LowRankInverse::new(&z, &CMatrix::zeros(n, 0)).unwrap();
        assert!((empty.apply(&rhs) - &z * &rhs).norm() < 1e-14);
    }

    #[test]
    fn product_fast_paths_agree() {
        let a = random_matrix(5, 5, 21);
        let d = CMatrix::from_diagonal(&random_matrix(5, 1, 22).column(0).into_owned());
        for (x, y) in [(&a, &d), (&d, &a), (&d, &d), (&a, &a)] {
            assert!(relative_frobenius(&product(x, y), &(x * y)) < 1e-15);
        }
        let r = random_matrix(7, 3, 23);
        assert!(relative_frobenius(&gemm(&r, &random_matrix(3, 5, 24)), &(&r * random_matrix(3, 5, 24))) < 1e-15);
        assert_eq!(gemm(&CMatrix::zeros(2, 0), &CMatrix::zeros(0, 3)), CMatrix::zeros(2, 3));
    }

    #[test]
    fn eigenvalues_ascending() {
        let d: Vec<f64> = eigenvalues(&CMatrix::from_diagonal(&CVector::from_vec(alloc::vec![
            c(3.0, 0.0),
            c(1.0, 0.0),
            c(2.0, 0.0)
        ])));
        assert_eq!(d.len(), 3);
        assert!((d[0] - 1.0).abs() < 1e-12 && (d[2] - 3.0).abs() < 1e-12);
    }
}
