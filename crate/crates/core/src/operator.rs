//! Complex matrices on the truncated mode space `{0, ..., n_max}` and their
//! tail norms.

use std::fmt::Write as _;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::profile::{fmt_f64, DefectProfile};

pub type C64 = Complex64;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// Operator on modes `0..=n_max`, stored densely.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedOperator {
    matrix: DMatrix<C64>,
}

/// Result of a power-iteration norm estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerEstimate {
    pub norm: f64,
    /// `‖A†A v − λ v‖` at the returned unit vector `v`.
    pub residual: f64,
    pub iterations: usize,
}

impl TruncatedOperator {
    pub fn from_matrix(matrix: DMatrix<C64>) -> Self {
        assert!(
            matrix.is_square() && matrix.nrows() > 0,
            "operator matrix must be square and nonempty"
        );
        TruncatedOperator { matrix }
    }

    pub fn zeros(n_max: usize) -> Self {
        Self::from_matrix(DMatrix::zeros(n_max + 1, n_max + 1))
    }

    pub fn identity(n_max: usize) -> Self {
        Self::from_matrix(DMatrix::identity(n_max + 1, n_max + 1))
    }

    pub fn from_diagonal(diag: &[C64]) -> Self {
        Self::from_matrix(DMatrix::from_diagonal(&DVector::from_column_slice(diag)))
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let d: Vec<C64> = diag.iter().map(|&x| C64::new(x, 0.0)).collect();
        Self::from_diagonal(&d)
    }

    /// `|m⟩⟨k|`.
    pub fn matrix_unit(n_max: usize, m: usize, k: usize) -> Self {
        let mut a = Self::zeros(n_max);
        a.matrix[(m, k)] = ONE;
        a
    }

    pub fn n_max(&self) -> usize {
        self.matrix.nrows() - 1
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.matrix
    }

    pub fn get(&self, m: usize, k: usize) -> C64 {
        self.matrix[(m, k)]
    }

    pub fn set(&mut self, m: usize, k: usize, v: C64) {
        self.matrix[(m, k)] = v;
    }

    pub fn diagonal(&self) -> Vec<C64> {
        self.matrix.diagonal().iter().copied().collect()
    }

    pub fn adjoint(&self) -> Self {
        Self::from_matrix(self.matrix.adjoint())
    }

    pub fn scale(&self, c: C64) -> Self {
        Self::from_matrix(&self.matrix * c)
    }

    pub fn commutator(&self, other: &Self) -> Self {
        Self::from_matrix(&self.matrix * &other.matrix - &other.matrix * &self.matrix)
    }

    /// `U A U†`.
    pub fn conjugate_by(&self, u: &Self) -> Self {
        Self::from_matrix(&u.matrix * &self.matrix * u.matrix.adjoint())
    }

    /// Restriction to modes `0..=n` (padded operators are cut back this way).
    pub fn head(&self, n: usize) -> Self {
        let d = (n + 1).min(self.dim());
        Self::from_matrix(self.matrix.view((0, 0), (d, d)).into_owned())
    }

    /// The compression `Q_n A Q_n` to modes `n+1..=n_max`, as a matrix.
    /// Empty when `n >= n_max`.
    pub fn tail_block(&self, n: usize) -> DMatrix<C64> {
        let start = (n + 1).min(self.dim());
        let d = self.dim() - start;
        self.matrix.view((start, start), (d, d)).into_owned()
    }

    /// Operator embedded in a larger truncation, padded with zeros.
    pub fn padded(&self, n_max: usize) -> Self {
        assert!(n_max >= self.n_max());
        let mut m = DMatrix::zeros(n_max + 1, n_max + 1);
        m.view_mut((0, 0), (self.dim(), self.dim()))
            .copy_from(&self.matrix);
        Self::from_matrix(m)
    }

    pub fn max_abs_entry(&self) -> f64 {
        self.matrix.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.matrix
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn hermitian_defect(&self) -> f64 {
        (&self.matrix - self.matrix.adjoint())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    pub fn is_diagonal(&self) -> bool {
        let n = self.dim();
        (0..n).all(|k| (0..n).all(|m| m == k || self.matrix[(m, k)] == ZERO))
    }

    pub fn spectral_norm(&self) -> f64 {
        spectral_norm(&self.matrix)
    }

    /// Smallest eigenvalue of the Hermitian part `(A + A†)/2`.
    pub fn min_eigenvalue(&self) -> f64 {
        let h = (&self.matrix + self.matrix.adjoint()) * C64::new(0.5, 0.0);
        h.symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    /// Power iteration on `A†A` from a seeded random start, capped at
    /// `max_iter`; cross-check for [`spectral_norm`](Self::spectral_norm).
    pub fn power_norm(&self, seed: u64, max_iter: usize) -> PowerEstimate {
        power_norm(&self.matrix, seed, max_iter)
    }

    /// `A v` for a vector.
    pub fn apply(&self, v: &DVector<C64>) -> DVector<C64> {
        &self.matrix * v
    }

    /// Rows `row,col,re,im` for every entry with modulus above `threshold`.
    pub fn to_csv(&self, threshold: f64) -> String {
        let mut s = String::from("row,col,re,im\n");
        for m in 0..self.dim() {
            for k in 0..self.dim() {
                let z = self.matrix[(m, k)];
                if z.norm() > threshold {
                    let _ = writeln!(s, "{m},{k},{},{}", fmt_f64(z.re), fmt_f64(z.im));
                }
            }
        }
        s
    }
}

/// Largest singular value. Diagonal matrices are read off; Hermitian ones go
/// through a Hermitian eigensolve; the rest through the eigenvalues of `A†A`.
pub fn spectral_norm(a: &DMatrix<C64>) -> f64 {
    let n = a.nrows();
    if n == 0 {
        return 0.0;
    }
    let mut diagonal = true;
    let mut hermitian = true;
    for k in 0..n {
        for m in 0..n {
            let z = a[(m, k)];
            if m != k && z != ZERO {
                diagonal = false;
            }
            if z != a[(k, m)].conj() {
                hermitian = false;
            }
        }
    }
    if diagonal {
        return a.diagonal().iter().map(|z| z.norm()).fold(0.0, f64::max);
    }
    if hermitian {
        return a
            .clone()
            .symmetric_eigenvalues()
            .iter()
            .map(|x| x.abs())
            .fold(0.0, f64::max);
    }
    let g = a.adjoint() * a;
    g.symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(0.0, f64::max)
        .max(0.0)
        .sqrt()
}

pub fn power_norm(a: &DMatrix<C64>, seed: u64, max_iter: usize) -> PowerEstimate {
    let n = a.nrows();
    if n == 0 {
        return PowerEstimate {
            norm: 0.0,
            residual: 0.0,
            iterations: 0,
        };
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v = DVector::from_fn(n, |_, _| {
        C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
    });
    v /= C64::new(v.norm(), 0.0);
    let adj = a.adjoint();
    let mut lambda = 0.0;
    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    for it in 1..=max_iter {
        iterations = it;
        let w = &adj * (a * &v);
        lambda = v.dotc(&w).re;
        residual = (&w - &v * C64::new(lambda, 0.0)).norm();
        let wn = w.norm();
        if wn == 0.0 {
            lambda = 0.0;
            residual = 0.0;
            break;
        }
        v = w / C64::new(wn, 0.0);
        if residual <= 1e-12 * lambda.abs().max(1e-300) {
            break;
        }
    }
    PowerEstimate {
        norm: lambda.max(0.0).sqrt(),
        residual,
        iterations,
    }
}

/// `‖Q_n A Q_n‖` per cutoff `n`, where `Q_n` projects onto modes above `n`.
/// Cutoffs at or beyond `n_max` are recorded as skipped.
pub fn compact_tail_profile(
    a: &TruncatedOperator,
    cutoffs: &[usize],
    tolerance: f64,
) -> DefectProfile {
    let mut p = DefectProfile::new("compact-tail", tolerance);
    for &n in cutoffs {
        if n >= a.n_max() {
            p.push_skipped(n as f64);
        } else {
            p.push(n as f64, spectral_norm(&a.tail_block(n)));
        }
    }
    p
}

impl Add for &TruncatedOperator {
    type Output = TruncatedOperator;
    fn add(self, rhs: Self) -> TruncatedOperator {
        TruncatedOperator::from_matrix(&self.matrix + &rhs.matrix)
    }
}

impl Sub for &TruncatedOperator {
    type Output = TruncatedOperator;
    fn sub(self, rhs: Self) -> TruncatedOperator {
        TruncatedOperator::from_matrix(&self.matrix - &rhs.matrix)
    }
}

impl Mul for &TruncatedOperator {
    type Output = TruncatedOperator;
    fn mul(self, rhs: Self) -> TruncatedOperator {
        TruncatedOperator::from_matrix(&self.matrix * &rhs.matrix)
    }
}

impl Neg for &TruncatedOperator {
    type Output = TruncatedOperator;
    fn neg(self) -> TruncatedOperator {
        TruncatedOperator::from_matrix(-&self.matrix)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tail_profile_of_simple_operators() {
        let p0 = TruncatedOperator::matrix_unit(16, 0, 0);
        let prof = compact_tail_profile(&p0, &[0, 1, 4, 8], 1e-2);
        assert!(prof.values().iter().all(|&v| v == 0.0));

        let id = TruncatedOperator::identity(16);
        let prof = compact_tail_profile(&id, &[1, 4, 8], 1e-2);
        assert!(prof.values().iter().all(|&v| v == 1.0));

        let d: Vec<f64> = (0..=32).map(|m| 1.0 / (m as f64 + 1.0)).collect();
        let a = TruncatedOperator::from_real_diagonal(&d);
        let prof = compact_tail_profile(&a, &[1, 2, 4, 8, 16, 32], 1e-2);
        for e in &prof.entries {
            if let Some(v) = e.defect {
                assert!((v - 1.0 / (e.scale + 2.0)).abs() < 1e-15);
            }
        }
        assert!(prof.has_skipped());
    }

    #[test]
    fn norms_agree_across_paths() {
        let n = 12;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = DMatrix::from_fn(n, n, |_, _| {
            C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        });
        let dense = spectral_norm(&a);
        let svd = a.clone().singular_values().max();
        assert!((dense - svd).abs() < 1e-10 * svd);
        let pw = power_norm(&a, 7, 2000);
        assert!((pw.norm - svd).abs() < 1e-6 * svd);
        let h = &a + a.adjoint();
        let hs = h.clone().singular_values().max();
        assert!((spectral_norm(&h) - hs).abs() < 1e-10 * hs);
    }

    #[test]
    fn shift_commutator_with_ramp() {
        // lower shift S e_k = e_{k+1}; [diag(u), S] has entries u(k+1) - u(k)
        let n = 20;
        let mut s = TruncatedOperator::zeros(n);
        for k in 0..n {
            s.set(k + 1, k, ONE);
        }
        let u: Vec<f64> = (0..=n)
            .map(|k| (1.0 - k as f64 / 8.0).clamp(0.0, 1.0))
            .collect();
        let c = TruncatedOperator::from_real_diagonal(&u).commutator(&s);
        assert!((c.spectral_norm() - 0.125).abs() < 1e-12);
        assert_eq!(s.adjoint().get(0, 1), ONE);
        assert_eq!(s.head(3).dim(), 4);
        assert_eq!(s.tail_block(18).nrows(), 2);
    }
}
