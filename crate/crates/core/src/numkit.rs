//! Dense linear algebra used throughout the crate.
//!
//! Matrices are [`faer::Mat`] values. Storage is column-major: entry `(i, j)`
//! of an `m x n` matrix lives at linear offset `i + j * m`. Every binary
//! matrix file written by this crate uses the same order.
//!
//! Factorizations (thin SVD, LU with partial pivoting) are delegated to
//! `faer`; singularity detection, the 1-norm condition estimator and the
//! rank thresholding live here.

use std::ops::{Add, Div, Mul, Neg, Sub};

use faer::linalg::solvers::{PartialPivLu, SolveCore};
use faer::{c64, Conj, Mat, MatRef};

use crate::error::{Error, Result};

/// Real dense matrix.
pub type MatR = Mat<f64>;
/// Complex dense matrix.
pub type MatC = Mat<c64>;

/// Default relative threshold used for every rank decision.
pub const RANK_REL_TOL: f64 = 1e-10;

/// Field scalar accepted by the LU routines: `f64` or [`c64`].
pub trait Scalar:
    faer::traits::ComplexField
    + Copy
    + Send
    + Sync
    + PartialEq
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + 'static
{
    fn modulus(self) -> f64;
    fn from_real(x: f64) -> Self;
    fn finite(self) -> bool;
    /// `self / |self|`, or one at zero.
    fn unit_sign(self) -> Self;
}

impl Scalar for f64 {
    fn modulus(self) -> f64 {
        self.abs()
    }
    fn from_real(x: f64) -> Self {
        x
    }
    fn finite(self) -> bool {
        self.is_finite()
    }
    fn unit_sign(self) -> Self {
        if self < 0.0 {
            -1.0
        } else {
            1.0
        }
    }
}

impl Scalar for c64 {
    fn modulus(self) -> f64 {
        self.norm()
    }
    fn from_real(x: f64) -> Self {
        c64::new(x, 0.0)
    }
    fn finite(self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
    fn unit_sign(self) -> Self {
        let a = self.norm();
        if a == 0.0 {
            c64::new(1.0, 0.0)
        } else {
            self / a
        }
    }
}

/// Thin singular value decomposition `M = U diag(σ) Vt`.
///
/// With `k = min(rows, cols)`, `u` is `rows x k`, `vt` is `k x cols` and
/// `singular_values` has length `k`, sorted nonincreasing.
#[derive(Clone, Debug)]
pub struct SvdResult {
    pub u: MatR,
    pub singular_values: Vec<f64>,
    pub vt: MatR,
}

impl SvdResult {
    /// `V` (the transpose of `vt`), i.e. right singular vectors as columns.
    pub fn v(&self) -> MatR {
        self.vt.transpose().to_owned()
    }
}

fn check_finite<T: Scalar>(m: MatRef<'_, T>, what: &str) -> Result<()> {
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            if !m[(i, j)].finite() {
                return Err(Error::NonFinite(format!(
                    "{what}: entry ({i}, {j}) of a {}x{} matrix",
                    m.nrows(),
                    m.ncols()
                )));
            }
        }
    }
    Ok(())
}

/// Thin SVD of a real matrix.
pub fn svd(m: MatRef<'_, f64>) -> Result<SvdResult> {
    check_finite(m, "svd input")?;
    let (rows, cols) = (m.nrows(), m.ncols());
    let k = rows.min(cols);
    if k == 0 {
        return Ok(SvdResult {
            u: Mat::zeros(rows, 0),
            singular_values: Vec::new(),
            vt: Mat::zeros(0, cols),
        });
    }
    let dec = m.thin_svd().map_err(|_| Error::SvdFailed { rows, cols })?;
    let s = dec.S().column_vector();
    let mut order: Vec<usize> = (0..k).collect();
    // faer already sorts, but the contract is ours.
    order.sort_by(|&a, &b| s[b].total_cmp(&s[a]));
    let (u_raw, v_raw) = (dec.U(), dec.V());
    let u = Mat::from_fn(rows, k, |i, j| u_raw[(i, order[j])]);
    let vt = Mat::from_fn(k, cols, |i, j| v_raw[(j, order[i])]);
    let singular_values = order.iter().map(|&i| s[i].max(0.0)).collect();
    Ok(SvdResult {
        u,
        singular_values,
        vt,
    })
}

/// Singular values only, nonincreasing.
pub fn singular_values(m: MatRef<'_, f64>) -> Result<Vec<f64>> {
    check_finite(m, "singular value input")?;
    if m.nrows().min(m.ncols()) == 0 {
        return Ok(Vec::new());
    }
    let mut s = m.singular_values().map_err(|_| Error::SvdFailed {
        rows: m.nrows(),
        cols: m.ncols(),
    })?;
    s.sort_by(|a, b| b.total_cmp(a));
    Ok(s)
}

/// Number of singular values strictly above `rel_tol * σ₁`.
pub fn numerical_rank(singular_values: &[f64], rel_tol: f64) -> usize {
    let top = singular_values.iter().copied().fold(0.0, f64::max);
    if top <= 0.0 {
        return 0;
    }
    singular_values.iter().filter(|&&s| s > rel_tol * top).count()
}

/// Numerical rank of a real matrix at relative tolerance `rel_tol`.
pub fn rank(m: MatRef<'_, f64>, rel_tol: f64) -> Result<usize> {
    Ok(numerical_rank(&singular_values(m)?, rel_tol))
}

/// Largest singular value; the modulus for a 1x1 matrix.
pub fn spectral_norm(m: MatRef<'_, c64>) -> f64 {
    match (m.nrows(), m.ncols()) {
        (0, _) | (_, 0) => 0.0,
        (1, 1) => m[(0, 0)].norm(),
        (1, _) | (_, 1) => {
            let mut acc = 0.0f64;
            for j in 0..m.ncols() {
                for i in 0..m.nrows() {
                    acc = acc.hypot(m[(i, j)].norm());
                }
            }
            acc
        }
        _ => {
            if !(0..m.ncols()).all(|j| (0..m.nrows()).all(|i| m[(i, j)].finite())) {
                return f64::NAN;
            }
            m.singular_values()
                .map(|s| s.into_iter().fold(0.0, f64::max))
                .unwrap_or(f64::NAN)
        }
    }
}

/// Spectral norm of a real matrix.
pub fn spectral_norm_real(m: MatRef<'_, f64>) -> f64 {
    match (m.nrows(), m.ncols()) {
        (0, _) | (_, 0) => 0.0,
        (1, 1) => m[(0, 0)].abs(),
        _ => singular_values(m)
            .map(|s| s.first().copied().unwrap_or(0.0))
            .unwrap_or(f64::NAN),
    }
}

/// Operator 1-norm (maximum absolute column sum).
pub fn norm1<T: Scalar>(m: MatRef<'_, T>) -> f64 {
    (0..m.ncols())
        .map(|j| (0..m.nrows()).map(|i| m[(i, j)].modulus()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// LU factorization with partial pivoting of a square matrix.
pub struct Lu<T: Scalar> {
    inner: PartialPivLu<T>,
    dim: usize,
    norm1: f64,
    singular: bool,
}

impl<T: Scalar> Lu<T> {
    pub fn new(m: MatRef<'_, T>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::Dimension(format!(
                "LU needs a square matrix, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        check_finite(m, "LU input")?;
        let dim = m.nrows();
        let inner = m.partial_piv_lu();
        let u = inner.U();
        let singular = (0..dim).any(|i| u[(i, i)] == T::from_real(0.0));
        Ok(Self {
            inner,
            dim,
            norm1: norm1(m),
            singular,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// True when a pivot is exactly zero.
    pub fn is_singular(&self) -> bool {
        self.singular
    }

    /// 1-norm of the factored matrix.
    pub fn norm1(&self) -> f64 {
        self.norm1
    }

    /// Solves `M X = B`.
    pub fn solve(&self, b: MatRef<'_, T>) -> Result<Mat<T>> {
        if b.nrows() != self.dim {
            return Err(Error::Dimension(format!(
                "right-hand side has {} rows, matrix is {}x{}",
                b.nrows(),
                self.dim,
                self.dim
            )));
        }
        if self.singular {
            return Err(Error::SingularMatrix { dim: self.dim });
        }
        let mut x = b.to_owned();
        self.inner.solve_in_place_with_conj(Conj::No, x.as_mut());
        check_finite(x.as_ref(), "LU solution")
            .map_err(|_| Error::SingularMatrix { dim: self.dim })?;
        Ok(x)
    }

    fn solve_vec(&self, v: &mut [T], adjoint: bool) {
        let mut col = Mat::from_fn(self.dim, 1, |i, _| v[i]);
        if adjoint {
            self.inner
                .solve_transpose_in_place_with_conj(Conj::Yes, col.as_mut());
        } else {
            self.inner.solve_in_place_with_conj(Conj::No, col.as_mut());
        }
        for (i, e) in v.iter_mut().enumerate() {
            *e = col[(i, 0)];
        }
    }

    /// Estimate of `‖M⁻¹‖₁` by Hager's method with Higham's refinements
    /// (at most five iterations plus the alternating-sign safeguard vector).
    /// `+∞` when the factorization is singular.
    pub fn inverse_norm1_estimate(&self) -> f64 {
        let n = self.dim;
        if n == 0 {
            return 0.0;
        }
        if self.singular {
            return f64::INFINITY;
        }
        let l1 = |v: &[T]| v.iter().map(|e| e.modulus()).sum::<f64>();
        let argmax = |v: &[T]| {
            let mut best = 0;
            for (i, e) in v.iter().enumerate() {
                if e.modulus() > v[best].modulus() {
                    best = i;
                }
            }
            best
        };

        let mut x = vec![T::from_real(1.0 / n as f64); n];
        self.solve_vec(&mut x, false);
        if n == 1 {
            return x[0].modulus();
        }
        let mut est = l1(&x);
        let mut z: Vec<T> = x.iter().map(|e| e.unit_sign()).collect();
        self.solve_vec(&mut z, true);
        let mut j = argmax(&z);

        for _ in 1..5 {
            let mut y = vec![T::from_real(0.0); n];
            y[j] = T::from_real(1.0);
            self.solve_vec(&mut y, false);
            let previous = est;
            est = l1(&y);
            if est <= previous {
                est = previous;
                break;
            }
            let mut z: Vec<T> = y.iter().map(|e| e.unit_sign()).collect();
            self.solve_vec(&mut z, true);
            let last = j;
            j = argmax(&z);
            if z[last].modulus() == z[j].modulus() {
                break;
            }
        }

        let mut alt: Vec<T> = (0..n)
            .map(|i| {
                let mag = 1.0 + i as f64 / (n - 1) as f64;
                T::from_real(if i % 2 == 0 { mag } else { -mag })
            })
            .collect();
        self.solve_vec(&mut alt, false);
        let alt_est = 2.0 * l1(&alt) / (3.0 * n as f64);
        let est = est.max(alt_est);
        if est.is_finite() {
            est
        } else {
            f64::INFINITY
        }
    }

    /// `κ̃₁(M) = ‖M‖₁ · est(‖M⁻¹‖₁)`.
    pub fn cond1_estimate(&self) -> f64 {
        if self.singular {
            return f64::INFINITY;
        }
        self.norm1 * self.inverse_norm1_estimate()
    }
}

/// Solves `M X = B` by LU with partial pivoting.
pub fn lu_solve<T: Scalar>(m: MatRef<'_, T>, b: MatRef<'_, T>) -> Result<Mat<T>> {
    Lu::new(m)?.solve(b)
}

/// Estimated 1-norm condition number; `+∞` when `M` is exactly singular.
pub fn cond1_estimate<T: Scalar>(m: MatRef<'_, T>) -> f64 {
    match Lu::new(m) {
        Ok(lu) => lu.cond1_estimate(),
        Err(_) => f64::INFINITY,
    }
}

/// Embeds a real matrix into the complex field.
pub fn to_complex(m: MatRef<'_, f64>) -> MatC {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| c64::new(m[(i, j)], 0.0))
}

/// Largest entry modulus.
pub fn max_abs<T: Scalar>(m: MatRef<'_, T>) -> f64 {
    let mut best = 0.0f64;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            best = best.max(m[(i, j)].modulus());
        }
    }
    best
}
