//! Small dense linear algebra shared by every engine.
//!
//! Nothing here is clever: row-major storage, LU with partial pivoting,
//! repeated matrix-vector products, and a Householder least-squares fit
//! for polynomial interpolation. There is deliberately no eigensolver;
//! spectral quantities are reached through traces and interpolation.

use std::fmt;
use std::ops::{Add, AddAssign, Div, Index, IndexMut, Mul, Neg, Sub, SubAssign};

use num_complex::Complex64;

use crate::error::{HitError, Result};

/// Field operations needed by the kernel. Implemented for `f64` and `Complex64`.
pub trait Scalar:
    Copy
    + PartialEq
    + fmt::Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
    + Send
    + Sync
{
    fn zero() -> Self;
    fn one() -> Self;
    fn modulus(self) -> f64;
    fn is_finite(self) -> bool;
    fn from_real(x: f64) -> Self;
}

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn modulus(self) -> f64 {
        self.abs()
    }
    fn is_finite(self) -> bool {
        f64::is_finite(self)
    }
    fn from_real(x: f64) -> Self {
        x
    }
}

impl Scalar for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn one() -> Self {
        Complex64::new(1.0, 0.0)
    }
    fn modulus(self) -> f64 {
        self.norm()
    }
    fn is_finite(self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
    fn from_real(x: f64) -> Self {
        Complex64::new(x, 0.0)
    }
}

/// Numerical tolerances used across engines.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Tolerances {
    pub solve_residual: f64,
    pub series_tail: f64,
    pub imaginary_discard: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            solve_residual: 1e-10,
            series_tail: 1e-12,
            imaginary_discard: 1e-9,
        }
    }
}

impl Tolerances {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("solve_residual", self.solve_residual),
            ("series_tail", self.series_tail),
            ("imaginary_discard", self.imaginary_discard),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(HitError::InvalidParameter(format!(
                    "tolerance {name} must be strictly positive, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// Row-major dense matrix.
#[derive(Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

pub type DenseMatrix = Matrix<f64>;
pub type ComplexMatrix = Matrix<Complex64>;

impl<T: Scalar> fmt::Debug for Matrix<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            writeln!(f, "  {:?}", self.row(r))?;
        }
        write!(f, "]")
    }
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    /// Builds from row-major data, rejecting non-finite entries.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(HitError::DimensionMismatch {
                expected: rows * cols,
                got: data.len(),
            });
        }
        let m = Matrix { rows, cols, data };
        m.check_finite()?;
        Ok(m)
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            if row.len() != c {
                return Err(HitError::DimensionMismatch {
                    expected: c,
                    got: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Self::from_row_major(r, c, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn row(&self, r: usize) -> &[T] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn check_finite(&self) -> Result<()> {
        if let Some(pos) = self.data.iter().position(|x| !x.is_finite()) {
            return Err(HitError::NumericalFailure(format!(
                "non-finite entry at ({}, {})",
                pos / self.cols.max(1),
                pos % self.cols.max(1)
            )));
        }
        Ok(())
    }

    pub fn mul_vec(&self, v: &[T]) -> Result<Vec<T>> {
        if v.len() != self.cols {
            return Err(HitError::DimensionMismatch {
                expected: self.cols,
                got: v.len(),
            });
        }
        Ok(self.mul_vec_unchecked(v))
    }

    pub(crate) fn mul_vec_unchecked(&self, v: &[T]) -> Vec<T> {
        (0..self.rows)
            .map(|r| {
                let mut acc = T::zero();
                for (a, b) in self.row(r).iter().zip(v) {
                    acc += *a * *b;
                }
                acc
            })
            .collect()
    }

    pub fn matmul(&self, other: &Matrix<T>) -> Result<Matrix<T>> {
        if self.cols != other.rows {
            return Err(HitError::DimensionMismatch {
                expected: self.cols,
                got: other.rows,
            });
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == T::zero() {
                    continue;
                }
                let orow = other.row(k);
                let base = i * other.cols;
                for (j, b) in orow.iter().enumerate() {
                    out.data[base + j] += a * *b;
                }
            }
        }
        Ok(out)
    }

    pub fn transpose(&self) -> Matrix<T> {
        let mut out = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)];
            }
        }
        out
    }

    pub fn scale(&self, s: T) -> Matrix<T> {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|x| *x * s).collect(),
        }
    }

    /// `I - s * self` for a square matrix.
    pub fn identity_minus_scaled(&self, s: T) -> Matrix<T> {
        let mut out = self.scale(-s);
        for i in 0..self.rows.min(self.cols) {
            out[(i, i)] += T::one();
        }
        out
    }

    /// Matrix with row `r` and column `c` removed.
    pub fn minor(&self, r: usize, c: usize) -> Matrix<T> {
        let mut data = Vec::with_capacity((self.rows - 1) * (self.cols - 1));
        for i in (0..self.rows).filter(|&i| i != r) {
            for j in (0..self.cols).filter(|&j| j != c) {
                data.push(self[(i, j)]);
            }
        }
        Matrix {
            rows: self.rows - 1,
            cols: self.cols - 1,
            data,
        }
    }

    pub fn trace(&self) -> T {
        let mut acc = T::zero();
        for i in 0..self.rows.min(self.cols) {
            acc += self[(i, i)];
        }
        acc
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.rows)
            .map(|r| self.row(r).iter().map(|x| x.modulus()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(T) -> U) -> Matrix<U> {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|x| f(*x)).collect(),
        }
    }
}

impl<T> Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    fn index(&self, (r, c): (usize, usize)) -> &T {
        debug_assert!(r < self.rows && c < self.cols);
        &self.data[r * self.cols + c]
    }
}

impl<T> IndexMut<(usize, usize)> for Matrix<T> {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut T {
        debug_assert!(r < self.rows && c < self.cols);
        &mut self.data[r * self.cols + c]
    }
}

/// Pivots below this magnitude (relative to the largest entry) are treated as zero.
const PIVOT_TOLERANCE: f64 = 1e-14;

/// LU factorization with partial pivoting, `P A = L U`.
#[derive(Debug, Clone)]
pub struct Lu<T: Scalar> {
    lu: Matrix<T>,
    perm: Vec<usize>,
    swaps: usize,
    singular_at: Option<(usize, f64)>,
}

impl<T: Scalar> Lu<T> {
    /// Factorizes `a`. Singular matrices still factor (so the determinant is
    /// available); `solve` then reports the failing column.
    pub fn factor(a: &Matrix<T>) -> Result<Self> {
        if !a.is_square() {
            return Err(HitError::DimensionMismatch {
                expected: a.rows(),
                got: a.cols(),
            });
        }
        let n = a.rows();
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut swaps = 0;
        let mut singular_at = None;
        let scale = a
            .data
            .iter()
            .map(|x| x.modulus())
            .fold(0.0, f64::max)
            .max(f64::MIN_POSITIVE);
        for k in 0..n {
            let (p, best) = (k..n)
                .map(|i| (i, lu[(i, k)].modulus()))
                .fold((k, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
            if best <= PIVOT_TOLERANCE * scale {
                singular_at.get_or_insert((k, best));
                continue;
            }
            if p != k {
                for j in 0..n {
                    lu.data.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
                swaps += 1;
            }
            let pivot = lu[(k, k)];
            for i in (k + 1)..n {
                let factor = lu[(i, k)] / pivot;
                lu[(i, k)] = factor;
                if factor == T::zero() {
                    continue;
                }
                for j in (k + 1)..n {
                    let u = lu[(k, j)];
                    lu[(i, j)] -= factor * u;
                }
            }
        }
        Ok(Lu {
            lu,
            perm,
            swaps,
            singular_at,
        })
    }

    pub fn is_singular(&self) -> bool {
        self.singular_at.is_some()
    }

    pub fn determinant(&self) -> T {
        if self.singular_at.is_some() {
            return T::zero();
        }
        let mut det = if self.swaps.is_multiple_of(2) {
            T::one()
        } else {
            -T::one()
        };
        for i in 0..self.lu.rows() {
            det = det * self.lu[(i, i)];
        }
        det
    }

    pub fn solve(&self, b: &[T]) -> Result<Vec<T>> {
        let n = self.lu.rows();
        if b.len() != n {
            return Err(HitError::DimensionMismatch {
                expected: n,
                got: b.len(),
            });
        }
        if let Some((column, pivot)) = self.singular_at {
            return Err(HitError::SingularMatrix { column, pivot });
        }
        let mut x: Vec<T> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            for j in 0..i {
                let l = self.lu[(i, j)];
                let xj = x[j];
                x[i] -= l * xj;
            }
        }
        for i in (0..n).rev() {
            for j in (i + 1)..n {
                let u = self.lu[(i, j)];
                let xj = x[j];
                x[i] -= u * xj;
            }
            x[i] = x[i] / self.lu[(i, i)];
        }
        Ok(x)
    }
}

/// Solves `a x = b` with partial pivoting and checks the residual bound
/// `|a x - b|_inf <= solve_residual * (1 + |b|_inf)`, scaled by `|a|_inf`.
pub fn solve<T: Scalar>(a: &Matrix<T>, b: &[T]) -> Result<Vec<T>> {
    solve_with(a, b, &Tolerances::default())
}

pub fn solve_with<T: Scalar>(a: &Matrix<T>, b: &[T], tol: &Tolerances) -> Result<Vec<T>> {
    let lu = Lu::factor(a)?;
    let x = lu.solve(b)?;
    check_solution(a, &x, b, tol)?;
    Ok(x)
}

pub(crate) fn check_solution<T: Scalar>(
    a: &Matrix<T>,
    x: &[T],
    b: &[T],
    tol: &Tolerances,
) -> Result<()> {
    if x.iter().any(|v| !v.is_finite()) {
        return Err(HitError::NumericalFailure("non-finite solution".into()));
    }
    let ax = a.mul_vec_unchecked(x);
    let resid = ax
        .iter()
        .zip(b)
        .map(|(l, r)| (*l - *r).modulus())
        .fold(0.0, f64::max);
    let bnorm = b.iter().map(|v| v.modulus()).fold(0.0, f64::max);
    let anorm = a.norm_inf().max(1.0);
    let xnorm = x.iter().map(|v| v.modulus()).fold(0.0, f64::max).max(1.0);
    // Backward-stable LU gives residuals proportional to |A||x|.
    let bound = tol.solve_residual * (1.0 + bnorm).max(anorm * xnorm * 1e-3);
    if resid > bound {
        return Err(HitError::NumericalFailure(format!(
            "solve residual {resid:e} exceeds bound {bound:e}"
        )));
    }
    Ok(())
}

/// `m^n v` by `n` repeated matrix-vector products.
pub fn matpow_apply<T: Scalar>(m: &Matrix<T>, v: &[T], n: usize) -> Result<Vec<T>> {
    if !m.is_square() {
        return Err(HitError::DimensionMismatch {
            expected: m.rows(),
            got: m.cols(),
        });
    }
    if v.len() != m.cols() {
        return Err(HitError::DimensionMismatch {
            expected: m.cols(),
            got: v.len(),
        });
    }
    let mut cur = v.to_vec();
    for _ in 0..n {
        cur = m.mul_vec_unchecked(&cur);
    }
    Ok(cur)
}

/// Polynomial fit: coefficients in ascending powers plus the max abs residual at the samples.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyFit {
    pub coeffs: Vec<f64>,
    pub residual: f64,
}

pub fn interpolate_poly(points: &[(f64, f64)], degree: usize) -> Result<PolyFit> {
    interpolate_poly_with(points, degree, &Tolerances::default())
}

/// Least-squares fit of a degree-`degree` polynomial through `points` using
/// Householder QR on the Vandermonde matrix.
pub fn interpolate_poly_with(
    points: &[(f64, f64)],
    degree: usize,
    tol: &Tolerances,
) -> Result<PolyFit> {
    let cols = degree + 1;
    let mut xs: Vec<f64> = points.iter().map(|p| p.0).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    if xs.len() < cols {
        return Err(HitError::InvalidParameter(format!(
            "need at least {cols} distinct abscissae for degree {degree}, got {}",
            xs.len()
        )));
    }
    if points.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
        return Err(HitError::InvalidParameter("non-finite sample".into()));
    }
    let rows = points.len();
    let mut a = DenseMatrix::zeros(rows, cols);
    let mut b: Vec<f64> = points.iter().map(|p| p.1).collect();
    for (r, (x, _)) in points.iter().enumerate() {
        let mut pw = 1.0;
        for c in 0..cols {
            a[(r, c)] = pw;
            pw *= x;
        }
    }
    let coeffs = householder_least_squares(&mut a, &mut b, tol)?;
    let residual = points
        .iter()
        .map(|(x, y)| (poly_eval(&coeffs, *x) - y).abs())
        .fold(0.0, f64::max);
    let scale = points.iter().map(|p| p.1.abs()).fold(1.0, f64::max);
    if residual > tol.solve_residual * scale * 1e3 {
        // A polynomial of the requested degree cannot be what generated the data,
        // or the basis lost too much precision to tell.
        return Err(HitError::ConditioningFailure {
            residual,
            tolerance: tol.solve_residual * scale * 1e3,
        });
    }
    Ok(PolyFit { coeffs, residual })
}

fn householder_least_squares(
    a: &mut DenseMatrix,
    b: &mut [f64],
    tol: &Tolerances,
) -> Result<Vec<f64>> {
    let (m, n) = (a.rows(), a.cols());
    let mut rdiag = vec![0.0; n];
    for k in 0..n {
        let norm = (k..m).map(|i| a[(i, k)] * a[(i, k)]).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(HitError::ConditioningFailure {
                residual: f64::INFINITY,
                tolerance: tol.solve_residual,
            });
        }
        let alpha = if a[(k, k)] > 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = (k..m).map(|i| a[(i, k)]).collect();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        if vnorm2 > 0.0 {
            for j in k..n {
                let dot: f64 = (k..m).map(|i| v[i - k] * a[(i, j)]).sum();
                let f = 2.0 * dot / vnorm2;
                for i in k..m {
                    a[(i, j)] -= f * v[i - k];
                }
            }
            let dot: f64 = (k..m).map(|i| v[i - k] * b[i]).sum();
            let f = 2.0 * dot / vnorm2;
            for i in k..m {
                b[i] -= f * v[i - k];
            }
        }
        rdiag[k] = a[(k, k)];
    }
    let rmax = rdiag.iter().map(|x| x.abs()).fold(0.0, f64::max);
    let rmin = rdiag.iter().map(|x| x.abs()).fold(f64::INFINITY, f64::min);
    if rmin <= rmax * 1e-15 {
        return Err(HitError::ConditioningFailure {
            residual: rmin / rmax,
            tolerance: 1e-15,
        });
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = b[i];
        for j in (i + 1)..n {
            s -= a[(i, j)] * x[j];
        }
        x[i] = s / a[(i, i)];
    }
    Ok(x)
}

/// `count` Chebyshev nodes mapped into the open interval `(lo, hi)`.
pub fn chebyshev_abscissae(count: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..count)
        .map(|k| {
            let theta = std::f64::consts::PI * (2 * k + 1) as f64 / (2 * count) as f64;
            let x = theta.cos();
            0.5 * (lo + hi) + 0.5 * (hi - lo) * x
        })
        .collect()
}

/// Horner evaluation, coefficients in ascending order.
pub fn poly_eval(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

/// Product of two power series truncated after the `t^max_degree` term.
pub fn series_mul_truncated(a: &[f64], b: &[f64], max_degree: usize) -> Vec<f64> {
    let mut out = vec![0.0; max_degree + 1];
    for (i, x) in a.iter().enumerate().take(max_degree + 1) {
        for (j, y) in b.iter().enumerate().take(max_degree + 1 - i) {
            out[i + j] += x * y;
        }
    }
    out
}

/// First `terms` Taylor coefficients of `num / den`. Requires `den[0] != 0`.
pub fn series_divide(num: &[f64], den: &[f64], terms: usize) -> Result<Vec<f64>> {
    let d0 = *den
        .first()
        .filter(|d| d.abs() > 0.0)
        .ok_or_else(|| HitError::InvalidParameter("series denominator vanishes at 0".into()))?;
    let mut out = vec![0.0; terms];
    for n in 0..terms {
        let mut s = num.get(n).copied().unwrap_or(0.0);
        for k in 1..=n.min(den.len().saturating_sub(1)) {
            s -= den[k] * out[n - k];
        }
        out[n] = s / d0;
    }
    Ok(out)
}
