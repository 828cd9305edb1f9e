//! Dense matrices over either scalar backend.
//!
//! [`Matrix`] is statically typed over its scalar, so mixing backends is a
//! compile error in library code. [`CMatrix`] wraps either backend behind a
//! runtime tag for callers (the CLI, JSON input) that only learn the backend
//! from data; its arithmetic rejects mixed operands with
//! [`Error::BackendMismatch`].
//!
//! Vectors are stored as `n x 1` matrices. Square-only operations check
//! their shape.

use std::fmt;
use std::ops::{Index, IndexMut, Mul};

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::scalar::{Backend, ExactScalar, FloatScalar, Scalar};

/// Relative pivot threshold for float inversion.
pub const FLOAT_PIVOT_TOL: f64 = 1e-12;

#[derive(Clone, PartialEq)]
pub struct Matrix<S> {
    rows: usize,
    cols: usize,
    data: Vec<S>,
}

pub type ExactMatrix = Matrix<ExactScalar>;
pub type FloatMatrix = Matrix<FloatScalar>;

impl<S: Scalar> Matrix<S> {
    pub fn new(rows: usize, cols: usize, data: Vec<S>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::DimensionMismatch("matrices must be at least 1x1".into()));
        }
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!("{} entries for a {rows}x{cols} matrix", data.len())));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: Vec<Vec<S>>) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::DimensionMismatch("ragged rows".into()));
        }
        Self::new(r, c, rows.into_iter().flatten().collect())
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> S) -> Self {
        assert!(rows > 0 && cols > 0, "empty matrix");
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    pub fn column_vector(entries: Vec<S>) -> Result<Self> {
        let n = entries.len();
        Self::new(n, 1, entries)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::from_fn(rows, cols, |_, _| S::zero())
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |r, c| if r == c { S::one() } else { S::zero() })
    }

    pub fn diagonal(entries: &[S]) -> Self {
        let n = entries.len();
        Self::from_fn(n, n, |r, c| if r == c { entries[r].clone() } else { S::zero() })
    }

    /// The `n x n` nilpotent shift with ones on the superdiagonal.
    pub fn shift(n: usize) -> Self {
        Self::from_fn(n, n, |r, c| if c == r + 1 { S::one() } else { S::zero() })
    }

    /// `λ I + N` of size `n`.
    pub fn jordan_block(lambda: S, n: usize) -> Self {
        Self::from_fn(n, n, |r, c| {
            if r == c {
                lambda.clone()
            } else if c == r + 1 {
                S::one()
            } else {
                S::zero()
            }
        })
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

    /// Dimension of a square matrix.
    pub fn n(&self) -> Result<usize> {
        if self.is_square() {
            Ok(self.rows)
        } else {
            Err(Error::NotSquare { rows: self.rows, cols: self.cols })
        }
    }

    pub fn backend(&self) -> Backend {
        S::BACKEND
    }

    pub fn entries(&self) -> &[S] {
        &self.data
    }

    pub fn row(&self, r: usize) -> &[S] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<S>> {
        (0..self.rows).map(|r| self.row(r).to_vec()).collect()
    }

    pub fn column(&self, c: usize) -> Self {
        Self::from_fn(self.rows, 1, |r, _| self[(r, c)].clone())
    }

    pub fn from_columns(columns: &[Self]) -> Result<Self> {
        let rows = columns.first().map_or(0, |c| c.rows);
        if columns.is_empty() || columns.iter().any(|c| c.cols != 1 || c.rows != rows) {
            return Err(Error::DimensionMismatch("columns must share one length".into()));
        }
        Ok(Self::from_fn(rows, columns.len(), |r, c| columns[c][(r, 0)].clone()))
    }

    pub fn map<T: Scalar>(&self, f: impl Fn(&S) -> T) -> Matrix<T> {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(f).collect() }
    }

    pub fn to_float(&self) -> FloatMatrix {
        self.map(Scalar::to_float)
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(Zero::is_zero)
    }

    fn check_same_shape(&self, other: &Self) -> Result<()> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other)?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a.clone() + b.clone()).collect();
        Ok(Self { rows: self.rows, cols: self.cols, data })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other)?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a.clone() - b.clone()).collect();
        Ok(Self { rows: self.rows, cols: self.cols, data })
    }

    pub fn scale(&self, s: &S) -> Self {
        self.map(|x| x.clone() * s.clone())
    }

    pub fn neg(&self) -> Self {
        self.map(|x| -x.clone())
    }

    /// Adds `other` in place; shapes must agree.
    pub(crate) fn add_assign(&mut self, other: &Self) {
        debug_assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a = a.clone() + b.clone();
        }
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Vec::with_capacity(self.rows * other.cols);
        for r in 0..self.rows {
            let row = self.row(r);
            for c in 0..other.cols {
                let mut acc = S::zero();
                for (k, a) in row.iter().enumerate() {
                    let b = &other.data[k * other.cols + c];
                    if !a.is_zero() && !b.is_zero() {
                        acc = acc + a.clone() * b.clone();
                    }
                }
                out.push(acc);
            }
        }
        Ok(Self { rows: self.rows, cols: other.cols, data: out })
    }

    /// `A^p` by binary exponentiation. Matrix powers of one matrix commute,
    /// so in the exact backend this equals the iterated product.
    pub fn pow(&self, mut p: u64) -> Result<Self> {
        let n = self.n()?;
        let mut result = Self::identity(n);
        let mut base = self.clone();
        while p > 0 {
            if p & 1 == 1 {
                result = &result * &base;
            }
            p >>= 1;
            if p > 0 {
                base = &base * &base;
            }
        }
        Ok(result)
    }

    /// Maximum absolute row sum. Normalized (`‖I‖ = 1`) and submultiplicative.
    pub fn row_sum_norm(&self) -> f64 {
        (0..self.rows).map(|r| self.row(r).iter().map(Scalar::modulus).sum::<f64>()).fold(0.0, f64::max)
    }

    /// Row-sum norm of `self - other`.
    pub fn distance(&self, other: &Self) -> Result<f64> {
        Ok(self.sub(other)?.row_sum_norm())
    }

    pub fn trace(&self) -> Result<S> {
        let n = self.n()?;
        Ok((0..n).fold(S::zero(), |acc, i| acc + self[(i, i)].clone()))
    }

    /// Inverse by Gauss-Jordan elimination with partial pivoting.
    ///
    /// In the float backend a pivot of modulus below
    /// `FLOAT_PIVOT_TOL * ‖A‖` is treated as singular.
    pub fn inverse(&self) -> Result<Self> {
        let n = self.n()?;
        let scale = self.row_sum_norm();
        let mut a = self.clone();
        let mut inv = Self::identity(n);
        for col in 0..n {
            let pivot_row = (col..n)
                .max_by(|&i, &j| a[(i, col)].modulus().total_cmp(&a[(j, col)].modulus()))
                .expect("nonempty range");
            if a[(pivot_row, col)].negligible(scale, FLOAT_PIVOT_TOL) {
                return Err(Error::SingularMatrix);
            }
            a.swap_rows(col, pivot_row);
            inv.swap_rows(col, pivot_row);
            let pivot_inv = S::one() / a[(col, col)].clone();
            a.scale_row(col, &pivot_inv);
            inv.scale_row(col, &pivot_inv);
            for r in 0..n {
                if r == col || a[(r, col)].is_zero() {
                    continue;
                }
                let f = a[(r, col)].clone();
                a.axpy_row(r, col, &f);
                inv.axpy_row(r, col, &f);
            }
        }
        Ok(inv)
    }

    pub fn determinant(&self) -> Result<S> {
        let n = self.n()?;
        let mut a = self.clone();
        let mut det = S::one();
        for col in 0..n {
            let pivot_row = (col..n)
                .max_by(|&i, &j| a[(i, col)].modulus().total_cmp(&a[(j, col)].modulus()))
                .expect("nonempty range");
            if a[(pivot_row, col)].is_zero() {
                return Ok(S::zero());
            }
            if pivot_row != col {
                a.swap_rows(col, pivot_row);
                det = -det;
            }
            let pivot = a[(col, col)].clone();
            det = det * pivot.clone();
            for r in col + 1..n {
                if a[(r, col)].is_zero() {
                    continue;
                }
                let f = a[(r, col)].clone() / pivot.clone();
                a.axpy_row(r, col, &f);
            }
        }
        Ok(det)
    }

    /// Basis of the right null space, by reduction to row echelon form.
    ///
    /// Entries with modulus at most `rel_tol * ‖self‖` are treated as zero in
    /// the float backend; the exact backend ignores `rel_tol`.
    pub fn null_space(&self, rel_tol: f64) -> Vec<Self> {
        let (rref, pivots) = self.row_echelon(rel_tol);
        let free: Vec<usize> = (0..self.cols).filter(|c| !pivots.contains(c)).collect();
        free.iter()
            .map(|&f| {
                let mut v = Self::zeros(self.cols, 1);
                v[(f, 0)] = S::one();
                for (r, &p) in pivots.iter().enumerate() {
                    v[(p, 0)] = -rref[(r, f)].clone();
                }
                v
            })
            .collect()
    }

    pub fn rank(&self, rel_tol: f64) -> usize {
        self.row_echelon(rel_tol).1.len()
    }

    /// Reduced row echelon form and pivot columns, with full pivoting over
    /// the remaining rows of each column.
    pub fn row_echelon(&self, rel_tol: f64) -> (Self, Vec<usize>) {
        let scale = self.row_sum_norm().max(f64::MIN_POSITIVE);
        let mut a = self.clone();
        let mut pivots = Vec::new();
        let mut row = 0;
        for col in 0..self.cols {
            if row == self.rows {
                break;
            }
            let pivot_row = (row..self.rows)
                .max_by(|&i, &j| a[(i, col)].modulus().total_cmp(&a[(j, col)].modulus()))
                .expect("nonempty range");
            if a[(pivot_row, col)].negligible(scale, rel_tol) {
                for r in row..self.rows {
                    a[(r, col)] = S::zero();
                }
                continue;
            }
            a.swap_rows(row, pivot_row);
            let pivot_inv = S::one() / a[(row, col)].clone();
            a.scale_row(row, &pivot_inv);
            for r in 0..self.rows {
                if r == row || a[(r, col)].is_zero() {
                    continue;
                }
                let f = a[(r, col)].clone();
                a.axpy_row(r, row, &f);
                a[(r, col)] = S::zero();
            }
            pivots.push(col);
            row += 1;
        }
        (a, pivots)
    }

    /// Block diagonal assembly in the given order.
    pub fn block_diagonal(blocks: &[Self]) -> Result<Self> {
        let mut n = 0;
        for b in blocks {
            n += b.n()?;
        }
        let mut out = Self::zeros(n.max(1), n.max(1));
        let mut offset = 0;
        for b in blocks {
            for r in 0..b.rows {
                for c in 0..b.cols {
                    out[(offset + r, offset + c)] = b[(r, c)].clone();
                }
            }
            offset += b.rows;
        }
        Ok(out)
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a != b {
            for c in 0..self.cols {
                self.data.swap(a * self.cols + c, b * self.cols + c);
            }
        }
    }

    fn scale_row(&mut self, r: usize, s: &S) {
        for c in 0..self.cols {
            let v = self[(r, c)].clone() * s.clone();
            self[(r, c)] = v;
        }
    }

    /// `row[target] -= f * row[source]`
    fn axpy_row(&mut self, target: usize, source: usize, f: &S) {
        for c in 0..self.cols {
            let s = &self.data[source * self.cols + c];
            if s.is_zero() {
                continue;
            }
            let v = self.data[target * self.cols + c].clone() - f.clone() * s.clone();
            self.data[target * self.cols + c] = v;
        }
    }
}

impl<S> Index<(usize, usize)> for Matrix<S> {
    type Output = S;

    fn index(&self, (r, c): (usize, usize)) -> &S {
        assert!(r < self.rows && c < self.cols, "index ({r}, {c}) out of bounds");
        &self.data[r * self.cols + c]
    }
}

impl<S> IndexMut<(usize, usize)> for Matrix<S> {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut S {
        assert!(r < self.rows && c < self.cols, "index ({r}, {c}) out of bounds");
        &mut self.data[r * self.cols + c]
    }
}

/// Panics on incompatible shapes; use [`Matrix::matmul`] for a checked product.
impl<S: Scalar> Mul for &Matrix<S> {
    type Output = Matrix<S>;

    fn mul(self, rhs: Self) -> Matrix<S> {
        self.matmul(rhs).expect("incompatible matrix shapes")
    }
}

impl<S: fmt::Debug> fmt::Debug for Matrix<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.data.chunks(self.cols)).finish()
    }
}

/// A square matrix whose backend is only known at runtime.
#[derive(Clone, Debug, PartialEq)]
pub enum CMatrix {
    Exact(ExactMatrix),
    Float(FloatMatrix),
}

impl CMatrix {
    pub fn backend(&self) -> Backend {
        match self {
            CMatrix::Exact(_) => Backend::Exact,
            CMatrix::Float(_) => Backend::Float,
        }
    }

    pub fn n(&self) -> Result<usize> {
        match self {
            CMatrix::Exact(m) => m.n(),
            CMatrix::Float(m) => m.n(),
        }
    }

    /// Explicit, lossy conversion to the float backend.
    pub fn to_float_lossy(&self) -> FloatMatrix {
        match self {
            CMatrix::Exact(m) => m.to_float(),
            CMatrix::Float(m) => m.clone(),
        }
    }

    pub fn as_exact(&self) -> Option<&ExactMatrix> {
        match self {
            CMatrix::Exact(m) => Some(m),
            CMatrix::Float(_) => None,
        }
    }

    pub fn as_float(&self) -> Option<&FloatMatrix> {
        match self {
            CMatrix::Float(m) => Some(m),
            CMatrix::Exact(_) => None,
        }
    }

    fn mismatch(&self, other: &Self) -> Error {
        Error::BackendMismatch { left: self.backend(), right: other.backend() }
    }

    pub fn mat_mul(&self, other: &Self) -> Result<Self> {
        match (self, other) {
            (CMatrix::Exact(a), CMatrix::Exact(b)) => Ok(CMatrix::Exact(a.matmul(b)?)),
            (CMatrix::Float(a), CMatrix::Float(b)) => Ok(CMatrix::Float(a.matmul(b)?)),
            _ => Err(self.mismatch(other)),
        }
    }

    pub fn mat_pow(&self, p: u64) -> Result<Self> {
        match self {
            CMatrix::Exact(a) => Ok(CMatrix::Exact(a.pow(p)?)),
            CMatrix::Float(a) => Ok(CMatrix::Float(a.pow(p)?)),
        }
    }

    pub fn mat_inverse(&self) -> Result<Self> {
        match self {
            CMatrix::Exact(a) => Ok(CMatrix::Exact(a.inverse()?)),
            CMatrix::Float(a) => Ok(CMatrix::Float(a.inverse()?)),
        }
    }

    pub fn row_sum_norm(&self) -> f64 {
        match self {
            CMatrix::Exact(a) => a.row_sum_norm(),
            CMatrix::Float(a) => a.row_sum_norm(),
        }
    }
}

impl From<ExactMatrix> for CMatrix {
    fn from(m: ExactMatrix) -> Self {
        CMatrix::Exact(m)
    }
}

impl From<FloatMatrix> for CMatrix {
    fn from(m: FloatMatrix) -> Self {
        CMatrix::Float(m)
    }
}

/// Builds an exact matrix from integer rows. Intended for literals.
pub fn exact_matrix(rows: &[&[i64]]) -> ExactMatrix {
    ExactMatrix::from_rows(rows.iter().map(|r| r.iter().map(|&v| ExactScalar::from_i64(v)).collect()).collect())
        .expect("well-formed literal")
}

/// Builds a float matrix from real rows. Intended for literals.
pub fn float_matrix(rows: &[&[f64]]) -> FloatMatrix {
    FloatMatrix::from_rows(rows.iter().map(|r| r.iter().map(|&v| FloatScalar::new(v, 0.0)).collect()).collect())
        .expect("well-formed literal")
}
