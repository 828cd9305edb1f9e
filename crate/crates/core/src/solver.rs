//! Linear systems `∂_m y = A y` with constant `A`.
//!
//! Every solution has the form `y(z) = E(Az) v_c`, anchored by `y(0) = v_c`.
//! In the moment basis its coefficients are `A^p v_c`, so the system is
//! satisfied coefficientwise: `c_{p+1} = A c_p`.

use num_complex::Complex64;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::expm::{eval_exp, eval_exp_apply, EvalReport, TruncationPolicy};
use crate::matrix::{FloatMatrix, Matrix};
use crate::moment::{MomentKind, MomentSequence};
use crate::scalar::Scalar;
use crate::series::MomentSeries;

#[derive(Debug, Clone, PartialEq)]
pub struct IVPSolution<S> {
    a: Matrix<S>,
    seq: MomentSequence,
    v_c: Matrix<S>,
}

/// The solution with `y(0) = v_c`. `v_c` is an `n x 1` column.
pub fn solve<S: Scalar>(a: &Matrix<S>, v_c: &Matrix<S>, seq: MomentSequence) -> Result<IVPSolution<S>> {
    let n = a.n()?;
    if v_c.rows() != n || v_c.cols() != 1 {
        return Err(Error::DimensionMismatch(format!(
            "initial vector is {}x{}, expected {n}x1",
            v_c.rows(),
            v_c.cols()
        )));
    }
    Ok(IVPSolution { a: a.clone(), seq, v_c: v_c.clone() })
}

impl<S: Scalar> IVPSolution<S> {
    pub fn a(&self) -> &Matrix<S> {
        &self.a
    }

    pub fn seq(&self) -> &MomentSequence {
        &self.seq
    }

    pub fn v_c(&self) -> &Matrix<S> {
        &self.v_c
    }

    /// Moment coefficients `A^p v_c` for `p = 0..=order`.
    pub fn series(&self, order: usize) -> Result<MomentSeries<S>> {
        MomentSeries::geometric_coefficients(self.v_c.clone(), &self.a, self.seq.clone(), order)
    }

    /// `y(z)` by summing `E(Az) v_c` in the float backend.
    pub fn evaluate(&self, z: Complex64, policy: &TruncationPolicy) -> Result<EvalReport<FloatMatrix>> {
        eval_exp_apply(&self.a.to_float(), &self.v_c.to_float(), z, &self.seq, policy)
    }

    /// Solution of the same system with a different anchor vector.
    pub fn with_initial(&self, v_c: &Matrix<S>) -> Result<Self> {
        solve(&self.a, v_c, self.seq.clone())
    }
}

/// Largest coefficient norm of `∂_m y - A y` over orders `0..=order`.
///
/// The coefficients are rebuilt here as `A^p · v_c` from binary powers
/// rather than the recurrence behind [`IVPSolution::series`], so the check
/// compares two constructions. Exact systems give exactly zero.
pub fn residual_check<S: Scalar>(sol: &IVPSolution<S>, order: usize) -> Result<f64> {
    let coeffs = (0..=order + 1).map(|p| sol.a.pow(p as u64)?.matmul(&sol.v_c)).collect::<Result<Vec<_>>>()?;
    let y = MomentSeries::new(sol.seq.clone(), coeffs)?;
    let lhs = y.moment_derivative()?;
    let rhs = y.left_mul(&sol.a)?.truncate(order);
    Ok(lhs.sub(&rhs)?.max_coeff_norm())
}

/// `X(z) = E(Az) X_0`, whose columns are the solutions anchored at the
/// columns of `X_0`.
#[derive(Debug, Clone, PartialEq)]
pub struct FundamentalMatrix<S> {
    a: Matrix<S>,
    seq: MomentSequence,
    x0: Matrix<S>,
}

impl<S: Scalar> FundamentalMatrix<S> {
    /// Fails with [`Error::SingularMatrix`] unless `X_0` is invertible.
    pub fn new(a: &Matrix<S>, x0: &Matrix<S>, seq: MomentSequence) -> Result<Self> {
        let n = a.n()?;
        if x0.rows() != n || x0.cols() != n {
            return Err(Error::DimensionMismatch(format!("X0 is {}x{}, expected {n}x{n}", x0.rows(), x0.cols())));
        }
        x0.inverse()?;
        Ok(Self { a: a.clone(), seq, x0: x0.clone() })
    }

    pub fn x0(&self) -> &Matrix<S> {
        &self.x0
    }

    pub fn at(&self, z: Complex64, policy: &TruncationPolicy) -> Result<EvalReport<FloatMatrix>> {
        eval_exp_apply(&self.a.to_float(), &self.x0.to_float(), z, &self.seq, policy)
    }

    /// The solution given by column `j`.
    pub fn column(&self, j: usize) -> Result<IVPSolution<S>> {
        if j >= self.x0.cols() {
            return Err(Error::InvalidArgument(format!("column {j} out of range")));
        }
        solve(&self.a, &self.x0.column(j), self.seq.clone())
    }
}

/// `X(z) X_0^{-1}`, which equals `E(Az)` for any fundamental matrix `X`
/// with `X(0) = X_0`.
pub fn recover_exponential(
    x: impl Fn(Complex64) -> Result<FloatMatrix>,
    x0: &FloatMatrix,
    z: Complex64,
) -> Result<FloatMatrix> {
    let inv = x0.inverse()?;
    x(z)?.matmul(&inv)
}

/// `max_z ‖D_q y(z) - A y(z)‖` with `D_q f(z) = (f(qz) - f(z)) / ((q-1) z)`.
///
/// Both values of `y` come from series evaluation, so this does not reuse
/// the coefficient shift. `z = 0` is rejected: the quotient is undefined
/// there and [`residual_check`] already covers it.
pub fn q_derivative_residual<S: Scalar>(
    sol: &IVPSolution<S>,
    q: f64,
    zs: &[Complex64],
    policy: &TruncationPolicy,
) -> Result<f64> {
    match sol.seq.kind() {
        MomentKind::QFactorial { q: sq } if (sq.to_f64() - q).abs() <= 1e-12 * q.abs() => {}
        _ => {
            return Err(Error::InvalidArgument(format!(
                "q-derivative residual needs the qfac:{q} sequence, got {}",
                sol.seq.specifier()
            )))
        }
    }
    let a = sol.a.to_float();
    let mut worst = 0.0f64;
    for &z in zs {
        if z.is_zero() {
            return Err(Error::InvalidArgument("q-derivative residual is undefined at z = 0".into()));
        }
        let y = sol.evaluate(z, policy)?.converged()?;
        let yq = sol.evaluate(z * q, policy)?.converged()?;
        let dq = yq.sub(&y)?.scale(&(Complex64::new(1.0, 0.0) / ((q - 1.0) * z)));
        worst = worst.max(dq.distance(&a.matmul(&y)?)?);
    }
    Ok(worst)
}

/// `E(Az)` directly, for comparison with [`recover_exponential`].
pub fn exponential_at(
    a: &FloatMatrix,
    z: Complex64,
    seq: &MomentSequence,
    policy: &TruncationPolicy,
) -> Result<FloatMatrix> {
    eval_exp(a, z, seq, policy)?.converged()
}
