//! Analytic evaluation of `E_m(Az) = Σ_p A^p z^p / m(p)`.
//!
//! Series are summed term by term in the float backend,
//! `T_p = T_{p-1} · (Az) · m(p-1)/m(p)`, under a [`TruncationPolicy`]:
//! summation stops once `settle_count` consecutive terms fall below `tol`,
//! the last term ratio is below one, and the geometric tail bound
//! `‖T_last‖ / (1 - ratio)` is within `tol`. The tail bound is a heuristic;
//! entirety of `E(Az)` gives no computable remainder estimate.
//!
//! Sequences that do not declare rapid growth (geometric, undeclared
//! custom) have a finite radius of convergence. A persistent term ratio
//! `>= 1` there is reported as [`EvalStatus::RadiusExceeded`] rather than a
//! value.
//!
//! There is no scaling-and-squaring: `E(A + B) ≠ E(A)E(B)` in general, so
//! no semigroup identity is available to exploit.

use std::fmt;

use num_complex::Complex64;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::jordan::JordanDecomposition;
use crate::matrix::{ExactMatrix, FloatMatrix, Matrix};
use crate::moment::{MomentKind, MomentSequence, Param};
use crate::scalar::{ExactScalar, FloatScalar, Scalar};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationPolicy {
    /// Target absolute tail bound.
    pub tol: f64,
    pub max_terms: usize,
    /// Number of consecutive small terms required before stopping.
    pub settle_count: usize,
    /// Abort once a term norm exceeds this.
    pub divergence_guard: f64,
}

impl Default for TruncationPolicy {
    fn default() -> Self {
        Self { tol: 1e-14, max_terms: 10_000, settle_count: 5, divergence_guard: 1e100 }
    }
}

impl TruncationPolicy {
    pub fn with_tol(tol: f64) -> Result<Self> {
        Self { tol, ..Self::default() }.validated()
    }

    pub fn validated(self) -> Result<Self> {
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(Error::InvalidArgument(format!("tol must be positive, got {}", self.tol)));
        }
        if self.settle_count < 1 || self.max_terms < self.settle_count {
            return Err(Error::InvalidArgument(format!(
                "need max_terms ({}) >= settle_count ({}) >= 1",
                self.max_terms, self.settle_count
            )));
        }
        if self.divergence_guard.is_nan() || self.divergence_guard <= 0.0 {
            return Err(Error::InvalidArgument("divergence_guard must be positive".into()));
        }
        Ok(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EvalStatus {
    Converged,
    RadiusExceeded,
    AbortedDivergent,
    MaxTermsReached,
}

impl EvalStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            EvalStatus::Converged => "converged",
            EvalStatus::RadiusExceeded => "radius_exceeded",
            EvalStatus::AbortedDivergent => "aborted_divergent",
            EvalStatus::MaxTermsReached => "max_terms_reached",
        }
    }

    fn severity(self) -> u8 {
        match self {
            EvalStatus::Converged => 0,
            EvalStatus::MaxTermsReached => 1,
            EvalStatus::RadiusExceeded => 2,
            EvalStatus::AbortedDivergent => 3,
        }
    }
}

impl fmt::Display for EvalStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A partial sum with its stopping diagnostics. `value` is the partial sum
/// at the point summation stopped, whatever the status.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport<T> {
    pub value: T,
    pub terms_used: usize,
    pub tail_estimate: f64,
    pub status: EvalStatus,
}

impl<T> EvalReport<T> {
    pub fn is_converged(&self) -> bool {
        self.status == EvalStatus::Converged
    }

    /// The value, or [`Error::NotConverged`] for any other status.
    pub fn converged(self) -> Result<T> {
        match self.status {
            EvalStatus::Converged => Ok(self.value),
            status => Err(Error::NotConverged(format!("{status} after {} terms", self.terms_used))),
        }
    }
}

/// Sums `first + next(first, 1) + next(.., 2) + ...` under `policy`.
fn sum_terms<T: Clone>(
    first: T,
    norm: impl Fn(&T) -> f64,
    mut next: impl FnMut(&T, usize) -> Result<T>,
    add: impl Fn(&mut T, &T),
    finite_radius: bool,
    policy: &TruncationPolicy,
) -> Result<EvalReport<T>> {
    let policy = policy.validated()?;
    let mut sum = first.clone();
    let mut term = first;
    let mut prev_norm = norm(&term);
    let report = |value, terms_used, tail_estimate, status| Ok(EvalReport { value, terms_used, tail_estimate, status });
    if !prev_norm.is_finite() || prev_norm > policy.divergence_guard {
        return report(sum, 1, f64::INFINITY, EvalStatus::AbortedDivergent);
    }
    if prev_norm == 0.0 {
        return report(sum, 1, 0.0, EvalStatus::Converged);
    }
    let (mut small_run, mut growth_run) = (0usize, 0usize);
    let mut ratio = f64::INFINITY;
    for p in 1..policy.max_terms {
        term = next(&term, p)?;
        let tn = norm(&term);
        if !tn.is_finite() || tn > policy.divergence_guard {
            return report(sum, p, f64::INFINITY, EvalStatus::AbortedDivergent);
        }
        if tn == 0.0 {
            // every later term is a multiple of this one
            return report(sum, p, 0.0, EvalStatus::Converged);
        }
        add(&mut sum, &term);
        ratio = tn / prev_norm;
        prev_norm = tn;
        growth_run = if ratio >= 1.0 { growth_run + 1 } else { 0 };
        if finite_radius && growth_run >= policy.settle_count {
            return report(sum, p + 1, f64::INFINITY, EvalStatus::RadiusExceeded);
        }
        small_run = if tn < policy.tol { small_run + 1 } else { 0 };
        if small_run >= policy.settle_count && ratio < 1.0 {
            let tail = tn / (1.0 - ratio);
            if tail <= policy.tol {
                return report(sum, p + 1, tail, EvalStatus::Converged);
            }
        }
    }
    let tail = if ratio < 1.0 { prev_norm / (1.0 - ratio) } else { f64::INFINITY };
    report(sum, policy.max_terms, tail, EvalStatus::MaxTermsReached)
}

fn finite_radius(seq: &MomentSequence) -> bool {
    !seq.rapid_growth_declared()
}

/// `E(Az)` by direct summation.
pub fn eval_exp(
    a: &FloatMatrix,
    z: Complex64,
    seq: &MomentSequence,
    policy: &TruncationPolicy,
) -> Result<EvalReport<FloatMatrix>> {
    let n = a.n()?;
    let az = a.scale(&z);
    sum_terms(
        FloatMatrix::identity(n),
        Matrix::row_sum_norm,
        |t, p| Ok(t.matmul(&az)?.scale(&FloatScalar::new(1.0 / seq.step_ratio(p)?, 0.0))),
        |s, t| s.add_assign(t),
        finite_radius(seq),
        policy,
    )
}

/// `E(Az) · v` without forming `E(Az)`: terms `(Az)^p v / m(p)`.
pub fn eval_exp_apply(
    a: &FloatMatrix,
    v: &FloatMatrix,
    z: Complex64,
    seq: &MomentSequence,
    policy: &TruncationPolicy,
) -> Result<EvalReport<FloatMatrix>> {
    a.n()?;
    let az = a.scale(&z);
    sum_terms(
        v.clone(),
        Matrix::row_sum_norm,
        |t, p| Ok(az.matmul(t)?.scale(&FloatScalar::new(1.0 / seq.step_ratio(p)?, 0.0))),
        |s, t| s.add_assign(t),
        finite_radius(seq),
        policy,
    )
}

/// Scalar `E(x) = Σ x^p / m(p)`.
pub fn eval_scalar(x: Complex64, seq: &MomentSequence, policy: &TruncationPolicy) -> Result<EvalReport<Complex64>> {
    delta_e(Complex64::one(), 0, x, seq, policy)
}

/// `Δ_h E(λ, z) = Σ_{p>=h} C(p, h) λ^{p-h} z^p / m(p)`.
///
/// Terms follow `t_p = t_{p-1} · λz · p/(p-h) · m(p-1)/m(p)`, so no
/// binomial or factorial is ever formed explicitly.
pub fn delta_e(
    lambda: Complex64,
    h: usize,
    z: Complex64,
    seq: &MomentSequence,
    policy: &TruncationPolicy,
) -> Result<EvalReport<Complex64>> {
    let first = if z.is_zero() {
        if h == 0 {
            Complex64::one()
        } else {
            Complex64::zero()
        }
    } else {
        z.powu(h as u32) * (-seq.ln_value(h)?).exp()
    };
    let lz = lambda * z;
    sum_terms(
        first,
        |t| t.norm(),
        |t, i| {
            let p = h + i;
            Ok(t * lz * (p as f64 / i as f64) / seq.step_ratio(p)?)
        },
        |s, t| *s += t,
        finite_radius(seq),
        policy,
    )
}

/// `E(J_{λ,size} z)`: the upper-triangular Toeplitz matrix whose `h`-th
/// superdiagonal holds `Δ_h E(λ, z)`.
pub fn jordan_block_exp(
    lambda: Complex64,
    size: usize,
    z: Complex64,
    seq: &MomentSequence,
    policy: &TruncationPolicy,
) -> Result<EvalReport<FloatMatrix>> {
    if size == 0 {
        return Err(Error::InvalidArgument("jordan block size must be positive".into()));
    }
    let deltas = (0..size).map(|h| delta_e(lambda, h, z, seq, policy)).collect::<Result<Vec<_>>>()?;
    let value = FloatMatrix::from_fn(size, size, |r, c| if c >= r { deltas[c - r].value } else { Complex64::zero() });
    Ok(EvalReport {
        value,
        terms_used: deltas.iter().map(|d| d.terms_used).max().unwrap_or(0),
        tail_estimate: deltas.iter().map(|d| d.tail_estimate).sum(),
        status: worst_status(deltas.iter().map(|d| d.status)),
    })
}

fn worst_status(statuses: impl Iterator<Item = EvalStatus>) -> EvalStatus {
    statuses.max_by_key(|s| s.severity()).unwrap_or(EvalStatus::Converged)
}

/// `P · blockdiag(E(J_i z)) · P^{-1}`, blocks in decomposition order.
pub fn eval_via_jordan<S: Scalar>(
    dec: &JordanDecomposition<S>,
    z: Complex64,
    seq: &MomentSequence,
    policy: &TruncationPolicy,
) -> Result<EvalReport<FloatMatrix>> {
    let blocks = dec
        .blocks
        .iter()
        .map(|b| jordan_block_exp(b.eigenvalue.to_float(), b.size, z, seq, policy))
        .collect::<Result<Vec<_>>>()?;
    let values: Vec<FloatMatrix> = blocks.iter().map(|b| b.value.clone()).collect();
    let inner = FloatMatrix::block_diagonal(&values)?;
    let p = dec.p.to_float();
    let p_inv = dec.p_inv.to_float();
    let value = p.matmul(&inner)?.matmul(&p_inv)?;
    let amplification = p.row_sum_norm() * p_inv.row_sum_norm();
    Ok(EvalReport {
        value,
        terms_used: blocks.iter().map(|b| b.terms_used).max().unwrap_or(0),
        tail_estimate: amplification * blocks.iter().map(|b| b.tail_estimate).sum::<f64>(),
        status: worst_status(blocks.iter().map(|b| b.status)),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormBound {
    /// `‖E(Az)‖`
    pub lhs: f64,
    /// `E(‖A‖ |z|)`
    pub rhs: f64,
    pub holds: bool,
}

/// Checks `‖E(Az)‖ <= E(‖A‖ |z|)` in the row-sum norm.
pub fn norm_bound_check(
    a: &FloatMatrix,
    z: Complex64,
    seq: &MomentSequence,
    policy: &TruncationPolicy,
) -> Result<NormBound> {
    let lhs = eval_exp(a, z, seq, policy)?.converged()?.row_sum_norm();
    let arg = Complex64::new(a.row_sum_norm() * z.norm(), 0.0);
    let rhs = eval_scalar(arg, seq, policy)?.converged()?.re;
    let slack = policy.tol * (1.0 + rhs.abs()) + 1e-13 * rhs.abs();
    Ok(NormBound { lhs, rhs, holds: lhs <= rhs + slack })
}

/// `det E(A)` next to `E(tr A)`. They agree for `m(p) = B^p p!` and not in
/// general; no equality is asserted here.
#[derive(Debug, Clone, PartialEq)]
pub struct DetTraceProbe {
    pub det_of_exp: Complex64,
    pub det_status: EvalStatus,
    pub exp_of_trace: Complex64,
    pub trace_status: EvalStatus,
}

pub fn det_trace_probe(a: &FloatMatrix, seq: &MomentSequence, policy: &TruncationPolicy) -> Result<DetTraceProbe> {
    let e = eval_exp(a, Complex64::one(), seq, policy)?;
    let t = eval_scalar(a.trace()?, seq, policy)?;
    Ok(DetTraceProbe {
        det_of_exp: e.value.determinant()?,
        det_status: e.status,
        exp_of_trace: t.value,
        trace_status: t.status,
    })
}

/// Exact `E(Az)` where a closed form exists:
///
/// * `Az` nilpotent: the series is the finite sum `Σ_{p<n} (Az)^p / m(p)`;
/// * `m(p) = b^p` with rational `b` and spectral radius of `Az` below `b`:
///   the Neumann series `Σ (Az/b)^p = b (bI - Az)^{-1}`.
///
/// Returns [`Error::NotConverged`] when the geometric series diverges and
/// [`Error::NoExactClosedForm`] otherwise.
pub fn eval_exp_exact(a: &ExactMatrix, z: &ExactScalar, seq: &MomentSequence) -> Result<ExactMatrix> {
    let n = a.n()?;
    let az = a.scale(z);
    let powers = {
        let mut v = vec![ExactMatrix::identity(n)];
        for _ in 0..n {
            let next = v.last().expect("nonempty").matmul(&az)?;
            v.push(next);
        }
        v
    };
    if powers[n].is_zero() {
        let mut sum = ExactMatrix::zeros(n, n);
        for (p, pw) in powers.iter().enumerate().take(n) {
            if pw.is_zero() {
                break;
            }
            sum.add_assign(&pw.scale(&(ExactScalar::one() / ExactScalar::moment(seq, p)?)));
        }
        return Ok(sum);
    }
    if let MomentKind::Geometric { b: Param::Exact(b) } = seq.kind() {
        let b = ExactScalar::new(b.clone(), Default::default());
        let scaled = az.scale(&(ExactScalar::one() / b.clone()));
        if !spectral_radius_below_one(&scaled)? {
            return Err(Error::NotConverged(format!(
                "radius_exceeded: spectral radius of Az is not below {}",
                seq.specifier()
            )));
        }
        let resolvent = ExactMatrix::identity(n).sub(&scaled)?.inverse()?;
        return Ok(resolvent);
    }
    Err(Error::NoExactClosedForm(format!("Az is not nilpotent and {} has no exact summation rule", seq.specifier())))
}

/// Gelfand test: some power `k <= 32` with `‖M^k‖ < 1` (with a small margin
/// against rounding in the float norm).
fn spectral_radius_below_one(m: &ExactMatrix) -> Result<bool> {
    let mut pw = m.clone();
    for _ in 0..32 {
        if pw.row_sum_norm() < 1.0 - 1e-9 {
            return Ok(true);
        }
        pw = pw.matmul(m)?;
    }
    Ok(false)
}
