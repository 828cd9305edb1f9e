//! Truncated formal power series in the moment basis.
//!
//! A [`MomentSeries`] with coefficients `c_0..c_N` represents
//! `Σ_{p=0}^{N} c_p z^p / m(p)`. Keeping the moment basis makes the moment
//! derivative a pure index shift, `∂_m: c_p ↦ c_{p+1}`, independent of the
//! sequence values.
//!
//! Coefficients are matrices of one common shape; vectors are `n x 1` and
//! scalars `1 x 1`.

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::moment::MomentSequence;
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq)]
pub struct MomentSeries<S> {
    seq: MomentSequence,
    coeffs: Vec<Matrix<S>>,
}

impl<S: Scalar> MomentSeries<S> {
    pub fn new(seq: MomentSequence, coeffs: Vec<Matrix<S>>) -> Result<Self> {
        let first = coeffs.first().ok_or(Error::EmptySeries)?;
        let shape = (first.rows(), first.cols());
        if coeffs.iter().any(|c| (c.rows(), c.cols()) != shape) {
            return Err(Error::DimensionMismatch("series coefficients must share one shape".into()));
        }
        if let Some(len) = seq.len_limit() {
            if coeffs.len() > len {
                return Err(Error::MomentUnavailable {
                    index: coeffs.len() - 1,
                    reason: format!("custom sequence has only {len} values"),
                });
            }
        }
        Ok(Self { seq, coeffs })
    }

    /// The multiplicative unit: `c_0 = I`, all other coefficients zero.
    pub fn unit(n: usize, seq: MomentSequence, order: usize) -> Result<Self> {
        let mut coeffs = vec![Matrix::zeros(n, n); order + 1];
        coeffs[0] = Matrix::identity(n);
        Self::new(seq, coeffs)
    }

    /// `E(Az)` truncated at `order`: moment coefficients `A^p`.
    pub fn exp_series(a: &Matrix<S>, seq: MomentSequence, order: usize) -> Result<Self> {
        let n = a.n()?;
        Self::geometric_coefficients(Matrix::identity(n), a, seq, order)
    }

    /// Coefficients `A^p · first` for `p = 0..=order`.
    pub(crate) fn geometric_coefficients(
        first: Matrix<S>,
        a: &Matrix<S>,
        seq: MomentSequence,
        order: usize,
    ) -> Result<Self> {
        let mut coeffs = Vec::with_capacity(order + 1);
        coeffs.push(first);
        for p in 1..=order {
            let next = a.matmul(&coeffs[p - 1])?;
            coeffs.push(next);
        }
        Self::new(seq, coeffs)
    }

    pub fn seq(&self) -> &MomentSequence {
        &self.seq
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[Matrix<S>] {
        &self.coeffs
    }

    pub fn coeff(&self, p: usize) -> &Matrix<S> {
        &self.coeffs[p]
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.coeffs[0].rows(), self.coeffs[0].cols())
    }

    pub fn truncate(&self, order: usize) -> Self {
        let keep = (order + 1).min(self.coeffs.len());
        Self { seq: self.seq.clone(), coeffs: self.coeffs[..keep].to_vec() }
    }

    /// `∂_m`: drops `c_0` and shifts every other coefficient down by one.
    pub fn moment_derivative(&self) -> Result<Self> {
        if self.coeffs.len() < 2 {
            return Err(Error::EmptySeries);
        }
        Ok(Self { seq: self.seq.clone(), coeffs: self.coeffs[1..].to_vec() })
    }

    fn check_seq(&self, other: &Self) -> Result<()> {
        if self.seq != other.seq {
            return Err(Error::SequenceMismatch { left: self.seq.specifier(), right: other.seq.specifier() });
        }
        Ok(())
    }

    /// Product of the represented functions, in the moment basis:
    /// `r_p = Σ_n m(p)/(m(n) m(p-n)) · a_n · b_{p-n}`.
    ///
    /// The result has order `min(N1, N2)`. Coefficient products keep their
    /// order (`a_n` on the left), so matrix coefficients need not commute.
    pub fn cauchy_product(&self, other: &Self) -> Result<Self> {
        self.check_seq(other)?;
        let order = self.order().min(other.order());
        let mut coeffs = Vec::with_capacity(order + 1);
        for p in 0..=order {
            let mut acc: Option<Matrix<S>> = None;
            for n in 0..=p {
                let (a, b) = (&self.coeffs[n], &other.coeffs[p - n]);
                if a.is_zero() || b.is_zero() {
                    continue;
                }
                let w = S::moment_binomial(&self.seq, p, n)?;
                let term = a.matmul(b)?.scale(&w);
                match acc.as_mut() {
                    Some(acc) => acc.add_assign(&term),
                    None => acc = Some(term),
                }
            }
            let shape_rows = self.coeffs[0].rows();
            let shape_cols = other.coeffs[0].cols();
            if self.coeffs[0].cols() != other.coeffs[0].rows() {
                return Err(Error::DimensionMismatch("incompatible coefficient shapes".into()));
            }
            coeffs.push(acc.unwrap_or_else(|| Matrix::zeros(shape_rows, shape_cols)));
        }
        Self::new(self.seq.clone(), coeffs)
    }

    /// `M · s(z)`, coefficientwise.
    pub fn left_mul(&self, m: &Matrix<S>) -> Result<Self> {
        let coeffs = self.coeffs.iter().map(|c| m.matmul(c)).collect::<Result<Vec<_>>>()?;
        Self::new(self.seq.clone(), coeffs)
    }

    pub fn scale(&self, s: &S) -> Self {
        Self { seq: self.seq.clone(), coeffs: self.coeffs.iter().map(|c| c.scale(s)).collect() }
    }

    /// Sum truncated to the common order.
    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, Matrix::add)
    }

    /// Difference truncated to the common order.
    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, Matrix::sub)
    }

    fn zip_with(&self, other: &Self, f: impl Fn(&Matrix<S>, &Matrix<S>) -> Result<Matrix<S>>) -> Result<Self> {
        self.check_seq(other)?;
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| f(a, b)).collect::<Result<Vec<_>>>()?;
        Self::new(self.seq.clone(), coeffs)
    }

    /// Plain Taylor coefficient `c_p / m(p)`.
    pub fn taylor_coefficient(&self, p: usize) -> Result<Matrix<S>> {
        let m = S::moment(&self.seq, p)?;
        Ok(self.coeffs[p].scale(&(S::one() / m)))
    }

    /// The truncated sum `Σ_{p<=N} c_p z^p / m(p)`.
    pub fn partial_sum(&self, z: &S) -> Result<Matrix<S>> {
        let mut sum = self.coeffs[0].clone();
        let mut zp = S::one();
        for p in 1..self.coeffs.len() {
            zp = zp * z.clone();
            let w = zp.clone() / S::moment(&self.seq, p)?;
            sum.add_assign(&self.coeffs[p].scale(&w));
        }
        Ok(sum)
    }

    /// Largest coefficient row-sum norm.
    pub fn max_coeff_norm(&self) -> f64 {
        self.coeffs.iter().map(Matrix::row_sum_norm).fold(0.0, f64::max)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(Matrix::is_zero)
    }

    /// Coefficientwise comparison through the common order, with absolute
    /// tolerance `tol` scaled by the largest coefficient norm of either
    /// operand. With `tol = 0` this is exact equality.
    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        if self.seq != other.seq || self.shape() != other.shape() {
            return false;
        }
        let scale = self.max_coeff_norm().max(other.max_coeff_norm()).max(1.0);
        self.coeffs.iter().zip(&other.coeffs).all(|(a, b)| a.distance(b).is_ok_and(|d| d <= tol * scale))
    }
}

/// Coefficients `φ_0..φ_N` of the inverse of `E(Az)`:
/// `φ_0 = 1` and `φ_p = -Σ_{j<p} m(p)/(m(j) m(p-j)) φ_j`.
pub fn phi_coefficients<S: Scalar>(seq: &MomentSequence, order: usize) -> Result<Vec<S>> {
    let mut phi: Vec<S> = Vec::with_capacity(order + 1);
    phi.push(S::one());
    for p in 1..=order {
        let mut acc = S::zero();
        for (j, phi_j) in phi.iter().enumerate() {
            acc = acc + S::moment_binomial(seq, p, j)? * phi_j.clone();
        }
        phi.push(-acc);
    }
    Ok(phi)
}

/// `E(Az)^{-1}` truncated at `order`: moment coefficients `φ_p A^p`.
pub fn inverse_series<S: Scalar>(a: &Matrix<S>, seq: MomentSequence, order: usize) -> Result<MomentSeries<S>> {
    let phi = phi_coefficients::<S>(&seq, order)?;
    let powers = MomentSeries::exp_series(a, seq.clone(), order)?;
    let coeffs = powers.coeffs.iter().zip(&phi).map(|(c, f)| c.scale(f)).collect();
    MomentSeries::new(seq, coeffs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{exact_matrix, ExactMatrix, FloatMatrix};
    use crate::scalar::{exact, exact_ratio, ExactScalar, FloatScalar};

    fn seq(spec: &str) -> MomentSequence {
        MomentSequence::parse(spec).unwrap()
    }

    fn a() -> ExactMatrix {
        exact_matrix(&[&[1, 0, 1], &[1, 2, 0], &[0, 0, 1]])
    }

    #[test]
    fn derivative_is_a_shift() {
        let a = a();
        let s = MomentSeries::new(seq("factorial"), vec![ExactMatrix::identity(3), a.clone(), &a * &a]).unwrap();
        let d = s.moment_derivative().unwrap();
        assert_eq!(d.coeffs(), &[a.clone(), &a * &a]);
        let single = MomentSeries::new(seq("factorial"), vec![a]).unwrap();
        assert_eq!(single.moment_derivative(), Err(Error::EmptySeries));
    }

    #[test]
    fn derivative_of_exponential() {
        for spec in ["factorial", "qfac:2", "geom:2"] {
            let e = MomentSeries::exp_series(&a(), seq(spec), 12).unwrap();
            let lhs = e.moment_derivative().unwrap();
            let rhs = e.truncate(11).left_mul(&a()).unwrap();
            assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn scalar_shift() {
        let lambda = exact_ratio(3, 2);
        let coeffs: Vec<ExactMatrix> = (0..6).map(|p| ExactMatrix::diagonal(&[pow(&lambda, p)])).collect();
        let s = MomentSeries::new(seq("qfac:2"), coeffs).unwrap();
        let d = s.moment_derivative().unwrap();
        for p in 0..5 {
            assert_eq!(d.coeff(p), &s.coeff(p).scale(&lambda));
        }
    }

    fn pow(x: &ExactScalar, p: usize) -> ExactScalar {
        (0..p).fold(exact(1, 0), |acc, _| acc * x.clone())
    }

    #[test]
    fn unit_is_neutral() {
        let s = MomentSeries::exp_series(&a(), seq("qfac:2"), 8).unwrap();
        let one = MomentSeries::unit(3, seq("qfac:2"), 8).unwrap();
        assert_eq!(s.cauchy_product(&one).unwrap(), s);
        assert_eq!(one.cauchy_product(&s).unwrap(), s);
    }

    #[test]
    fn commuting_exponentials_commute() {
        let a = a();
        let b = (&a * &a).sub(&a.scale(&exact(3, 0))).unwrap();
        for spec in ["factorial", "qfac:2", "geom:2"] {
            let ea = MomentSeries::exp_series(&a, seq(spec), 10).unwrap();
            let eb = MomentSeries::exp_series(&b, seq(spec), 10).unwrap();
            assert_eq!(ea.cauchy_product(&eb).unwrap(), eb.cauchy_product(&ea).unwrap());
        }
    }

    #[test]
    fn classical_exponential_inverse() {
        let ea = MomentSeries::exp_series(&a(), seq("factorial"), 15).unwrap();
        let em = MomentSeries::exp_series(&a().neg(), seq("factorial"), 15).unwrap();
        assert_eq!(ea.cauchy_product(&em).unwrap(), MomentSeries::unit(3, seq("factorial"), 15).unwrap());
    }

    #[test]
    fn product_truncates_to_common_order() {
        let long = MomentSeries::exp_series(&a(), seq("factorial"), 9).unwrap();
        let short = MomentSeries::exp_series(&a(), seq("factorial"), 4).unwrap();
        assert_eq!(long.cauchy_product(&short).unwrap().order(), 4);
    }

    #[test]
    fn product_rejects_mixed_sequences() {
        let s1 = MomentSeries::exp_series(&a(), seq("factorial"), 3).unwrap();
        let s2 = MomentSeries::exp_series(&a(), seq("qfac:2"), 3).unwrap();
        assert!(matches!(s1.cauchy_product(&s2), Err(Error::SequenceMismatch { .. })));
    }

    #[test]
    fn phi_for_factorial_alternates() {
        let phi = phi_coefficients::<ExactScalar>(&seq("factorial"), 6).unwrap();
        for (j, v) in phi.iter().enumerate() {
            assert_eq!(*v, exact(if j % 2 == 0 { 1 } else { -1 }, 0));
        }
    }

    #[test]
    fn phi_for_geometric_by_hand() {
        // φ_1 = -(2/(1·2)) = -1
        // φ_2 = -[4/(1·4)·1 + 4/(2·2)·(-1)] = 0
        // φ_3 = -[8/8·1 + 8/8·(-1) + 8/8·0] = 0
        let phi = phi_coefficients::<ExactScalar>(&seq("geom:2"), 3).unwrap();
        assert_eq!(phi, vec![exact(1, 0), exact(-1, 0), exact(0, 0), exact(0, 0)]);
    }

    #[test]
    fn inverse_series_cases() {
        let zero = ExactMatrix::zeros(3, 3);
        let inv = inverse_series(&zero, seq("qfac:2"), 5).unwrap();
        assert_eq!(inv, MomentSeries::unit(3, seq("qfac:2"), 5).unwrap());

        let inv = inverse_series(&a(), seq("factorial"), 10).unwrap();
        assert_eq!(inv, MomentSeries::exp_series(&a().neg(), seq("factorial"), 10).unwrap());

        let i = ExactMatrix::identity(2);
        let inv = inverse_series(&i, seq("geom:2"), 3).unwrap();
        assert_eq!(inv.coeffs(), &[i.clone(), i.neg(), ExactMatrix::zeros(2, 2), ExactMatrix::zeros(2, 2)]);
    }

    #[test]
    fn inverse_series_cancels_exponential() {
        for spec in ["factorial", "qfac:2", "geom:2", "qfac:5/3"] {
            let inv = inverse_series(&a(), seq(spec), 20).unwrap();
            let e = MomentSeries::exp_series(&a(), seq(spec), 20).unwrap();
            let prod = inv.cauchy_product(&e).unwrap();
            assert_eq!(prod, MomentSeries::unit(3, seq(spec), 20).unwrap(), "{spec}");
        }
    }

    #[test]
    fn q_factorial_is_not_multiplicative() {
        // E(A+B) vs E(A)E(B) with A = B = 1 differ at order 2.
        let one = ExactMatrix::identity(1);
        let two = one.scale(&exact(2, 0));
        let q = seq("qfac:2");
        let sum = MomentSeries::exp_series(&two, q.clone(), 2).unwrap();
        let e1 = MomentSeries::exp_series(&one, q.clone(), 2).unwrap();
        let prod = e1.cauchy_product(&e1).unwrap();
        assert_eq!(sum.taylor_coefficient(2).unwrap()[(0, 0)], exact_ratio(4, 3));
        assert_eq!(prod.taylor_coefficient(2).unwrap()[(0, 0)], exact_ratio(5, 3));
        assert_ne!(sum, prod);
    }

    #[test]
    fn float_series_compare_with_tolerance() {
        let a = a().to_float();
        let s1 = MomentSeries::exp_series(&a, seq("ml:2"), 10).unwrap();
        let bumped: Vec<FloatMatrix> = s1
            .coeffs()
            .iter()
            .map(|c| c.add(&FloatMatrix::identity(3).scale(&FloatScalar::new(1e-15, 0.0))).unwrap())
            .collect();
        let s2 = MomentSeries::new(seq("ml:2"), bumped).unwrap();
        assert!(s1.approx_eq(&s2, 1e-12));
        assert!(!s1.approx_eq(&s2, 0.0));
    }

    #[test]
    fn float_only_sequence_rejected_in_exact_backend() {
        let e = MomentSeries::exp_series(&a(), seq("ml:2"), 3).unwrap();
        assert!(matches!(e.cauchy_product(&e), Err(Error::NotExact(_))));
    }

    #[test]
    fn partial_sum_of_nilpotent_is_exact() {
        let n = ExactMatrix::shift(3);
        let s = MomentSeries::exp_series(&n, seq("factorial"), 5).unwrap();
        let v = s.partial_sum(&exact(1, 0)).unwrap();
        let expected = ExactMatrix::from_rows(vec![
            vec![exact(1, 0), exact(1, 0), exact_ratio(1, 2)],
            vec![exact(0, 0), exact(1, 0), exact(1, 0)],
            vec![exact(0, 0), exact(0, 0), exact(1, 0)],
        ])
        .unwrap();
        assert_eq!(v, expected);
    }
}
