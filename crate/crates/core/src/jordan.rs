//! Jordan canonical form `A = P J P^{-1}` for desk-scale matrices.
//!
//! Eigenvalues come from the characteristic polynomial (Faddeev-LeVerrier)
//! and an Aberth-Ehrlich simultaneous root iteration.
//!
//! * Float backend: multiplicities come from a square-free factorization of
//!   the exactly formed characteristic polynomial (small `n`), and roots
//!   closer than `eig_tol · max(1, |λ|)` are merged. See [`eigenvalues`].
//! * Exact backend: a square-free factorization gives exact multiplicities,
//!   the simple roots of each factor are snapped to Gaussian rationals and
//!   checked by exact evaluation. Kernels are then computed exactly, so the
//!   decomposition has zero residual. Matrices whose eigenvalues are not
//!   Gaussian rationals must use the float backend.
//!
//! Chains follow `(A - λI) v^j = v^{j-1}` with `v^0 = 0`; each block
//! contributes the columns `v^1, ..., v^size` to `P`. Eigenvalues are ordered
//! by real then imaginary part, and blocks of one eigenvalue by descending
//! size.

use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::matrix::{ExactMatrix, FloatMatrix, Matrix};
use crate::scalar::{ExactScalar, FloatScalar, Scalar};

#[derive(Debug, Clone, PartialEq)]
pub struct JordanBlock<S> {
    pub eigenvalue: S,
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct JordanDecomposition<S> {
    pub p: Matrix<S>,
    pub blocks: Vec<JordanBlock<S>>,
    pub p_inv: Matrix<S>,
    /// `‖A - P J P^{-1}‖` in the row-sum norm.
    pub residual: f64,
}

impl<S: Scalar> JordanDecomposition<S> {
    /// Builds a decomposition from a supplied `P` and block list, computing
    /// `P^{-1}` and the residual against `a`.
    pub fn from_parts(a: &Matrix<S>, p: Matrix<S>, blocks: Vec<JordanBlock<S>>) -> Result<Self> {
        let p_inv = p.inverse()?;
        let mut dec = Self { p, blocks, p_inv, residual: 0.0 };
        dec.residual = dec.reconstruction_error(a)?;
        Ok(dec)
    }

    /// `J`, with blocks in stored order.
    pub fn j(&self) -> Result<Matrix<S>> {
        let blocks: Vec<Matrix<S>> =
            self.blocks.iter().map(|b| Matrix::jordan_block(b.eigenvalue.clone(), b.size)).collect();
        Matrix::block_diagonal(&blocks)
    }

    pub fn dim(&self) -> usize {
        self.blocks.iter().map(|b| b.size).sum()
    }

    pub fn reconstruction_error(&self, a: &Matrix<S>) -> Result<f64> {
        let n = a.n()?;
        if self.dim() != n || self.p.n()? != n || self.p_inv.n()? != n {
            return Err(Error::DimensionMismatch(format!(
                "matrix is {n}x{n} but the decomposition has dimension {} and P is {}x{}",
                self.dim(),
                self.p.rows(),
                self.p.cols()
            )));
        }
        a.distance(&self.p.matmul(&self.j()?)?.matmul(&self.p_inv)?)
    }

    /// `(λ, size)` pairs in float form.
    pub fn block_list(&self) -> Vec<(Complex64, usize)> {
        self.blocks.iter().map(|b| (b.eigenvalue.to_float(), b.size)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JordanOptions {
    /// Relative threshold for rank and kernel decisions.
    pub rank_tol: f64,
    /// Relative distance below which float roots are merged.
    pub eig_tol: f64,
}

impl Default for JordanOptions {
    fn default() -> Self {
        Self { rank_tol: 1e-8, eig_tol: 1e-3 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Verification {
    /// `‖A - P J P^{-1}‖`
    pub residual: f64,
    /// `‖P · P_inv - I‖`
    pub inverse_residual: f64,
    pub ok: bool,
}

/// Recomputes both residuals of a supplied decomposition.
pub fn verify_decomposition<S: Scalar>(a: &Matrix<S>, dec: &JordanDecomposition<S>, tol: f64) -> Result<Verification> {
    let residual = dec.reconstruction_error(a)?;
    let n = a.n()?;
    let inverse_residual = dec.p.matmul(&dec.p_inv)?.distance(&Matrix::identity(n))?;
    Ok(Verification { residual, inverse_residual, ok: residual <= tol && inverse_residual <= tol })
}

/// Backend-specific eigenvalue computation.
pub trait JordanScalar: Scalar {
    /// Distinct eigenvalues with algebraic multiplicities, in canonical order.
    fn spectrum(a: &Matrix<Self>, opts: &JordanOptions) -> Result<Vec<(Self, usize)>>;

    /// Rescales a kernel vector for well-conditioned rank tests.
    fn normalized(v: Matrix<Self>) -> Matrix<Self>;
}

impl JordanScalar for FloatScalar {
    fn spectrum(a: &Matrix<Self>, opts: &JordanOptions) -> Result<Vec<(Self, usize)>> {
        eigenvalues(a, opts.eig_tol)
    }

    fn normalized(v: Matrix<Self>) -> Matrix<Self> {
        let m = v.entries().iter().map(|x| x.norm()).fold(0.0, f64::max);
        if m > 0.0 {
            v.scale(&Complex64::new(1.0 / m, 0.0))
        } else {
            v
        }
    }
}

impl JordanScalar for ExactScalar {
    fn spectrum(a: &Matrix<Self>, _opts: &JordanOptions) -> Result<Vec<(Self, usize)>> {
        exact_eigenvalues(a)
    }

    fn normalized(v: Matrix<Self>) -> Matrix<Self> {
        v
    }
}

/// Coefficients of `det(xI - A)`, lowest degree first (monic, length `n+1`).
pub fn char_poly<S: Scalar>(a: &Matrix<S>) -> Result<Vec<S>> {
    let n = a.n()?;
    let mut coeffs = vec![S::zero(); n + 1];
    coeffs[n] = S::one();
    let mut m = Matrix::<S>::zeros(n, n);
    for k in 1..=n {
        // M_k = A M_{k-1} + c_{n-k+1} I,  c_{n-k} = -tr(A M_k) / k
        let mut next = a.matmul(&m)?;
        for i in 0..n {
            next[(i, i)] = next[(i, i)].clone() + coeffs[n - k + 1].clone();
        }
        m = next;
        let tr = a.matmul(&m)?.trace()?;
        coeffs[n - k] = -(tr / S::from_i64(k as i64));
    }
    Ok(coeffs)
}

const ABERTH_MAX_ITER: usize = 2000;

/// All complex roots of `Σ c_k x^k` (lowest degree first, nonzero leading
/// coefficient) by the Aberth-Ehrlich iteration.
///
/// A root is accepted once `|p(z)|` falls to the rounding level of the
/// evaluation, which multiple roots reach long before their corrections
/// become small.
pub fn polynomial_roots(coeffs: &[Complex64]) -> Result<Vec<Complex64>> {
    let mut c = coeffs.to_vec();
    while c.last().is_some_and(|x| x.is_zero()) {
        c.pop();
    }
    if c.is_empty() {
        return Err(Error::InvalidArgument("zero polynomial has no finite root set".into()));
    }
    let deg = c.len() - 1;
    if deg == 0 {
        return Ok(Vec::new());
    }
    let lead = c[deg];
    let c: Vec<Complex64> = c.iter().map(|x| x / lead).collect();
    let dc: Vec<Complex64> = (1..=deg).map(|k| c[k] * k as f64).collect();
    let abs_c: Vec<f64> = c.iter().map(|x| x.norm()).collect();

    // Fujiwara-type bound for the initial circle
    let radius =
        (0..deg).map(|k| (abs_c[k]).powf(1.0 / (deg - k) as f64)).fold(0.0, f64::max).max(f64::MIN_POSITIVE) * 2.0;
    let mut z: Vec<Complex64> = (0..deg)
        .map(|k| Complex64::from_polar(radius * 0.5, 2.0 * std::f64::consts::PI * k as f64 / deg as f64 + 0.4))
        .collect();
    let mut done = vec![false; deg];
    let eps = f64::EPSILON;
    for _ in 0..ABERTH_MAX_ITER {
        if done.iter().all(|&d| d) {
            return Ok(z);
        }
        for i in 0..deg {
            if done[i] {
                continue;
            }
            let zi = z[i];
            let pv = horner(&c, zi);
            let bound = horner_abs(&abs_c, zi.norm());
            if pv.norm() <= 8.0 * eps * bound {
                done[i] = true;
                continue;
            }
            let dv = horner(&dc, zi);
            let w = if dv.is_zero() { Complex64::new(eps.sqrt(), 0.0) } else { pv / dv };
            let s: Complex64 = (0..deg)
                .filter(|&j| j != i)
                .map(|j| {
                    let d = zi - z[j];
                    if d.is_zero() {
                        Complex64::zero()
                    } else {
                        d.inv()
                    }
                })
                .sum();
            let denom = Complex64::one() - w * s;
            let step = if denom.is_zero() { w } else { w / denom };
            z[i] = zi - step;
            if step.norm() <= eps * zi.norm().max(1.0) {
                done[i] = true;
            }
        }
    }
    Err(Error::RootFinding(ABERTH_MAX_ITER))
}

fn horner(c: &[Complex64], z: Complex64) -> Complex64 {
    c.iter().rev().fold(Complex64::zero(), |acc, &ck| acc * z + ck)
}

fn horner_abs(c: &[f64], r: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &ck| acc * r + ck)
}

/// Above this dimension the float path skips the exact characteristic
/// polynomial and finds all roots of the float one.
pub const EXACT_CHAR_POLY_MAX_DIM: usize = 12;

/// Float eigenvalues with multiplicities.
///
/// Every `f64` is a dyadic rational, so for `n <= EXACT_CHAR_POLY_MAX_DIM`
/// the characteristic polynomial of the given entries is formed exactly and
/// split into square-free factors; Aberth then only meets simple roots.
/// Roots within `eig_tol · max(1, |λ|)` of one another are still merged,
/// which is what makes slightly perturbed defective matrices come out
/// defective. A merged eigenvalue of multiplicity `m` is refined as the
/// simple root of the `(m-1)`-th derivative of the characteristic
/// polynomial near the cluster mean.
pub fn eigenvalues(a: &FloatMatrix, eig_tol: f64) -> Result<Vec<(Complex64, usize)>> {
    if eig_tol.is_nan() || eig_tol < 0.0 {
        return Err(Error::InvalidArgument(format!("eig_tol must be nonnegative, got {eig_tol}")));
    }
    let n = a.n()?;
    let (poly, roots): (Vec<Complex64>, Vec<(Complex64, usize)>) = if n <= EXACT_CHAR_POLY_MAX_DIM {
        let exact = dyadic(a)?;
        let f = char_poly(&exact)?;
        let mut roots = Vec::new();
        for (mult, factor) in square_free(&f) {
            let approx: Vec<Complex64> = factor.iter().map(Scalar::to_float).collect();
            roots.extend(polynomial_roots(&approx)?.into_iter().map(|r| (r, mult)));
        }
        (f.iter().map(Scalar::to_float).collect(), roots)
    } else {
        let f = char_poly(a)?;
        let roots = polynomial_roots(&f)?.into_iter().map(|r| (r, 1)).collect();
        (f, roots)
    };

    let k = roots.len();
    let mut parent: Vec<usize> = (0..k).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for i in 0..k {
        for j in i + 1..k {
            let (x, y) = (roots[i].0, roots[j].0);
            if (x - y).norm() <= eig_tol * 1f64.max(x.norm()).max(y.norm()) {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                parent[ri] = rj;
            }
        }
    }
    // (weighted sum, multiplicity, member count) per cluster
    let mut clusters: Vec<(Complex64, usize, usize)> = Vec::new();
    let mut ids: Vec<usize> = Vec::new();
    for (i, &(root, mult)) in roots.iter().enumerate() {
        let r = find(&mut parent, i);
        let pos = ids.iter().position(|&x| x == r).unwrap_or_else(|| {
            ids.push(r);
            clusters.push((Complex64::zero(), 0, 0));
            clusters.len() - 1
        });
        clusters[pos].0 += root * mult as f64;
        clusters[pos].1 += mult;
        clusters[pos].2 += 1;
    }
    let mut out: Vec<(Complex64, usize)> = clusters
        .into_iter()
        .map(|(sum, m, members)| {
            let mean = sum / m as f64;
            let lambda = if members > 1 { refine_multiple_root(&poly, mean, m) } else { mean };
            (clean(lambda), m)
        })
        .collect();
    out.sort_by(|x, y| x.0.re.total_cmp(&y.0.re).then(x.0.im.total_cmp(&y.0.im)));
    Ok(out)
}

/// The exact Gaussian-rational value of each float entry.
fn dyadic(a: &FloatMatrix) -> Result<ExactMatrix> {
    let conv = |x: f64| {
        BigRational::from_float(x).ok_or_else(|| Error::InvalidArgument(format!("matrix entry {x} is not finite")))
    };
    let mut out = ExactMatrix::zeros(a.rows(), a.cols());
    for r in 0..a.rows() {
        for c in 0..a.cols() {
            let v = a[(r, c)];
            out[(r, c)] = ExactScalar::new(conv(v.re)?, conv(v.im)?);
        }
    }
    Ok(out)
}

/// Newton on `p^{(m-1)}`, for which a root of multiplicity `m` of `p` is
/// simple. Keeps `start` if the iteration wanders off.
fn refine_multiple_root(poly: &[Complex64], start: Complex64, m: usize) -> Complex64 {
    if m < 2 {
        return start;
    }
    let mut d = poly.to_vec();
    for _ in 1..m {
        d = (1..d.len()).map(|k| d[k] * k as f64).collect();
    }
    let dd: Vec<Complex64> = (1..d.len()).map(|k| d[k] * k as f64).collect();
    let mut z = start;
    for _ in 0..50 {
        let slope = horner(&dd, z);
        if slope.is_zero() {
            break;
        }
        let step = horner(&d, z) / slope;
        z -= step;
        if step.norm() <= f64::EPSILON * z.norm().max(1.0) {
            break;
        }
    }
    if z.is_finite() && (z - start).norm() <= 1e-3 * start.norm().max(1.0) {
        z
    } else {
        start
    }
}

/// Drops rounding-level real or imaginary parts.
fn clean(z: Complex64) -> Complex64 {
    let cut = 1e-13 * z.norm().max(1.0);
    Complex64::new(if z.re.abs() <= cut { 0.0 } else { z.re }, if z.im.abs() <= cut { 0.0 } else { z.im })
}

/// Exact eigenvalues with multiplicities, when all are Gaussian rationals.
pub fn exact_eigenvalues(a: &ExactMatrix) -> Result<Vec<(ExactScalar, usize)>> {
    let f = char_poly(a)?;
    let mut out = Vec::new();
    for (mult, factor) in square_free(&f) {
        if factor.len() < 2 {
            continue;
        }
        let approx: Vec<Complex64> = factor.iter().map(Scalar::to_float).collect();
        for root in polynomial_roots(&approx)? {
            let lambda = snap(root).filter(|l| poly_eval(&factor, l).is_zero()).ok_or_else(|| {
                Error::NotExact(format!(
                    "eigenvalue near {:.6}{:+.6}i is not a Gaussian rational; use the float backend",
                    root.re, root.im
                ))
            })?;
            out.push((lambda, mult));
        }
    }
    out.sort_by(|x, y| {
        let (a, b) = (&x.0, &y.0);
        a.re.cmp(&b.re).then(a.im.cmp(&b.im))
    });
    Ok(out)
}

/// Nearest Gaussian rational with a small denominator.
fn snap(z: Complex64) -> Option<ExactScalar> {
    Some(ExactScalar::new(snap_real(z.re)?, snap_real(z.im)?))
}

fn snap_real(x: f64) -> Option<BigRational> {
    if !x.is_finite() {
        return None;
    }
    // continued-fraction convergents
    let (mut h0, mut h1) = (0i128, 1i128);
    let (mut k0, mut k1) = (1i128, 0i128);
    let mut r = x;
    for _ in 0..40 {
        let a = r.floor();
        if a.abs() > 1e15 {
            return None;
        }
        let ai = a as i128;
        (h0, h1) = (h1, ai * h1 + h0);
        (k0, k1) = (k1, ai * k1 + k0);
        if k1 > 1_000_000 {
            return None;
        }
        let approx = h1 as f64 / k1 as f64;
        if (approx - x).abs() <= 1e-9 * x.abs().max(1.0) {
            return Some(BigRational::new(h1.into(), k1.into()));
        }
        let frac = r - a;
        if frac == 0.0 {
            return None;
        }
        r = 1.0 / frac;
    }
    None
}

fn trim<S: Scalar>(mut p: Vec<S>) -> Vec<S> {
    while p.last().is_some_and(|c| c.is_zero()) {
        p.pop();
    }
    p
}

fn derivative<S: Scalar>(p: &[S]) -> Vec<S> {
    trim(p.iter().enumerate().skip(1).map(|(k, c)| c.clone() * S::from_i64(k as i64)).collect())
}

fn monic<S: Scalar>(p: Vec<S>) -> Vec<S> {
    match p.last().cloned() {
        Some(lead) => p.into_iter().map(|c| c / lead.clone()).collect(),
        None => p,
    }
}

/// Quotient and remainder of exact polynomial division.
fn div_rem<S: Scalar>(num: &[S], den: &[S]) -> (Vec<S>, Vec<S>) {
    let den = trim(den.to_vec());
    let mut rem = trim(num.to_vec());
    let dd = den.len() - 1;
    if rem.len() < den.len() {
        return (Vec::new(), rem);
    }
    let lead = den[dd].clone();
    let mut quot = vec![S::zero(); rem.len() - dd];
    while rem.len() >= den.len() {
        let shift = rem.len() - den.len();
        let f = rem.last().expect("nonempty").clone() / lead.clone();
        for (k, d) in den.iter().enumerate() {
            rem[shift + k] = rem[shift + k].clone() - f.clone() * d.clone();
        }
        quot[shift] = f;
        rem.pop();
        rem = trim(rem);
    }
    (quot, rem)
}

fn gcd<S: Scalar>(a: &[S], b: &[S]) -> Vec<S> {
    let (mut a, mut b) = (trim(a.to_vec()), trim(b.to_vec()));
    while !b.is_empty() {
        let r = div_rem(&a, &b).1;
        a = b;
        b = r;
    }
    monic(a)
}

fn poly_sub<S: Scalar>(a: &[S], b: &[S]) -> Vec<S> {
    let n = a.len().max(b.len());
    trim(
        (0..n).map(|k| a.get(k).cloned().unwrap_or_else(S::zero) - b.get(k).cloned().unwrap_or_else(S::zero)).collect(),
    )
}

fn poly_eval<S: Scalar>(p: &[S], x: &S) -> S {
    p.iter().rev().fold(S::zero(), |acc, c| acc * x.clone() + c.clone())
}

/// Yun's square-free factorization `f = Π g_i^i` (exact arithmetic only).
fn square_free<S: Scalar>(f: &[S]) -> Vec<(usize, Vec<S>)> {
    let f = monic(trim(f.to_vec()));
    let df = derivative(&f);
    let a0 = gcd(&f, &df);
    let mut b = div_rem(&f, &a0).0;
    let mut c = div_rem(&df, &a0).0;
    let mut d = poly_sub(&c, &derivative(&b));
    let mut out = Vec::new();
    let mut i = 1;
    while b.len() > 1 {
        let a = gcd(&b, &d);
        b = div_rem(&b, &a).0;
        c = div_rem(&d, &a).0;
        d = poly_sub(&c, &derivative(&b));
        out.push((i, a));
        i += 1;
    }
    out
}

/// `dim ker (A - λI)^r` for `r = 0..=max_power`.
pub fn kernel_dimensions<S: Scalar>(a: &Matrix<S>, lambda: &S, max_power: usize, rank_tol: f64) -> Result<Vec<usize>> {
    let n = a.n()?;
    let b = a.sub(&Matrix::identity(n).scale(lambda))?;
    let mut pw = Matrix::identity(n);
    let mut dims = vec![0];
    for _ in 0..max_power {
        pw = pw.matmul(&b)?;
        dims.push(n - pw.rank(rank_tol));
    }
    Ok(dims)
}

/// Jordan decomposition with eigenvalues from the backend's spectrum.
pub fn jordan_decompose<S: JordanScalar>(a: &Matrix<S>, opts: &JordanOptions) -> Result<JordanDecomposition<S>> {
    let spectrum = S::spectrum(a, opts)?;
    decompose_with_eigenvalues(a, &spectrum, opts.rank_tol)
}

/// Jordan decomposition for a supplied spectrum `(λ, algebraic multiplicity)`.
pub fn decompose_with_eigenvalues<S: JordanScalar>(
    a: &Matrix<S>,
    spectrum: &[(S, usize)],
    rank_tol: f64,
) -> Result<JordanDecomposition<S>> {
    let n = a.n()?;
    let total: usize = spectrum.iter().map(|(_, m)| m).sum();
    if total != n {
        return Err(Error::ChainConstructionFailed(format!("multiplicities sum to {total}, expected {n}")));
    }
    let mut columns = Vec::with_capacity(n);
    let mut blocks = Vec::new();
    for (lambda, mult) in spectrum {
        for chain in chains_for(a, lambda, *mult, rank_tol)? {
            blocks.push(JordanBlock { eigenvalue: lambda.clone(), size: chain.len() });
            columns.extend(chain);
        }
    }
    let p = Matrix::from_columns(&columns)?;
    let p_inv = p
        .inverse()
        .map_err(|_| Error::ChainConstructionFailed("generalized eigenvectors are linearly dependent".into()))?;
    let mut dec = JordanDecomposition { p, blocks, p_inv, residual: 0.0 };
    dec.residual = dec.reconstruction_error(a)?;
    Ok(dec)
}

/// Chains `[v^1, ..., v^r]` for one eigenvalue, longest first.
fn chains_for<S: JordanScalar>(a: &Matrix<S>, lambda: &S, mult: usize, rank_tol: f64) -> Result<Vec<Vec<Matrix<S>>>> {
    let n = a.n()?;
    let fail = |msg: String| Error::ChainConstructionFailed(format!("eigenvalue {:?}: {msg}", lambda.to_float()));
    let b = a.sub(&Matrix::identity(n).scale(lambda))?;

    // kernels of B^r until the dimension reaches the multiplicity
    let mut kernels: Vec<Vec<Matrix<S>>> = vec![Vec::new()];
    let mut pw = Matrix::identity(n);
    while kernels.last().expect("nonempty").len() < mult {
        if kernels.len() > mult {
            return Err(fail(format!(
                "kernel dimensions {:?} never reach multiplicity {mult}",
                kernels.iter().map(Vec::len).collect::<Vec<_>>()
            )));
        }
        pw = pw.matmul(&b)?;
        let k: Vec<Matrix<S>> = pw.null_space(rank_tol).into_iter().map(S::normalized).collect();
        let prev = kernels.last().expect("nonempty").len();
        if k.len() > mult || k.len() <= prev {
            return Err(fail(format!("kernel dimension {} after {} powers (previous {prev})", k.len(), kernels.len())));
        }
        kernels.push(k);
    }
    let index = kernels.len() - 1;
    let dims: Vec<usize> = kernels.iter().map(Vec::len).collect();
    let at_least: Vec<usize> =
        (0..=index + 1).map(|r| if r == 0 || r > index { 0 } else { dims[r] - dims[r - 1] }).collect();
    if at_least.windows(2).skip(1).any(|w| w[1] > w[0]) {
        return Err(fail(format!("kernel dimensions {dims:?} are not a valid staircase")));
    }

    // tops[r] = chain tops of length r
    let mut chains: Vec<Vec<Matrix<S>>> = Vec::new();
    let mut tops: Vec<(usize, Matrix<S>)> = Vec::new();
    for r in (1..=index).rev() {
        let needed = at_least[r] - at_least[r + 1];
        // span to be independent of: ker B^{r-1} and images of longer chains at level r
        let mut span: Vec<Matrix<S>> = kernels[r - 1].clone();
        for (len, top) in &tops {
            let mut v = top.clone();
            for _ in r..*len {
                v = b.matmul(&v)?;
            }
            span.push(S::normalized(v));
        }
        let mut rank = rank_of(&span, rank_tol)?;
        let mut found = 0;
        for cand in &kernels[r] {
            if found == needed {
                break;
            }
            span.push(cand.clone());
            let new_rank = rank_of(&span, rank_tol)?;
            if new_rank > rank {
                rank = new_rank;
                found += 1;
                tops.push((r, cand.clone()));
            } else {
                span.pop();
            }
        }
        if found != needed {
            return Err(fail(format!("found {found} of {needed} chains of length {r}")));
        }
    }
    for (len, top) in tops {
        let mut chain = vec![top];
        for _ in 1..len {
            let next = b.matmul(chain.last().expect("nonempty"))?;
            chain.push(next);
        }
        chain.reverse();
        chains.push(chain);
    }
    Ok(chains)
}

fn rank_of<S: Scalar>(vectors: &[Matrix<S>], rank_tol: f64) -> Result<usize> {
    if vectors.is_empty() {
        return Ok(0);
    }
    Ok(Matrix::from_columns(vectors)?.rank(rank_tol))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{exact_matrix, float_matrix};
    use crate::scalar::exact;

    fn example1() -> ExactMatrix {
        exact_matrix(&[&[1, 0, 1], &[1, 2, 0], &[0, 0, 1]])
    }

    fn example2() -> ExactMatrix {
        exact_matrix(&[&[0, 1, 1], &[-1, 2, 1], &[1, -1, 1]])
    }

    fn sizes<S: Scalar>(dec: &JordanDecomposition<S>) -> Vec<(Complex64, usize)> {
        dec.block_list()
    }

    #[test]
    fn char_poly_of_examples() {
        // (x-1)^2 (x-2) = x^3 - 4x^2 + 5x - 2
        assert_eq!(char_poly(&example1()).unwrap(), vec![exact(-2, 0), exact(5, 0), exact(-4, 0), exact(1, 0)]);
        // (x-1)^3
        assert_eq!(char_poly(&example2()).unwrap(), vec![exact(-1, 0), exact(3, 0), exact(-3, 0), exact(1, 0)]);
    }

    #[test]
    fn float_eigenvalues_of_examples() {
        let e1 = eigenvalues(&example1().to_float(), 1e-3).unwrap();
        assert_eq!(e1.iter().map(|e| e.1).collect::<Vec<_>>(), vec![2, 1]);
        assert!((e1[0].0 - 1.0).norm() < 1e-10 && (e1[1].0 - 2.0).norm() < 1e-12);
        let e2 = eigenvalues(&example2().to_float(), 1e-3).unwrap();
        assert_eq!(e2.len(), 1);
        assert_eq!(e2[0].1, 3);
        assert!((e2[0].0 - 1.0).norm() < 1e-12);
        let d = float_matrix(&[&[3.0, 0.0, 0.0], &[0.0, 3.0, 0.0], &[0.0, 0.0, 5.0]]);
        let e = eigenvalues(&d, 1e-3).unwrap();
        assert_eq!(e.iter().map(|x| x.1).collect::<Vec<_>>(), vec![2, 1]);
        assert!((e[0].0 - 3.0).norm() < 1e-12 && (e[1].0 - 5.0).norm() < 1e-12);
    }

    #[test]
    fn exact_eigenvalues_of_examples() {
        assert_eq!(exact_eigenvalues(&example1()).unwrap(), vec![(exact(1, 0), 2), (exact(2, 0), 1)]);
        assert_eq!(exact_eigenvalues(&example2()).unwrap(), vec![(exact(1, 0), 3)]);
        let rot = exact_matrix(&[&[0, -1], &[1, 0]]);
        assert_eq!(exact_eigenvalues(&rot).unwrap(), vec![(exact(0, -1), 1), (exact(0, 1), 1)]);
        let irrational = exact_matrix(&[&[0, 2], &[1, 0]]);
        assert!(matches!(exact_eigenvalues(&irrational), Err(Error::NotExact(_))));
    }

    #[test]
    fn roots_of_simple_polynomials() {
        let c = |re| Complex64::new(re, 0.0);
        let mut r = polynomial_roots(&[c(6.0), c(-5.0), c(1.0)]).unwrap();
        r.sort_by(|a, b| a.re.total_cmp(&b.re));
        assert!((r[0] - 2.0).norm() < 1e-14 && (r[1] - 3.0).norm() < 1e-14);
        let r = polynomial_roots(&[c(1.0), c(0.0), c(1.0)]).unwrap();
        assert!(r.iter().all(|z| (z.norm() - 1.0).abs() < 1e-14 && z.re.abs() < 1e-14));
        assert!(polynomial_roots(&[c(0.0)]).is_err());
    }

    #[test]
    fn exact_decomposition_of_example1() {
        let dec = jordan_decompose(&example1(), &JordanOptions::default()).unwrap();
        assert_eq!(
            dec.blocks,
            vec![JordanBlock { eigenvalue: exact(1, 0), size: 2 }, JordanBlock { eigenvalue: exact(2, 0), size: 1 },]
        );
        assert_eq!(dec.residual, 0.0);
        assert_eq!(&dec.p * &dec.p_inv, ExactMatrix::identity(3));
    }

    #[test]
    fn exact_decomposition_of_example2() {
        let dec = jordan_decompose(&example2(), &JordanOptions::default()).unwrap();
        assert_eq!(dec.blocks, vec![JordanBlock { eigenvalue: exact(1, 0), size: 3 }]);
        assert_eq!(dec.residual, 0.0);
    }

    #[test]
    fn float_decompositions_of_examples() {
        for (a, expected) in [(example1(), vec![(1.0, 2), (2.0, 1)]), (example2(), vec![(1.0, 3)])] {
            let dec = jordan_decompose(&a.to_float(), &JordanOptions::default()).unwrap();
            let got = sizes(&dec);
            assert_eq!(got.len(), expected.len());
            for ((l, s), (el, es)) in got.iter().zip(&expected) {
                assert!((l - el).norm() < 1e-8);
                assert_eq!(s, es);
            }
            assert!(dec.residual < 1e-8, "residual {}", dec.residual);
        }
    }

    #[test]
    fn diagonal_matrix_has_unit_blocks() {
        let d = exact_matrix(&[&[5, 0, 0], &[0, -1, 0], &[0, 0, 5]]);
        let dec = jordan_decompose(&d, &JordanOptions::default()).unwrap();
        assert_eq!(dec.blocks.iter().map(|b| b.size).collect::<Vec<_>>(), vec![1, 1, 1]);
        assert_eq!(dec.blocks[0].eigenvalue, exact(-1, 0));
        assert_eq!(dec.residual, 0.0);
        let dec = jordan_decompose(&d.to_float(), &JordanOptions::default()).unwrap();
        assert_eq!(dec.residual, 0.0);
    }

    #[test]
    fn supplied_witnesses_verify() {
        let p1 = exact_matrix(&[&[1, -1, 0], &[-1, 0, 1], &[0, 1, 0]]);
        let blocks1 =
            vec![JordanBlock { eigenvalue: exact(1, 0), size: 2 }, JordanBlock { eigenvalue: exact(2, 0), size: 1 }];
        let dec = JordanDecomposition::from_parts(&example1(), p1, blocks1).unwrap();
        let v = verify_decomposition(&example1(), &dec, 0.0).unwrap();
        assert!(v.ok);
        assert_eq!(v.residual, 0.0);

        let p2 = exact_matrix(&[&[1, 0, 1], &[1, 0, 0], &[0, 1, 1]]);
        let dec2 =
            JordanDecomposition::from_parts(&example2(), p2, vec![JordanBlock { eigenvalue: exact(1, 0), size: 3 }])
                .unwrap();
        assert!(verify_decomposition(&example2(), &dec2, 0.0).unwrap().ok);

        let mut fdec = JordanDecomposition {
            p: dec.p.to_float(),
            blocks: dec
                .blocks
                .iter()
                .map(|b| JordanBlock { eigenvalue: b.eigenvalue.to_float(), size: b.size })
                .collect(),
            p_inv: dec.p_inv.to_float(),
            residual: 0.0,
        };
        fdec.p[(0, 0)] += 0.1;
        let v = verify_decomposition(&example1().to_float(), &fdec, 1e-8).unwrap();
        assert!(!v.ok);
    }

    #[test]
    fn singular_witness_is_rejected() {
        let p = exact_matrix(&[&[1, 1, 0], &[1, 1, 0], &[0, 0, 1]]);
        let blocks = vec![JordanBlock { eigenvalue: exact(1, 0), size: 3 }];
        assert_eq!(JordanDecomposition::from_parts(&example2(), p, blocks), Err(Error::SingularMatrix));
    }

    #[test]
    fn weyr_counts_for_example2() {
        let dims = kernel_dimensions(&example2(), &exact(1, 0), 3, 0.0).unwrap();
        assert_eq!(dims, vec![0, 1, 2, 3]);
    }

    #[test]
    fn wrong_multiplicities_fail() {
        let err = decompose_with_eigenvalues(&example1(), &[(exact(1, 0), 3)], 0.0);
        assert!(matches!(err, Err(Error::ChainConstructionFailed(_))));
    }

    #[test]
    fn mixed_structure_same_eigenvalue() {
        // J = diag(J_2(3), J_1(3)) conjugated by a unimodular P
        let j = exact_matrix(&[&[3, 1, 0], &[0, 3, 0], &[0, 0, 3]]);
        let p = exact_matrix(&[&[1, 2, 0], &[0, 1, 1], &[1, 3, 2]]);
        let a = p.matmul(&j).unwrap().matmul(&p.inverse().unwrap()).unwrap();
        let dec = jordan_decompose(&a, &JordanOptions::default()).unwrap();
        assert_eq!(dec.blocks.iter().map(|b| b.size).collect::<Vec<_>>(), vec![2, 1]);
        assert_eq!(dec.residual, 0.0);
        let fdec = jordan_decompose(&a.to_float(), &JordanOptions::default()).unwrap();
        assert_eq!(fdec.blocks.iter().map(|b| b.size).collect::<Vec<_>>(), vec![2, 1]);
        assert!(fdec.residual < 1e-8);
    }
}
