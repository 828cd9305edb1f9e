//! Moment sequences `m = (m(p))_{p >= 0}` with `m(0) = 1`.
//!
//! The sequence fixes the series basis `z^p / m(p)`. Closed-form kinds are
//! provided for the classical cases:
//!
//! | kind              | `m(p)`              | backend        |
//! |-------------------|---------------------|----------------|
//! | `factorial`       | `p!`                | exact + float  |
//! | `mittag_leffler`  | `Γ(1 + p/k)`        | float only     |
//! | `q_factorial`     | `[p]_q!`            | exact if `q` rational |
//! | `geometric`       | `b^p`               | exact if `b` rational |
//! | `custom`          | finite list         | exact          |
//!
//! plus an arbitrary float generator for library callers. Values are
//! memoized behind a mutex, so a sequence can be shared between threads.

use std::fmt;
use std::path::Path;
use std::sync::{Arc, Mutex};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::scalar::{format_rational, ln_abs_rational, parse_rational, rational_to_f64};

/// A real parameter that may or may not be exactly representable.
#[derive(Debug, Clone, PartialEq)]
pub enum Param {
    Exact(BigRational),
    Float(f64),
}

impl Param {
    pub fn to_f64(&self) -> f64 {
        match self {
            Param::Exact(r) => rational_to_f64(r),
            Param::Float(v) => *v,
        }
    }

    /// Rationals (`"2"`, `"3/2"`) parse exactly; anything else as a decimal.
    pub fn parse(s: &str) -> Result<Self> {
        if let Ok(r) = parse_rational(s) {
            return Ok(Param::Exact(r));
        }
        s.trim().parse::<f64>().map(Param::Float).map_err(|_| Error::Parse(format!("'{s}' is not a number")))
    }
}

impl fmt::Display for Param {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Param::Exact(r) => f.write_str(&format_rational(r)),
            Param::Float(v) => write!(f, "{v}"),
        }
    }
}

pub type MomentGenerator = Arc<dyn Fn(usize) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum MomentKind {
    Factorial,
    MittagLeffler { k: f64 },
    QFactorial { q: Param },
    Geometric { b: Param },
    Custom { label: String, values: Vec<BigRational> },
    Generator { label: String, f: MomentGenerator },
}

impl fmt::Debug for MomentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MomentKind::Factorial => f.write_str("Factorial"),
            MomentKind::MittagLeffler { k } => write!(f, "MittagLeffler {{ k: {k} }}"),
            MomentKind::QFactorial { q } => write!(f, "QFactorial {{ q: {q} }}"),
            MomentKind::Geometric { b } => write!(f, "Geometric {{ b: {b} }}"),
            MomentKind::Custom { label, values } => {
                write!(f, "Custom {{ label: {label:?}, len: {} }}", values.len())
            }
            MomentKind::Generator { label, .. } => write!(f, "Generator {{ label: {label:?} }}"),
        }
    }
}

struct Inner {
    kind: MomentKind,
    rapid_growth: bool,
    exact: Mutex<Vec<BigRational>>,
    ln: Mutex<Vec<f64>>,
}

/// A positive sequence with `m(0) = 1`. Cheap to clone; clones share the
/// memo tables.
#[derive(Clone)]
pub struct MomentSequence {
    inner: Arc<Inner>,
}

impl fmt::Debug for MomentSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MomentSequence")
            .field("kind", &self.inner.kind)
            .field("rapid_growth", &self.inner.rapid_growth)
            .finish()
    }
}

impl PartialEq for MomentSequence {
    fn eq(&self, other: &Self) -> bool {
        if Arc::ptr_eq(&self.inner, &other.inner) {
            return true;
        }
        match (&self.inner.kind, &other.inner.kind) {
            (MomentKind::Generator { .. }, _) | (_, MomentKind::Generator { .. }) => false,
            (MomentKind::Custom { values: a, .. }, MomentKind::Custom { values: b, .. }) => a == b,
            _ => self.specifier() == other.specifier(),
        }
    }
}

impl MomentSequence {
    fn build(kind: MomentKind, rapid_growth: bool) -> Self {
        Self {
            inner: Arc::new(Inner {
                kind,
                rapid_growth,
                exact: Mutex::new(vec![BigRational::one()]),
                ln: Mutex::new(vec![0.0]),
            }),
        }
    }

    /// `m(p) = p!`, the classical derivative.
    pub fn factorial() -> Self {
        Self::build(MomentKind::Factorial, true)
    }

    /// `m(p) = Γ(1 + p/k)`; the scalar exponential is the Mittag-Leffler
    /// function `E_{1/k}`.
    pub fn mittag_leffler(k: f64) -> Result<Self> {
        if !(k.is_finite() && k > 0.0) {
            return Err(Error::InvalidMoment(format!("ml:k needs k > 0, got {k}")));
        }
        Ok(Self::build(MomentKind::MittagLeffler { k }, true))
    }

    /// `m(p) = [p]_q!` with `[k]_q = 1 + q + ... + q^{k-1}`.
    pub fn q_factorial(q: Param) -> Result<Self> {
        let ok = match &q {
            Param::Exact(r) => *r > BigRational::one(),
            Param::Float(v) => v.is_finite() && *v > 1.0,
        };
        if !ok {
            return Err(Error::InvalidMoment(format!("qfac:q needs q > 1, got {q}")));
        }
        Ok(Self::build(MomentKind::QFactorial { q }, true))
    }

    /// `m(p) = b^p`. Only has a finite radius of convergence, so it never
    /// declares rapid growth.
    pub fn geometric(b: Param) -> Result<Self> {
        let ok = match &b {
            Param::Exact(r) => r.is_positive(),
            Param::Float(v) => v.is_finite() && *v > 0.0,
        };
        if !ok {
            return Err(Error::InvalidMoment(format!("geom:b needs b > 0, got {b}")));
        }
        Ok(Self::build(MomentKind::Geometric { b }, false))
    }

    /// A finite list of exact values. Evaluation past the end is an error.
    pub fn custom(label: impl Into<String>, values: Vec<BigRational>, rapid_growth: bool) -> Result<Self> {
        match values.first() {
            Some(v) if v.is_one() => {}
            Some(v) => return Err(Error::InvalidMoment(format!("m(0) must be 1, got {}", format_rational(v)))),
            None => return Err(Error::InvalidMoment("empty custom sequence".into())),
        }
        if let Some((p, v)) = values.iter().enumerate().find(|(_, v)| !v.is_positive()) {
            return Err(Error::InvalidMoment(format!("m({p}) = {} is not positive", format_rational(v))));
        }
        Ok(Self::build(MomentKind::Custom { label: label.into(), values }, rapid_growth))
    }

    /// A float-only generator. `f(0)` must be 1 and all values positive;
    /// violations surface as errors when the offending index is evaluated.
    pub fn generator(
        label: impl Into<String>,
        f: impl Fn(usize) -> f64 + Send + Sync + 'static,
        rapid_growth: bool,
    ) -> Result<Self> {
        let f0 = f(0);
        if f0 != 1.0 {
            return Err(Error::InvalidMoment(format!("m(0) must be 1, got {f0}")));
        }
        Ok(Self::build(MomentKind::Generator { label: label.into(), f: Arc::new(f) }, rapid_growth))
    }

    /// Parses a specifier: `factorial`, `ml:k`, `qfac:q`, `geom:b` or
    /// `custom:<path>`.
    pub fn parse(spec: &str) -> Result<Self> {
        let spec = spec.trim();
        if spec == "factorial" {
            return Ok(Self::factorial());
        }
        let (head, arg) =
            spec.split_once(':').ok_or_else(|| Error::Parse(format!("unknown moment specifier '{spec}'")))?;
        match head {
            "ml" => {
                let k = Param::parse(arg)?.to_f64();
                Self::mittag_leffler(k)
            }
            "qfac" => Self::q_factorial(Param::parse(arg)?),
            "geom" => Self::geometric(Param::parse(arg)?),
            "custom" => Self::from_file(arg),
            _ => Err(Error::Parse(format!("unknown moment specifier '{spec}'"))),
        }
    }

    /// Reads a custom sequence: either a JSON list of `"p/q"` strings
    /// (no rapid-growth declaration) or an object
    /// `{"values": [...], "rapid_growth": bool}`.
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Parse(format!("cannot read {}: {e}", path.display())))?;
        let doc: serde_json::Value =
            serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        let (list, rapid) = match &doc {
            serde_json::Value::Array(items) => (items, false),
            serde_json::Value::Object(obj) => {
                let list = obj
                    .get("values")
                    .and_then(|v| v.as_array())
                    .ok_or_else(|| Error::Parse("custom sequence object needs a 'values' list".into()))?;
                let rapid = obj.get("rapid_growth").and_then(|v| v.as_bool()).unwrap_or(false);
                (list, rapid)
            }
            _ => return Err(Error::Parse("custom sequence must be a list or object".into())),
        };
        let values = list
            .iter()
            .map(|v| match v {
                serde_json::Value::String(s) => parse_rational(s),
                serde_json::Value::Number(n) if n.is_i64() => {
                    Ok(BigRational::from_integer(BigInt::from(n.as_i64().expect("checked"))))
                }
                other => Err(Error::Parse(format!("custom moment {other} is not a 'p/q' string"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::custom(format!("custom:{}", path.display()), values, rapid)
    }

    pub fn kind(&self) -> &MomentKind {
        &self.inner.kind
    }

    /// Whether the caller asserts `liminf m(p)^{1/p} = ∞`, i.e. that
    /// `E(Az)` is entire.
    pub fn rapid_growth_declared(&self) -> bool {
        self.inner.rapid_growth
    }

    /// Whether `m(p)` has an exact rational value for every `p`.
    pub fn is_exact(&self) -> bool {
        match &self.inner.kind {
            MomentKind::Factorial | MomentKind::Custom { .. } => true,
            MomentKind::QFactorial { q: p } | MomentKind::Geometric { b: p } => {
                matches!(p, Param::Exact(_))
            }
            MomentKind::MittagLeffler { .. } | MomentKind::Generator { .. } => false,
        }
    }

    /// Canonical specifier string; parses back to an equal sequence.
    pub fn specifier(&self) -> String {
        match &self.inner.kind {
            MomentKind::Factorial => "factorial".into(),
            MomentKind::MittagLeffler { k } => format!("ml:{k}"),
            MomentKind::QFactorial { q } => format!("qfac:{q}"),
            MomentKind::Geometric { b } => format!("geom:{b}"),
            MomentKind::Custom { label, .. } | MomentKind::Generator { label, .. } => label.clone(),
        }
    }

    /// Largest index with a defined value, if the sequence is finite.
    pub fn len_limit(&self) -> Option<usize> {
        match &self.inner.kind {
            MomentKind::Custom { values, .. } => Some(values.len()),
            _ => None,
        }
    }

    fn check_index(&self, p: usize) -> Result<()> {
        match self.len_limit() {
            Some(len) if p >= len => {
                Err(Error::MomentUnavailable { index: p, reason: format!("custom sequence has only {len} values") })
            }
            _ => Ok(()),
        }
    }

    /// Exact `m(p)`. Fails for float-only kinds.
    pub fn value_exact(&self, p: usize) -> Result<BigRational> {
        self.check_index(p)?;
        if !self.is_exact() {
            return Err(Error::NotExact(self.specifier()));
        }
        let mut cache = self.inner.exact.lock().expect("moment cache poisoned");
        while cache.len() <= p {
            let k = cache.len();
            let next = match &self.inner.kind {
                MomentKind::Factorial => &cache[k - 1] * BigRational::from_integer(BigInt::from(k)),
                MomentKind::QFactorial { q: Param::Exact(q) } => &cache[k - 1] * q_number_exact(q, k),
                MomentKind::Geometric { b: Param::Exact(b) } => &cache[k - 1] * b,
                MomentKind::Custom { values, .. } => values[k].clone(),
                _ => unreachable!("checked by is_exact"),
            };
            cache.push(next);
        }
        Ok(cache[p].clone())
    }

    /// `ln m(p)`, finite for every index the sequence defines.
    pub fn ln_value(&self, p: usize) -> Result<f64> {
        self.check_index(p)?;
        match &self.inner.kind {
            MomentKind::Factorial => Ok(ln_gamma_1p(p as f64)),
            MomentKind::MittagLeffler { k } => Ok(ln_gamma_1p(p as f64 / k)),
            MomentKind::Geometric { b } => Ok(p as f64 * b.to_f64().ln()),
            MomentKind::Custom { values, .. } => Ok(ln_abs_rational(&values[p])),
            MomentKind::Generator { f, .. } => {
                let v = f(p);
                if v.is_finite() && v > 0.0 {
                    Ok(v.ln())
                } else {
                    Err(Error::MomentUnavailable { index: p, reason: format!("generator returned {v}") })
                }
            }
            MomentKind::QFactorial { q } => {
                let q = q.to_f64();
                let mut cache = self.inner.ln.lock().expect("moment cache poisoned");
                while cache.len() <= p {
                    let k = cache.len();
                    let next = cache[k - 1] + ln_q_number(q, k);
                    cache.push(next);
                }
                Ok(cache[p])
            }
        }
    }

    /// `m(p)` in binary64. Overflows to `+inf` for very large values; use
    /// [`Self::ln_value`] or [`Self::step_ratio`] where that matters.
    pub fn value_f64(&self, p: usize) -> Result<f64> {
        match &self.inner.kind {
            MomentKind::MittagLeffler { k } => {
                let x = 1.0 + p as f64 / k;
                if x.fract() == 0.0 && x <= 171.0 {
                    // Γ(n) = (n-1)! exactly for small integers
                    Ok((1..x as u64).fold(1.0, |acc, i| acc * i as f64))
                } else {
                    Ok(statrs::function::gamma::gamma(x))
                }
            }
            MomentKind::Generator { .. } | MomentKind::QFactorial { q: Param::Float(_) } => Ok(self.ln_value(p)?.exp()),
            MomentKind::Geometric { b: Param::Float(b) } => Ok(b.powi(p as i32)),
            _ => Ok(rational_to_f64(&self.value_exact(p)?)),
        }
    }

    /// `m(p) / m(p - 1)` for `p >= 1`.
    pub fn step_ratio(&self, p: usize) -> Result<f64> {
        assert!(p >= 1, "step ratio needs p >= 1");
        self.check_index(p)?;
        match &self.inner.kind {
            MomentKind::Factorial => Ok(p as f64),
            MomentKind::Geometric { b } => Ok(b.to_f64()),
            MomentKind::QFactorial { q } => Ok(q_number_f64(q.to_f64(), p)),
            MomentKind::MittagLeffler { .. } | MomentKind::Generator { .. } => {
                Ok((self.ln_value(p)? - self.ln_value(p - 1)?).exp())
            }
            MomentKind::Custom { values, .. } => Ok(rational_to_f64(&(&values[p] / &values[p - 1]))),
        }
    }

    /// `m(p) / (m(n) m(p - n))` in binary64.
    pub fn binomial_weight_f64(&self, p: usize, n: usize) -> Result<f64> {
        assert!(n <= p, "binomial weight needs n <= p");
        self.check_index(p)?;
        let n = n.min(p - n);
        match &self.inner.kind {
            MomentKind::Factorial => Ok((1..=n).fold(1.0, |acc, i| acc * (p - n + i) as f64 / i as f64)),
            MomentKind::Geometric { .. } => Ok(1.0),
            MomentKind::QFactorial { q } => {
                let q = q.to_f64();
                Ok((1..=n).fold(1.0, |acc, i| acc * q_number_f64(q, p - n + i) / q_number_f64(q, i)))
            }
            MomentKind::Custom { values, .. } => Ok(rational_to_f64(&(&values[p] / (&values[n] * &values[p - n])))),
            MomentKind::MittagLeffler { .. } | MomentKind::Generator { .. } => {
                Ok((self.ln_value(p)? - self.ln_value(n)? - self.ln_value(p - n)?).exp())
            }
        }
    }

    /// Probes `m(p)^{1/p}` for `1 <= p <= terms` to flag a suspected finite
    /// radius of convergence. Informational only: it never changes
    /// [`Self::rapid_growth_declared`].
    pub fn growth_probe(&self, terms: usize) -> Result<GrowthReport> {
        if terms < 8 {
            return Err(Error::InvalidArgument(format!("growth probe needs at least 8 terms, got {terms}")));
        }
        let roots = (1..=terms).map(|p| Ok((self.ln_value(p)? / p as f64).exp())).collect::<Result<Vec<f64>>>()?;
        let last = roots[terms - 1];
        let earlier = roots[terms - 1 - terms / 4];
        let trend = (last - earlier) / earlier;
        Ok(GrowthReport {
            specifier: self.specifier(),
            terms,
            min_root: roots.iter().copied().fold(f64::INFINITY, f64::min),
            last_root: last,
            trend,
            finite_radius_suspected: trend < 0.01,
            rapid_growth_declared: self.rapid_growth_declared(),
            roots,
        })
    }
}

/// Result of [`MomentSequence::growth_probe`].
#[derive(Debug, Clone, PartialEq)]
pub struct GrowthReport {
    pub specifier: String,
    pub terms: usize,
    /// `m(p)^{1/p}` for `p = 1..=terms`.
    pub roots: Vec<f64>,
    pub min_root: f64,
    pub last_root: f64,
    /// Relative increase of the root over the last quarter of the window.
    pub trend: f64,
    pub finite_radius_suspected: bool,
    pub rapid_growth_declared: bool,
}

/// `ln Γ(1 + x)`, exact-as-possible at small integers.
fn ln_gamma_1p(x: f64) -> f64 {
    if x.fract() == 0.0 && x <= 170.0 {
        (1..=x as u64).fold(1.0f64, |acc, i| acc * i as f64).ln()
    } else {
        ln_gamma(1.0 + x)
    }
}

fn q_number_exact(q: &BigRational, k: usize) -> BigRational {
    let mut acc = BigRational::zero();
    let mut pow = BigRational::one();
    for _ in 0..k {
        acc += &pow;
        pow *= q;
    }
    acc
}

/// `[k]_q = 1 + q + ... + q^{k-1}` (overflows to `inf` for huge `k`).
pub fn q_number_f64(q: f64, k: usize) -> f64 {
    if k <= 64 {
        let mut acc = 0.0;
        let mut pow = 1.0;
        for _ in 0..k {
            acc += pow;
            pow *= q;
        }
        acc
    } else {
        (q.powf(k as f64) - 1.0) / (q - 1.0)
    }
}

fn ln_q_number(q: f64, k: usize) -> f64 {
    let direct = q_number_f64(q, k);
    if direct.is_finite() {
        direct.ln()
    } else {
        // [k]_q = q^k (1 - q^{-k}) / (q - 1)
        k as f64 * q.ln() + (-(q.powf(-(k as f64)))).ln_1p() - (q - 1.0).ln()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn int(v: i64) -> BigRational {
        BigRational::from_integer(BigInt::from(v))
    }

    #[test]
    fn closed_form_values() {
        assert_eq!(MomentSequence::factorial().value_exact(5).unwrap(), int(120));
        let q2 = MomentSequence::parse("qfac:2").unwrap();
        assert_eq!(q2.value_exact(3).unwrap(), int(21));
        let g2 = MomentSequence::parse("geom:2").unwrap();
        assert_eq!(g2.value_exact(4).unwrap(), int(16));
    }

    #[test]
    fn m0_is_one_everywhere() {
        for spec in ["factorial", "ml:2", "ml:0.5", "qfac:2", "qfac:1.5", "geom:3", "geom:2.5"] {
            let s = MomentSequence::parse(spec).unwrap();
            assert_eq!(s.value_f64(0).unwrap(), 1.0, "{spec}");
            assert_eq!(s.ln_value(0).unwrap(), 0.0, "{spec}");
        }
    }

    #[test]
    fn recurrences_hold_exactly() {
        let f = MomentSequence::factorial();
        let q = MomentSequence::parse("qfac:3/2").unwrap();
        let qv = parse_rational("3/2").unwrap();
        for p in 1..40 {
            assert_eq!(f.value_exact(p).unwrap(), f.value_exact(p - 1).unwrap() * int(p as i64));
            assert_eq!(q.value_exact(p).unwrap(), q.value_exact(p - 1).unwrap() * q_number_exact(&qv, p));
        }
    }

    #[test]
    fn mittag_leffler_one_is_factorial() {
        let ml = MomentSequence::mittag_leffler(1.0).unwrap();
        let f = MomentSequence::factorial();
        for p in 0..=30 {
            let a = ml.value_f64(p).unwrap();
            let b = f.value_f64(p).unwrap();
            assert!((a - b).abs() <= 1e-12 * b, "p={p}: {a} vs {b}");
        }
    }

    #[test]
    fn mittag_leffler_half_integer_values() {
        // Γ(3/2) = √π / 2
        let ml = MomentSequence::mittag_leffler(2.0).unwrap();
        let v = ml.value_f64(1).unwrap();
        assert!((v - std::f64::consts::PI.sqrt() / 2.0).abs() < 1e-14);
        assert_eq!(ml.value_f64(4).unwrap(), 2.0);
    }

    #[test]
    fn rejects_bad_sequences() {
        assert!(MomentSequence::custom("c", vec![int(2), int(3)], false).is_err());
        assert!(MomentSequence::custom("c", vec![int(1), int(0)], false).is_err());
        assert!(MomentSequence::custom("c", vec![], false).is_err());
        assert!(MomentSequence::parse("qfac:1").is_err());
        assert!(MomentSequence::parse("geom:-1").is_err());
        assert!(MomentSequence::parse("ml:0").is_err());
        assert!(MomentSequence::parse("bogus").is_err());
        assert!(MomentSequence::generator("g", |_| 2.0, true).is_err());
        let bad = MomentSequence::generator("g", |p| if p == 3 { -1.0 } else { 1.0 }, true).unwrap();
        assert!(bad.ln_value(3).is_err());
    }

    #[test]
    fn custom_sequences_do_not_extrapolate() {
        let c = MomentSequence::custom("c", vec![int(1), int(2), int(6)], true).unwrap();
        assert_eq!(c.value_exact(2).unwrap(), int(6));
        assert!(matches!(c.value_exact(3), Err(Error::MomentUnavailable { index: 3, .. })));
        assert!(c.ln_value(3).is_err());
    }

    #[test]
    fn float_only_kinds_refuse_exact_values() {
        let ml = MomentSequence::parse("ml:2").unwrap();
        assert!(matches!(ml.value_exact(2), Err(Error::NotExact(_))));
        assert!(!MomentSequence::parse("qfac:1.5").unwrap().is_exact());
    }

    #[test]
    fn rapid_growth_flags() {
        assert!(MomentSequence::factorial().rapid_growth_declared());
        assert!(MomentSequence::parse("ml:3").unwrap().rapid_growth_declared());
        assert!(MomentSequence::parse("qfac:2").unwrap().rapid_growth_declared());
        assert!(!MomentSequence::parse("geom:2").unwrap().rapid_growth_declared());
    }

    #[test]
    fn specifiers_round_trip() {
        for spec in ["factorial", "ml:2", "ml:0.5", "qfac:2", "qfac:3/2", "qfac:1.5", "geom:2"] {
            let s = MomentSequence::parse(spec).unwrap();
            assert_eq!(s.specifier(), spec);
            assert_eq!(MomentSequence::parse(&s.specifier()).unwrap(), s);
        }
    }

    #[test]
    fn float_weights_match_exact_weights() {
        for spec in ["factorial", "qfac:2", "geom:3"] {
            let s = MomentSequence::parse(spec).unwrap();
            for p in 0..25 {
                for n in 0..=p {
                    let exact = rational_to_f64(
                        &(s.value_exact(p).unwrap() / (s.value_exact(n).unwrap() * s.value_exact(p - n).unwrap())),
                    );
                    let float = s.binomial_weight_f64(p, n).unwrap();
                    assert!((exact - float).abs() <= 1e-14 * exact, "{spec} {p} {n}");
                }
                if p > 0 {
                    let r = s.step_ratio(p).unwrap();
                    let e = rational_to_f64(&(s.value_exact(p).unwrap() / s.value_exact(p - 1).unwrap()));
                    assert!((r - e).abs() <= 1e-14 * e);
                }
            }
        }
    }

    #[test]
    fn ln_values_survive_overflow() {
        let f = MomentSequence::factorial();
        assert!(f.value_f64(200).unwrap().is_infinite());
        assert!((f.ln_value(200).unwrap() - ln_gamma(201.0)).abs() < 1e-9);
        let q = MomentSequence::parse("qfac:2").unwrap();
        let ln = q.ln_value(2000).unwrap();
        assert!(ln.is_finite() && ln > 1e5);
        assert!(q.step_ratio(2000).unwrap().is_infinite());
    }

    #[test]
    fn growth_probe_flags_geometric() {
        let f = MomentSequence::factorial().growth_probe(64).unwrap();
        assert!(!f.finite_radius_suspected);
        let g = MomentSequence::parse("geom:2").unwrap().growth_probe(64).unwrap();
        assert!(g.finite_radius_suspected);
        assert!((g.last_root - 2.0).abs() < 1e-12 && (g.min_root - 2.0).abs() < 1e-12);
        assert!(MomentSequence::parse("geom:2").unwrap().growth_probe(4).is_err());
    }

    #[test]
    fn growth_probe_q_factorial() {
        // Direct evaluation: [p]_2!^{1/p} from the exact product.
        let q = MomentSequence::parse("qfac:2").unwrap();
        let report = q.growth_probe(32).unwrap();
        let mut prod = 1.0f64;
        for p in 1..=32usize {
            prod *= (2f64.powi(p as i32)) - 1.0;
            let root = prod.powf(1.0 / p as f64);
            assert!((report.roots[p - 1] - root).abs() <= 1e-9 * root);
        }
        assert!(!report.finite_radius_suspected);
        assert!(report.trend > 0.01);
    }

    #[test]
    fn sequences_are_shareable() {
        fn assert_send_sync<T: Send + Sync>() {}
        assert_send_sync::<MomentSequence>();
        let q = MomentSequence::parse("qfac:2").unwrap();
        let handles: Vec<_> = (0..4)
            .map(|t| {
                let q = q.clone();
                std::thread::spawn(move || (0..30).filter(|p| q.value_exact((p * 7 + t) % 30).is_ok()).count())
            })
            .collect();
        for h in handles {
            assert_eq!(h.join().unwrap(), 30);
        }
        assert_eq!(q.value_exact(29).unwrap(), MomentSequence::parse("qfac:2").unwrap().value_exact(29).unwrap());
    }
}
