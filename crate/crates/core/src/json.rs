//! JSON forms of matrices, vectors, series and Jordan decompositions.
//!
//! A complex entry is a pair `[re, im]`. Float entries are JSON numbers and
//! exact entries are strings `"p"` or `"p/q"`; the entry type selects the
//! backend, and one document never mixes the two.
//!
//! * matrix: `{"n": 3, "entries": [[[re, im], ...], ...]}`
//! * vector: `[[re, im], ...]`
//! * series: `{"sequence": "<specifier>", "coeffs": [<matrix>, ...]}`
//! * decomposition: `{"blocks": [[re, im, size], ...], "P": <matrix>,
//!   "P_inv": <matrix>, "residual": r}`, where `P_inv` and `residual` are
//!   optional on input.

use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::jordan::{JordanBlock, JordanDecomposition};
use crate::matrix::{CMatrix, Matrix};
use crate::moment::MomentSequence;
use crate::scalar::{format_rational, parse_rational, Backend, ExactScalar, FloatScalar, Scalar};
use crate::series::MomentSeries;

fn parse_err(msg: impl Into<String>) -> Error {
    Error::Parse(msg.into())
}

/// Scalars with a JSON component encoding.
pub trait JsonScalar: Scalar {
    fn component_to_json(re: bool, value: &Self) -> Value;

    fn from_components(re: &Value, im: &Value) -> Result<Self>;

    fn to_json(&self) -> Value {
        Value::Array(vec![Self::component_to_json(true, self), Self::component_to_json(false, self)])
    }

    fn from_json(v: &Value) -> Result<Self> {
        match v.as_array().map(Vec::as_slice) {
            Some([re, im]) => Self::from_components(re, im),
            _ => Err(parse_err(format!("complex entry must be [re, im], got {v}"))),
        }
    }
}

impl JsonScalar for FloatScalar {
    fn component_to_json(re: bool, value: &Self) -> Value {
        let x = if re { value.re } else { value.im };
        serde_json::Number::from_f64(x).map(Value::Number).unwrap_or(Value::Null)
    }

    fn from_components(re: &Value, im: &Value) -> Result<Self> {
        let num = |v: &Value| v.as_f64().ok_or_else(|| parse_err(format!("expected a number, got {v}")));
        Ok(FloatScalar::new(num(re)?, num(im)?))
    }
}

impl JsonScalar for ExactScalar {
    fn component_to_json(re: bool, value: &Self) -> Value {
        Value::String(format_rational(if re { &value.re } else { &value.im }))
    }

    fn from_components(re: &Value, im: &Value) -> Result<Self> {
        let rat = |v: &Value| match v {
            Value::String(s) => parse_rational(s),
            other => Err(parse_err(format!("expected a \"p/q\" string, got {other}"))),
        };
        Ok(ExactScalar::new(rat(re)?, rat(im)?))
    }
}

/// Backend implied by the entry types inside `v`; mixed documents fail.
pub fn detect_backend(v: &Value) -> Result<Backend> {
    fn walk(v: &Value, found: &mut Option<Backend>) -> Result<()> {
        let here = match v {
            Value::Number(_) => Backend::Float,
            Value::String(_) => Backend::Exact,
            Value::Array(items) => return items.iter().try_for_each(|i| walk(i, found)),
            other => return Err(parse_err(format!("unexpected entry {other}"))),
        };
        match found {
            Some(b) if *b != here => Err(parse_err("entries mix numbers (float) and strings (exact)")),
            _ => {
                *found = Some(here);
                Ok(())
            }
        }
    }
    let mut found = None;
    walk(v, &mut found)?;
    found.ok_or_else(|| parse_err("no entries"))
}

pub fn matrix_to_json<S: JsonScalar>(m: &Matrix<S>) -> Value {
    let rows: Vec<Value> = (0..m.rows()).map(|r| Value::Array(m.row(r).iter().map(S::to_json).collect())).collect();
    json!({ "n": m.rows(), "entries": rows })
}

pub fn cmatrix_to_json(m: &CMatrix) -> Value {
    match m {
        CMatrix::Exact(m) => matrix_to_json(m),
        CMatrix::Float(m) => matrix_to_json(m),
    }
}

fn entries_of(v: &Value) -> Result<(&Vec<Value>, usize)> {
    let obj = v.as_object().ok_or_else(|| parse_err("matrix must be an object with 'n' and 'entries'"))?;
    let n = obj.get("n").and_then(Value::as_u64).ok_or_else(|| parse_err("matrix needs a nonnegative integer 'n'"))?
        as usize;
    let rows =
        obj.get("entries").and_then(Value::as_array).ok_or_else(|| parse_err("matrix needs an 'entries' list"))?;
    if n == 0 || rows.len() != n {
        return Err(parse_err(format!("'n' is {n} but there are {} rows", rows.len())));
    }
    Ok((rows, n))
}

pub fn parse_matrix_as<S: JsonScalar>(v: &Value) -> Result<Matrix<S>> {
    let (rows, n) = entries_of(v)?;
    let mut data = Vec::with_capacity(n * n);
    for (r, row) in rows.iter().enumerate() {
        let row = row.as_array().ok_or_else(|| parse_err(format!("row {r} is not a list")))?;
        if row.len() != n {
            return Err(parse_err(format!("row {r} has {} entries, expected {n}", row.len())));
        }
        for e in row {
            data.push(S::from_json(e)?);
        }
    }
    Matrix::new(n, n, data)
}

pub fn parse_matrix(v: &Value) -> Result<CMatrix> {
    let (rows, _) = entries_of(v)?;
    match detect_backend(&Value::Array(rows.clone()))? {
        Backend::Exact => Ok(CMatrix::Exact(parse_matrix_as(v)?)),
        Backend::Float => Ok(CMatrix::Float(parse_matrix_as(v)?)),
    }
}

/// Parses a matrix and converts it to `backend` when one is requested.
/// Float input cannot be promoted to the exact backend.
pub fn parse_matrix_for(v: &Value, backend: Option<Backend>) -> Result<CMatrix> {
    let m = parse_matrix(v)?;
    match (backend, &m) {
        (None, _) | (Some(Backend::Exact), CMatrix::Exact(_)) | (Some(Backend::Float), CMatrix::Float(_)) => Ok(m),
        (Some(Backend::Float), CMatrix::Exact(e)) => Ok(CMatrix::Float(e.to_float())),
        (Some(Backend::Exact), CMatrix::Float(_)) => {
            Err(parse_err("the exact backend needs \"p/q\" string entries, found numbers"))
        }
    }
}

pub fn vector_to_json<S: JsonScalar>(v: &Matrix<S>) -> Value {
    Value::Array(v.entries().iter().map(S::to_json).collect())
}

pub fn parse_vector_as<S: JsonScalar>(v: &Value) -> Result<Matrix<S>> {
    let items = v.as_array().ok_or_else(|| parse_err("vector must be a list of [re, im] pairs"))?;
    if items.is_empty() {
        return Err(parse_err("vector is empty"));
    }
    Matrix::column_vector(items.iter().map(S::from_json).collect::<Result<Vec<_>>>()?)
}

pub fn series_to_json<S: JsonScalar>(s: &MomentSeries<S>) -> Value {
    json!({
        "sequence": s.seq().specifier(),
        "coeffs": s.coeffs().iter().map(matrix_to_json).collect::<Vec<_>>(),
    })
}

pub fn parse_series_as<S: JsonScalar>(v: &Value) -> Result<MomentSeries<S>> {
    let spec =
        v.get("sequence").and_then(Value::as_str).ok_or_else(|| parse_err("series needs a 'sequence' string"))?;
    let coeffs = v.get("coeffs").and_then(Value::as_array).ok_or_else(|| parse_err("series needs a 'coeffs' list"))?;
    let seq = MomentSequence::parse(spec)?;
    MomentSeries::new(seq, coeffs.iter().map(parse_matrix_as).collect::<Result<Vec<_>>>()?)
}

/// Backend of a series document, from its coefficient entries.
pub fn series_backend(v: &Value) -> Result<Backend> {
    let coeffs = v.get("coeffs").and_then(Value::as_array).ok_or_else(|| parse_err("series needs a 'coeffs' list"))?;
    let entries: Vec<Value> = coeffs.iter().filter_map(|c| c.get("entries").cloned()).collect();
    detect_backend(&Value::Array(entries))
}

pub fn decomposition_to_json<S: JsonScalar>(dec: &JordanDecomposition<S>) -> Value {
    let blocks: Vec<Value> = dec
        .blocks
        .iter()
        .map(|b| json!([S::component_to_json(true, &b.eigenvalue), S::component_to_json(false, &b.eigenvalue), b.size]))
        .collect();
    json!({
        "blocks": blocks,
        "P": matrix_to_json(&dec.p),
        "P_inv": matrix_to_json(&dec.p_inv),
        "residual": dec.residual,
    })
}

/// Reads a supplied decomposition of `a`. A missing `P_inv` is computed;
/// the residual is always recomputed.
pub fn parse_decomposition_as<S: JsonScalar>(v: &Value, a: &Matrix<S>) -> Result<JordanDecomposition<S>> {
    let blocks = v.get("blocks").and_then(Value::as_array).ok_or_else(|| parse_err("decomposition needs 'blocks'"))?;
    let blocks = blocks
        .iter()
        .map(|b| match b.as_array().map(Vec::as_slice) {
            Some([re, im, size]) => {
                let size =
                    size.as_u64().filter(|&s| s > 0).ok_or_else(|| parse_err(format!("bad block size {size}")))?;
                Ok(JordanBlock { eigenvalue: S::from_components(re, im)?, size: size as usize })
            }
            _ => Err(parse_err(format!("block must be [re, im, size], got {b}"))),
        })
        .collect::<Result<Vec<_>>>()?;
    let p: Matrix<S> = parse_matrix_as(v.get("P").ok_or_else(|| parse_err("decomposition needs 'P'"))?)?;
    let mut dec = match v.get("P_inv") {
        Some(pi) => JordanDecomposition { p, blocks, p_inv: parse_matrix_as(pi)?, residual: 0.0 },
        None => JordanDecomposition::from_parts(a, p, blocks)?,
    };
    dec.residual = dec.reconstruction_error(a)?;
    Ok(dec)
}

/// Either backend's decomposition read from JSON, matched to `a`.
pub enum CDecomposition {
    Exact(JordanDecomposition<ExactScalar>),
    Float(JordanDecomposition<FloatScalar>),
}

pub fn parse_decomposition(v: &Value, a: &CMatrix) -> Result<CDecomposition> {
    let eigenvalues: Vec<Value> = v
        .get("blocks")
        .and_then(Value::as_array)
        .map(|bs| {
            bs.iter().filter_map(|b| b.as_array()).map(|b| Value::Array(b.iter().take(2).cloned().collect())).collect()
        })
        .unwrap_or_default();
    let backend = detect_backend(&json!([eigenvalues, v.get("P").and_then(|p| p.get("entries"))]));
    match (a, backend) {
        (CMatrix::Exact(a), Ok(Backend::Exact)) => Ok(CDecomposition::Exact(parse_decomposition_as(v, a)?)),
        (CMatrix::Float(a), Ok(Backend::Float)) => Ok(CDecomposition::Float(parse_decomposition_as(v, a)?)),
        (CMatrix::Exact(a), Ok(Backend::Float)) => Ok(CDecomposition::Float(parse_decomposition_as(v, &a.to_float())?)),
        (CMatrix::Float(_), Ok(Backend::Exact)) => {
            Err(Error::BackendMismatch { left: Backend::Float, right: Backend::Exact })
        }
        (_, Err(e)) => Err(e),
    }
}

/// Parses a JSON document from text, mapping syntax errors to [`Error::Parse`].
pub fn from_str(text: &str) -> Result<Value> {
    serde_json::from_str(text).map_err(|e| parse_err(format!("invalid JSON: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jordan::{jordan_decompose, JordanOptions};
    use crate::matrix::{exact_matrix, float_matrix, ExactMatrix};
    use crate::scalar::{exact, exact_ratio};

    #[test]
    fn exact_matrix_round_trip() {
        let m = exact_matrix(&[&[1, -2], &[0, 3]]).scale(&exact_ratio(1, 3));
        let v = matrix_to_json(&m);
        assert_eq!(v["entries"][0][1], json!(["-2/3", "0"]));
        assert_eq!(v["entries"][1][1], json!(["1", "0"]));
        assert_eq!(parse_matrix(&v).unwrap(), CMatrix::Exact(m));
    }

    #[test]
    fn float_matrix_round_trip() {
        let m = float_matrix(&[&[0.1, 1.0 / 3.0], &[-2.5e-300, 7.0]]);
        let text = serde_json::to_string(&matrix_to_json(&m)).unwrap();
        assert_eq!(parse_matrix(&from_str(&text).unwrap()).unwrap(), CMatrix::Float(m));
    }

    #[test]
    fn malformed_matrices() {
        assert!(parse_matrix(&json!({"n": 2, "entries": [[[1, 0], [0, 0]]]})).is_err());
        assert!(parse_matrix(&json!({"n": 1, "entries": [[[1, "0"]]]})).is_err());
        assert!(parse_matrix(&json!({"n": 1, "entries": [[[1]]]})).is_err());
        assert!(parse_matrix(&json!({"n": 1, "entries": [[["1/0", "0"]]]})).is_err());
        assert!(parse_matrix(&json!({"entries": [[[1, 0]]]})).is_err());
        assert!(from_str("{").is_err());
    }

    #[test]
    fn backend_requests() {
        let exact_doc = json!({"n": 1, "entries": [[["1/2", "0"]]]});
        let float_doc = json!({"n": 1, "entries": [[[0.5, 0]]]});
        assert_eq!(
            parse_matrix_for(&exact_doc, Some(Backend::Float)).unwrap(),
            CMatrix::Float(float_matrix(&[&[0.5]]))
        );
        assert!(parse_matrix_for(&float_doc, Some(Backend::Exact)).is_err());
    }

    #[test]
    fn vectors_and_series() {
        let v: ExactMatrix = parse_vector_as(&json!([["1", "0"], ["-1/2", "3"]])).unwrap();
        assert_eq!(v[(1, 0)], exact_ratio(-1, 2) + exact(0, 3));
        assert_eq!(vector_to_json(&v), json!([["1", "0"], ["-1/2", "3"]]));
        let s =
            MomentSeries::exp_series(&exact_matrix(&[&[1, 1], &[0, 1]]), MomentSequence::parse("qfac:2").unwrap(), 3)
                .unwrap();
        let doc = series_to_json(&s);
        assert_eq!(doc["sequence"], "qfac:2");
        assert_eq!(series_backend(&doc).unwrap(), Backend::Exact);
        assert_eq!(parse_series_as::<ExactScalar>(&doc).unwrap(), s);
    }

    #[test]
    fn decomposition_round_trip() {
        let a = exact_matrix(&[&[1, 0, 1], &[1, 2, 0], &[0, 0, 1]]);
        let dec = jordan_decompose(&a, &JordanOptions::default()).unwrap();
        let doc = decomposition_to_json(&dec);
        assert_eq!(doc["blocks"], json!([["1", "0", 2], ["2", "0", 1]]));
        match parse_decomposition(&doc, &CMatrix::Exact(a.clone())).unwrap() {
            CDecomposition::Exact(back) => assert_eq!(back, dec),
            CDecomposition::Float(_) => panic!("expected exact"),
        }
        let witness = json!({
            "blocks": [["1", "0", 2], ["2", "0", 1]],
            "P": {"n": 3, "entries": [[["1","0"],["-1","0"],["0","0"]], [["-1","0"],["0","0"],["1","0"]], [["0","0"],["1","0"],["0","0"]]]}
        });
        match parse_decomposition(&witness, &CMatrix::Exact(a)).unwrap() {
            CDecomposition::Exact(d) => assert_eq!(d.residual, 0.0),
            CDecomposition::Float(_) => panic!("expected exact"),
        }
    }
}
