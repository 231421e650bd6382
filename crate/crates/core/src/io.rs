//! JSON and CSV formats shared by the CLI and the C interface.
//!
//! Complex numbers are `[re, im]` pairs and matrices are arrays of rows.
//! Floats are written with 17 significant digits so every value reads back
//! bit for bit.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};
use serde_json::ser::Formatter;

use crate::error::{Error, Result};
use crate::linalg::{c64, CMat};
use crate::measure::MatrixMeasure;
use crate::spectral::BandedHermitian;
use crate::Tolerances;

/// A matrix as rows of `[re, im]` pairs.
pub type MatrixJson = Vec<Vec<[f64; 2]>>;

/// Block form of a member of `J(k, N)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BandedJson {
    pub k: usize,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "A")]
    pub a: Vec<MatrixJson>,
    #[serde(rename = "B")]
    pub b: Vec<MatrixJson>,
}

/// A dense square matrix with a block size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DenseJson {
    pub k: usize,
    pub dense: MatrixJson,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomJson {
    pub x: f64,
    #[serde(rename = "W")]
    pub w: MatrixJson,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureJson {
    pub k: usize,
    pub atoms: Vec<AtomJson>,
}

/// One line of a trajectory report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryLine {
    pub t: f64,
    #[serde(rename = "X")]
    pub x: BandedJson,
    pub eig_drift: f64,
    pub method: String,
}

/// Any input the CLI accepts.
#[derive(Debug, Clone)]
pub enum Document {
    Banded(BandedHermitian),
    Dense { k: usize, matrix: CMat },
    Measure(MatrixMeasure),
}

pub fn matrix_to_json(m: &CMat) -> MatrixJson {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect()).collect()
}

/// Reads a matrix; `rows × cols` are checked when given.
pub fn matrix_from_json(rows: &MatrixJson, what: &str) -> Result<CMat> {
    let r = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|row| row.len() != c) {
        return Err(Error::Schema(format!("{what}: rows have different lengths")));
    }
    if rows.iter().flatten().any(|z| !z[0].is_finite() || !z[1].is_finite()) {
        return Err(Error::Schema(format!("{what}: non-finite entry")));
    }
    Ok(CMat::from_fn(r, c, |i, j| c64(rows[i][j][0], rows[i][j][1])))
}

impl From<&BandedHermitian> for BandedJson {
    fn from(j: &BandedHermitian) -> Self {
        BandedJson {
            k: j.k(),
            n: j.size(),
            a: j.a().iter().map(matrix_to_json).collect(),
            b: j.b().iter().map(matrix_to_json).collect(),
        }
    }
}

impl From<&MatrixMeasure> for MeasureJson {
    fn from(mu: &MatrixMeasure) -> Self {
        MeasureJson {
            k: mu.k(),
            atoms: mu.atoms().iter().map(|a| AtomJson { x: a.x, w: matrix_to_json(&a.weight) }).collect(),
        }
    }
}

impl BandedJson {
    /// Converts to a typed matrix and checks the class conditions.
    pub fn to_banded(&self, tol: &Tolerances) -> Result<BandedHermitian> {
        let a = self
            .a
            .iter()
            .enumerate()
            .map(|(j, m)| matrix_from_json(m, &format!("A[{j}]")))
            .collect::<Result<Vec<_>>>()?;
        let b = self
            .b
            .iter()
            .enumerate()
            .map(|(j, m)| matrix_from_json(m, &format!("B[{j}]")))
            .collect::<Result<Vec<_>>>()?;
        let j = BandedHermitian::from_blocks_unchecked(self.k, self.n, a, b).map_err(|e| match e {
            Error::DimensionMismatch(s) | Error::InvalidArgument(s) => Error::Schema(s),
            other => other,
        })?;
        crate::spectral::validate_banded(&j.to_dense(), self.k, tol)
    }
}

impl MeasureJson {
    /// Converts to a measure; factors are recomputed from the weights.
    pub fn to_measure(&self, tol: &Tolerances) -> Result<MatrixMeasure> {
        let points = self
            .atoms
            .iter()
            .enumerate()
            .map(|(i, a)| {
                if !a.x.is_finite() {
                    return Err(Error::Schema(format!("atoms[{i}].x is not finite")));
                }
                Ok((a.x, matrix_from_json(&a.w, &format!("atoms[{i}].W"))?))
            })
            .collect::<Result<Vec<_>>>()?;
        MatrixMeasure::from_weights(self.k, points, tol).map_err(|e| match e {
            Error::DimensionMismatch(s) | Error::InvalidArgument(s) => Error::Schema(s),
            other => other,
        })
    }
}

fn classify(e: serde_json::Error) -> Error {
    match e.classify() {
        serde_json::error::Category::Data => Error::Schema(e.to_string()),
        _ => Error::Parse(e.to_string()),
    }
}

/// Parses a matrix (block or dense form) or a measure document.
pub fn parse_document(text: &str, tol: &Tolerances) -> Result<Document> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(classify)?;
    let obj = value.as_object().ok_or_else(|| Error::Schema("top level must be an object".into()))?;
    if obj.contains_key("atoms") {
        let m: MeasureJson = serde_json::from_value(value).map_err(classify)?;
        Ok(Document::Measure(m.to_measure(tol)?))
    } else if obj.contains_key("dense") {
        let d: DenseJson = serde_json::from_value(value).map_err(classify)?;
        let matrix = matrix_from_json(&d.dense, "dense")?;
        if !matrix.is_square() {
            return Err(Error::Schema("dense matrix must be square".into()));
        }
        Ok(Document::Dense { k: d.k, matrix })
    } else if obj.contains_key("A") {
        let b: BandedJson = serde_json::from_value(value).map_err(classify)?;
        Ok(Document::Banded(b.to_banded(tol)?))
    } else {
        Err(Error::Schema("expected a matrix ({k, N, A, B} or {k, dense}) or a measure ({k, atoms})".into()))
    }
}

pub fn parse_banded(text: &str, tol: &Tolerances) -> Result<BandedHermitian> {
    let b: BandedJson = serde_json::from_str(text).map_err(classify)?;
    b.to_banded(tol)
}

pub fn parse_measure(text: &str, tol: &Tolerances) -> Result<MatrixMeasure> {
    let m: MeasureJson = serde_json::from_str(text).map_err(classify)?;
    m.to_measure(tol)
}

/// Compact JSON formatter that writes every float with 17 significant digits.
#[derive(Debug, Clone, Copy, Default)]
pub struct RoundTripFormatter;

impl Formatter for RoundTripFormatter {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        if value == 0.0 {
            // keeps the sign of negative zero
            return writer.write_all(if value.is_sign_negative() { b"-0.0" } else { b"0.0" });
        }
        write!(writer, "{value:.16e}")
    }
}

/// Serializes any value with [`RoundTripFormatter`].
pub fn to_json_string<T: Serialize>(value: &T) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, RoundTripFormatter);
    value.serialize(&mut ser).expect("serialization to memory cannot fail");
    String::from_utf8(buf).expect("JSON is UTF-8")
}

pub fn banded_to_json(j: &BandedHermitian) -> String {
    to_json_string(&BandedJson::from(j))
}

pub fn measure_to_json(mu: &MatrixMeasure) -> String {
    to_json_string(&MeasureJson::from(mu))
}

/// CSV header and rows for trajectory lines: time, method, drift, then the
/// real and imaginary parts of each entry on or below the diagonal within the band.
pub fn trajectory_csv(lines: &[(f64, String, f64, BandedHermitian)]) -> String {
    let mut out = String::new();
    let Some((_, _, _, first)) = lines.first() else { return out };
    let n = first.size();
    let k = first.k();
    let entries: Vec<(usize, usize)> = (0..n).flat_map(|r| (r.saturating_sub(k)..=r).map(move |c| (r, c))).collect();
    out.push_str("t,method,eig_drift");
    for (r, c) in &entries {
        out.push_str(&format!(",x{r}_{c}_re,x{r}_{c}_im"));
    }
    out.push('\n');
    for (t, method, drift, j) in lines {
        let d = j.to_dense();
        out.push_str(&format!("{t:.16e},{method},{drift:.16e}"));
        for &(r, c) in &entries {
            out.push_str(&format!(",{:.16e},{:.16e}", d[(r, c)].re, d[(r, c)].im));
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_banded, random_measure};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn banded_round_trip_is_exact() {
        let tol = Tolerances::default();
        let j = random_banded(2, 7, &mut ChaCha8Rng::seed_from_u64(1));
        let text = banded_to_json(&j);
        let back = parse_banded(&text, &tol).unwrap();
        assert_eq!(back, j);
        assert_eq!(banded_to_json(&back), text);
    }

    #[test]
    fn measure_round_trip_is_exact() {
        let tol = Tolerances::default();
        let mu = random_measure(2, 5, &mut ChaCha8Rng::seed_from_u64(2));
        let text = measure_to_json(&mu);
        let back = parse_measure(&text, &tol).unwrap();
        for (a, b) in mu.atoms().iter().zip(back.atoms()) {
            assert_eq!(a.x, b.x);
            assert_eq!(a.weight, b.weight);
        }
    }

    #[test]
    fn parse_and_schema_errors_are_distinguished() {
        let tol = Tolerances::default();
        assert!(matches!(parse_document("{not json", &tol), Err(Error::Parse(_))));
        assert!(matches!(parse_document("[1, 2]", &tol), Err(Error::Schema(_))));
        assert!(matches!(parse_document(r#"{"k": 1, "atoms": 3}"#, &tol), Err(Error::Schema(_))));
        let ragged = r#"{"k": 1, "dense": [[[1,0],[0,0]], [[0,0]]]}"#;
        assert!(matches!(parse_document(ragged, &tol), Err(Error::Schema(_))));
    }

    #[test]
    fn formatter_writes_seventeen_digits() {
        assert_eq!(to_json_string(&0.1f64), "1.0000000000000001e-1");
        assert_eq!(to_json_string(&-0.0f64), "-0.0");
        let v: f64 = serde_json::from_str(&to_json_string(&(1.0f64 / 3.0))).unwrap();
        assert_eq!(v, 1.0 / 3.0);
    }
}
