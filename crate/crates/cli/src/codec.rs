//! Complex matrices and vectors as JSON: nested arrays of `[re, im]` pairs.
//! Plain numbers are accepted on input as real entries.

use serde::Deserialize;
use serde_json::{json, Value};
use sectorlab_core::linalg::{CVec, Mat};
use num_complex::Complex64;

/// Entries with magnitude below this are written as exact zeros.
const ZERO_SNAP: f64 = 1e-14;

#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum EntryLit {
    Pair([f64; 2]),
    Real(f64),
}

impl EntryLit {
    pub fn value(&self) -> Complex64 {
        match *self {
            EntryLit::Pair([re, im]) => Complex64::new(re, im),
            EntryLit::Real(re) => Complex64::new(re, 0.0),
        }
    }
}

pub type MatrixLit = Vec<Vec<EntryLit>>;
pub type VectorLit = Vec<EntryLit>;

/// Square matrix from a literal; rows must be non-empty and of equal length.
pub fn square_matrix(lit: &MatrixLit, what: &str) -> Result<Mat, String> {
    let n = lit.len();
    if n == 0 {
        return Err(format!("{what}: empty matrix"));
    }
    if let Some((i, row)) = lit.iter().enumerate().find(|(_, r)| r.len() != n) {
        return Err(format!("{what}: row {i} has {} entries, expected {n}", row.len()));
    }
    if lit.iter().flatten().any(|e| !e.value().re.is_finite() || !e.value().im.is_finite()) {
        return Err(format!("{what}: non-finite entry"));
    }
    Ok(Mat::from_fn(n, n, |i, j| lit[i][j].value()))
}

pub fn vector(lit: &VectorLit, what: &str) -> Result<CVec, String> {
    if lit.is_empty() {
        return Err(format!("{what}: empty vector"));
    }
    Ok(CVec::from_iterator(lit.len(), lit.iter().map(EntryLit::value)))
}

fn snap(x: f64) -> f64 {
    if x.abs() < ZERO_SNAP {
        0.0
    } else {
        x
    }
}

pub fn encode_complex(z: Complex64) -> Value {
    json!([snap(z.re), snap(z.im)])
}

pub fn encode_matrix(m: &Mat) -> Value {
    Value::Array(
        (0..m.nrows())
            .map(|i| Value::Array((0..m.ncols()).map(|j| encode_complex(m[(i, j)])).collect()))
            .collect(),
    )
}

pub fn encode_real(x: f64) -> Value {
    json!(snap(x))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrix_round_trip() {
        let lit: MatrixLit = serde_json::from_str("[[[1,0],[0,-2]],[3.5,[0,0]]]").unwrap();
        let m = square_matrix(&lit, "m").unwrap();
        assert_eq!(m[(0, 1)], Complex64::new(0.0, -2.0));
        assert_eq!(m[(1, 0)], Complex64::new(3.5, 0.0));
        let back: MatrixLit = serde_json::from_value(encode_matrix(&m)).unwrap();
        assert_eq!(square_matrix(&back, "m").unwrap(), m);
    }

    #[test]
    fn ragged_rows_are_rejected() {
        let lit: MatrixLit = serde_json::from_str("[[1,0],[1]]").unwrap();
        assert!(square_matrix(&lit, "m").unwrap_err().contains("row 1"));
    }

    #[test]
    fn tiny_entries_snap_to_zero() {
        assert_eq!(encode_complex(Complex64::new(1e-17, -3e-16)), json!([0.0, 0.0]));
    }
}
