//! JSON number formatting: every float goes out with 17 significant digits so
//! that a report round-trips bit for bit. Non-finite values become `null`.

use serde::ser::Error as _;
use serde::{Serialize, Serializer};
use unitroot::Mat;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Real(pub f64);

impl Serialize for Real {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if !self.0.is_finite() {
            return s.serialize_none();
        }
        let num: serde_json::Number = format!("{:.16e}", self.0)
            .parse()
            .map_err(S::Error::custom)?;
        num.serialize(s)
    }
}

impl From<f64> for Real {
    fn from(x: f64) -> Self {
        Real(x)
    }
}

pub fn rows(m: &Mat) -> Vec<Vec<Real>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| Real(m[(i, j)])).collect())
        .collect()
}

pub fn reals(xs: &[f64]) -> Vec<Real> {
    xs.iter().copied().map(Real).collect()
}

/// A matrix with explicit shape, stored row-major.
#[derive(Debug, Clone, Serialize)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<Vec<Real>>,
}

impl From<&Mat> for Matrix {
    fn from(m: &Mat) -> Self {
        Matrix {
            rows: m.nrows(),
            cols: m.ncols(),
            data: rows(m),
        }
    }
}
