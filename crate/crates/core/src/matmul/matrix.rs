//! Dense row-major matrices of reals and of inaccuracy exponents.

use crate::array::XArray;
use crate::error::{Error, Result};
use crate::format::floor_log2;
use crate::scalar::Inaccuracy;

/// Exponent standing for "exactly known" (Δ = 0).
pub const NEG_INF: i32 = -16384;
/// Exponent standing for "unbounded" (NaN or infinite entries).
pub const POS_INF: i32 = 16384;

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows.checked_mul(cols) != Some(data.len()) {
            return Err(Error::Shape(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows.saturating_mul(cols),
                data.len()
            )));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut f = f;
        let data = (0..rows * cols).map(|k| f(k / cols, k % cols)).collect();
        Matrix { rows, cols, data }
    }

    /// The values of a rank-2 array.
    pub fn from_values(a: &XArray) -> Result<Self> {
        let (r, c) = dims(a)?;
        Matrix::new(r, c, a.values().to_vec())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    /// `log2 |x|` per entry: `NEG_INF` for zeros, `POS_INF` for NaN/inf.
    pub fn log2_abs(&self) -> Matrix {
        let data = self
            .data
            .iter()
            .map(|&v| {
                if v == 0.0 {
                    NEG_INF as f64
                } else if !v.is_finite() {
                    POS_INF as f64
                } else {
                    v.abs().log2()
                }
            })
            .collect();
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data,
        }
    }

    /// Entries with a shift applied, leaving sentinels in place.
    pub fn shifted(&self, t: f64) -> Matrix {
        let data = self
            .data
            .iter()
            .map(|&v| if is_sentinel(v) { v } else { v + t })
            .collect();
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data,
        }
    }
}

pub(crate) fn dims(a: &XArray) -> Result<(usize, usize)> {
    match a.shape() {
        [r, c] => Ok((*r, *c)),
        s => Err(Error::Shape(format!("expected a matrix, got shape {s:?}"))),
    }
}

pub(crate) fn is_sentinel(v: f64) -> bool {
    v <= NEG_INF as f64 || v >= POS_INF as f64
}

/// Sentinel-encoded real to an extended real.
pub(crate) fn to_extended(v: f64) -> f64 {
    if v <= NEG_INF as f64 {
        f64::NEG_INFINITY
    } else if v >= POS_INF as f64 || v.is_nan() {
        f64::INFINITY
    } else {
        v
    }
}

/// Extended real back to the sentinel encoding.
pub(crate) fn from_extended(v: f64) -> f64 {
    v.clamp(NEG_INF as f64, POS_INF as f64)
}

/// Per-entry inaccuracy exponents: entry `k` means `Δ = 2^k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InaccuracyExponentMatrix {
    rows: usize,
    cols: usize,
    data: Vec<i32>,
}

impl InaccuracyExponentMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<i32>) -> Result<Self> {
        if rows.checked_mul(cols) != Some(data.len()) {
            return Err(Error::Shape(format!(
                "{rows}x{cols} exponent matrix needs {} entries, got {}",
                rows.saturating_mul(cols),
                data.len()
            )));
        }
        let data = data.into_iter().map(|k| k.clamp(NEG_INF, POS_INF)).collect();
        Ok(InaccuracyExponentMatrix { rows, cols, data })
    }

    pub fn from_xarray(a: &XArray) -> Result<Self> {
        let (rows, cols) = dims(a)?;
        let data = a
            .iter()
            .map(|x| match x.inaccuracy() {
                Inaccuracy::Exact => NEG_INF,
                Inaccuracy::Unbounded => POS_INF,
                Inaccuracy::Magnitude(k) => k,
            })
            .collect();
        Ok(InaccuracyExponentMatrix { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[i32] {
        &self.data
    }

    pub fn get(&self, i: usize, j: usize) -> i32 {
        self.data[i * self.cols + j]
    }

    pub fn to_matrix(&self) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&k| k as f64).collect(),
        }
    }
}

/// Largest magnitude among finite, nonzero value exponents.
pub(crate) fn max_abs_value_exponent(m: &Matrix) -> i32 {
    m.data
        .iter()
        .filter(|v| v.is_finite() && **v != 0.0)
        .map(|v| floor_log2(*v).abs())
        .max()
        .unwrap_or(0)
}

pub(crate) fn max_abs_exponent(m: &InaccuracyExponentMatrix) -> i32 {
    m.data
        .iter()
        .filter(|k| **k > NEG_INF && **k < POS_INF)
        .map(|k| k.abs())
        .max()
        .unwrap_or(0)
}
