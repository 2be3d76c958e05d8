//! Row-major N-dimensional arrays of extended floats.
//!
//! Values and exact-bit counts live in two parallel buffers so that the
//! value buffer can be handed to ordinary numeric kernels unchanged.

use std::fmt;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::format::FloatFormat;
use crate::scalar::{RoundMode, XScalar};
use crate::unary::UnaryFn;

pub const MAX_RANK: usize = 8;
pub const MAX_EXTENT: usize = 1 << 48;

/// Elementwise work is split across threads above this many elements.
const PAR_THRESHOLD: usize = 1 << 14;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Min,
    Max,
}

impl BinaryOp {
    pub fn apply(self, x: &XScalar, y: &XScalar) -> XScalar {
        match self {
            BinaryOp::Add => x.add(y),
            BinaryOp::Sub => x.sub(y),
            BinaryOp::Mul => x.mul(y),
            BinaryOp::Div => x.div(y),
            BinaryOp::Min => x.min(y),
            BinaryOp::Max => x.max(y),
        }
    }

    /// The plain floating-point operation, used by replay oracles.
    pub fn apply_f64(self, x: f64, y: f64) -> f64 {
        match self {
            BinaryOp::Add => x + y,
            BinaryOp::Sub => x - y,
            BinaryOp::Mul => x * y,
            BinaryOp::Div => x / y,
            BinaryOp::Min => x.min(y),
            BinaryOp::Max => x.max(y),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            BinaryOp::Add => "add",
            BinaryOp::Sub => "sub",
            BinaryOp::Mul => "mul",
            BinaryOp::Div => "div",
            BinaryOp::Min => "min",
            BinaryOp::Max => "max",
        }
    }
}

#[derive(Clone, PartialEq)]
pub struct XArray {
    shape: Vec<usize>,
    values: Vec<f64>,
    bits: Vec<u8>,
    format: FloatFormat,
}

pub(crate) fn check_shape(shape: &[usize]) -> Result<usize> {
    if shape.len() > MAX_RANK {
        return Err(Error::Shape(format!(
            "rank {} exceeds the limit of {MAX_RANK}",
            shape.len()
        )));
    }
    let mut n: usize = 1;
    for &d in shape {
        if d > MAX_EXTENT {
            return Err(Error::Shape(format!("extent {d} exceeds 2^48")));
        }
        n = n
            .checked_mul(d)
            .filter(|n| *n <= MAX_EXTENT)
            .ok_or_else(|| Error::Shape(format!("{shape:?} has too many elements")))?;
    }
    Ok(n)
}

/// Right-aligned broadcast of two shapes; extents must match or be 1.
pub fn broadcast_shapes(a: &[usize], b: &[usize]) -> Result<Vec<usize>> {
    let rank = a.len().max(b.len());
    let mut out = vec![0; rank];
    for i in 0..rank {
        let da = if i < rank - a.len() { 1 } else { a[i - (rank - a.len())] };
        let db = if i < rank - b.len() { 1 } else { b[i - (rank - b.len())] };
        out[i] = match (da, db) {
            (x, y) if x == y => x,
            (1, y) => y,
            (x, 1) => x,
            _ => {
                return Err(Error::Shape(format!(
                    "shapes {a:?} and {b:?} do not broadcast"
                )))
            }
        };
    }
    Ok(out)
}

pub(crate) fn row_major_strides(shape: &[usize]) -> Vec<usize> {
    let mut strides = vec![0; shape.len()];
    let mut acc = 1;
    for (s, d) in strides.iter_mut().zip(shape).rev() {
        *s = acc;
        acc *= d;
    }
    strides
}

/// Strides of `shape` viewed inside `out_shape`, zero along broadcast axes.
fn broadcast_strides(shape: &[usize], out_shape: &[usize]) -> Vec<usize> {
    let own = row_major_strides(shape);
    let offset = out_shape.len() - shape.len();
    (0..out_shape.len())
        .map(|i| {
            if i < offset || shape[i - offset] == 1 {
                0
            } else {
                own[i - offset]
            }
        })
        .collect()
}

fn source_index(mut flat: usize, out_shape: &[usize], strides: &[usize]) -> usize {
    let mut idx = 0;
    for (d, s) in out_shape.iter().zip(strides).rev() {
        idx += (flat % d) * s;
        flat /= d;
    }
    idx
}

impl XArray {
    /// Builds an array from raw buffers, rounding values into `format` and
    /// enforcing the per-element invariants.
    pub fn from_parts(
        format: FloatFormat,
        shape: Vec<usize>,
        values: Vec<f64>,
        bits: Vec<u8>,
    ) -> Result<Self> {
        let n = check_shape(&shape)?;
        if values.len() != n || bits.len() != n {
            return Err(Error::Shape(format!(
                "shape {shape:?} needs {n} elements, got {} values and {} bit counts",
                values.len(),
                bits.len()
            )));
        }
        let max = format.mantissa_bits();
        if let Some(&b) = bits.iter().find(|b| **b as u32 > max) {
            return Err(Error::BitsOutOfRange {
                bits: b as u32,
                max,
                format,
            });
        }
        let (values, bits) = values
            .into_iter()
            .zip(bits)
            .map(|(v, b)| {
                let x = XScalar::normalized(format, v, b as i64);
                (x.value(), x.exact_bits() as u8)
            })
            .unzip();
        Ok(XArray {
            shape,
            values,
            bits,
            format,
        })
    }

    pub fn from_exact(shape: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        Self::from_exact_in(FloatFormat::Binary64, shape, values)
    }

    pub fn from_exact_in(format: FloatFormat, shape: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        let scalars: Vec<XScalar> = values
            .into_iter()
            .map(|v| XScalar::from_exact_in(format, v))
            .collect();
        Self::from_scalars(shape, &scalars).map(|a| a.with_format_hint(format))
    }

    /// Same bit count for every element.
    pub fn with_uniform_bits(shape: Vec<usize>, values: Vec<f64>, bits: u32) -> Result<Self> {
        let n = values.len();
        Self::from_parts(FloatFormat::Binary64, shape, values, vec![bits.min(255) as u8; n])
    }

    pub fn from_scalars(shape: Vec<usize>, scalars: &[XScalar]) -> Result<Self> {
        let n = check_shape(&shape)?;
        if scalars.len() != n {
            return Err(Error::Shape(format!(
                "shape {shape:?} needs {n} elements, got {}",
                scalars.len()
            )));
        }
        let format = scalars
            .first()
            .map(|s| s.format())
            .unwrap_or(FloatFormat::Binary64);
        if let Some(s) = scalars.iter().find(|s| s.format() != format) {
            return Err(Error::FormatMismatch(format, s.format()));
        }
        Ok(XArray {
            shape,
            values: scalars.iter().map(|s| s.value()).collect(),
            bits: scalars.iter().map(|s| s.exact_bits() as u8).collect(),
            format,
        })
    }

    fn with_format_hint(mut self, format: FloatFormat) -> Self {
        // An empty array has no element to take the format from.
        self.format = format;
        self
    }

    /// Rank-0 array holding one scalar.
    pub fn scalar(x: XScalar) -> Self {
        XArray {
            shape: vec![],
            values: vec![x.value()],
            bits: vec![x.exact_bits() as u8],
            format: x.format(),
        }
    }

    pub fn filled(shape: Vec<usize>, x: XScalar) -> Result<Self> {
        let n = check_shape(&shape)?;
        Ok(XArray {
            shape,
            values: vec![x.value(); n],
            bits: vec![x.exact_bits() as u8; n],
            format: x.format(),
        })
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn format(&self) -> FloatFormat {
        self.format
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    /// Element at a flat row-major offset.
    pub fn at(&self, flat: usize) -> XScalar {
        XScalar::normalized(self.format, self.values[flat], self.bits[flat] as i64)
    }

    pub fn get(&self, index: &[usize]) -> Result<XScalar> {
        if index.len() != self.rank() || index.iter().zip(&self.shape).any(|(i, d)| i >= d) {
            return Err(Error::Shape(format!(
                "index {index:?} out of bounds for {:?}",
                self.shape
            )));
        }
        let strides = row_major_strides(&self.shape);
        Ok(self.at(index.iter().zip(&strides).map(|(i, s)| i * s).sum()))
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = XScalar> + '_ {
        (0..self.len()).map(|i| self.at(i))
    }

    pub fn to_scalars(&self) -> Vec<XScalar> {
        self.iter().collect()
    }

    /// The single element of a rank-0 or one-element array.
    pub fn to_scalar(&self) -> Result<XScalar> {
        if self.len() == 1 {
            Ok(self.at(0))
        } else {
            Err(Error::Shape(format!("{:?} is not a scalar", self.shape)))
        }
    }

    pub fn reshape(&self, shape: Vec<usize>) -> Result<Self> {
        let n = check_shape(&shape)?;
        if n != self.len() {
            return Err(Error::Shape(format!(
                "cannot reshape {:?} into {shape:?}",
                self.shape
            )));
        }
        Ok(XArray {
            shape,
            ..self.clone()
        })
    }

    /// Transpose of a rank-2 array.
    pub fn transpose(&self) -> Result<Self> {
        let [m, n] = self.shape[..] else {
            return Err(Error::Shape(format!(
                "transpose needs rank 2, got {:?}",
                self.shape
            )));
        };
        let mut values = Vec::with_capacity(self.len());
        let mut bits = Vec::with_capacity(self.len());
        for j in 0..n {
            for i in 0..m {
                values.push(self.values[i * n + j]);
                bits.push(self.bits[i * n + j]);
            }
        }
        Ok(XArray {
            shape: vec![n, m],
            values,
            bits,
            format: self.format,
        })
    }

    /// Copy with every bit count lowered to at most `bits`.
    pub fn cap_bits(&self, bits: u32) -> Self {
        let scalars: Vec<XScalar> = self
            .iter()
            .map(|x| x.with_exact_bits(x.exact_bits().min(bits) as i64))
            .collect();
        XArray {
            shape: self.shape.clone(),
            values: scalars.iter().map(|s| s.value()).collect(),
            bits: scalars.iter().map(|s| s.exact_bits() as u8).collect(),
            format: self.format,
        }
    }

    pub(crate) fn from_scalar_vec(format: FloatFormat, shape: Vec<usize>, out: Vec<XScalar>) -> Self {
        XArray {
            shape,
            values: out.iter().map(|s| s.value()).collect(),
            bits: out.iter().map(|s| s.exact_bits() as u8).collect(),
            format,
        }
    }

    pub fn map_binary(&self, op: BinaryOp, other: &XArray) -> Result<XArray> {
        map_binary(op, self, other)
    }

    pub fn map_unary(&self, f: UnaryFn) -> XArray {
        map_unary(f, self)
    }

    pub fn round(&self, mode: RoundMode) -> XArray {
        map_elements(self, |x| x.round(mode))
    }
}

fn map_elements(a: &XArray, f: impl Fn(XScalar) -> XScalar + Sync) -> XArray {
    let out: Vec<XScalar> = if a.len() >= PAR_THRESHOLD {
        (0..a.len()).into_par_iter().map(|i| f(a.at(i))).collect()
    } else {
        a.iter().map(f).collect()
    };
    XArray::from_scalar_vec(a.format, a.shape.clone(), out)
}

/// Elementwise binary operation with broadcasting.
pub fn map_binary(op: BinaryOp, a: &XArray, b: &XArray) -> Result<XArray> {
    if a.format != b.format {
        return Err(Error::FormatMismatch(a.format, b.format));
    }
    let shape = broadcast_shapes(&a.shape, &b.shape)?;
    let n = check_shape(&shape)?;
    let sa = broadcast_strides(&a.shape, &shape);
    let sb = broadcast_strides(&b.shape, &shape);
    let elem = |i: usize| {
        let x = a.at(source_index(i, &shape, &sa));
        let y = b.at(source_index(i, &shape, &sb));
        op.apply(&x, &y)
    };
    let out: Vec<XScalar> = if n >= PAR_THRESHOLD {
        (0..n).into_par_iter().map(elem).collect()
    } else {
        (0..n).map(elem).collect()
    };
    Ok(XArray::from_scalar_vec(a.format, shape, out))
}

pub fn map_unary(f: UnaryFn, a: &XArray) -> XArray {
    map_elements(a, |x| f.apply(&x))
}

impl fmt::Debug for XArray {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("XArray")
            .field("shape", &self.shape)
            .field("format", &self.format)
            .field("values", &self.values)
            .field("bits", &self.bits)
            .finish()
    }
}

impl fmt::Display for XArray {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let items: Vec<String> = self.iter().map(|x| x.to_string()).collect();
        write!(f, "{:?}[{}]", self.shape, items.join(", "))
    }
}
