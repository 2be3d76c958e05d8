//! Reductions over one axis or the whole array.
//!
//! Every lane is accumulated strictly left to right in row-major order.
//! Lanes may run on different threads, but each lane's arithmetic is
//! sequential, so results do not depend on the thread count.

use rayon::prelude::*;

use crate::array::{check_shape, XArray};
use crate::error::{Error, Result};
use crate::format::{sum_upward, two_sum, FloatFormat};
use crate::scalar::XScalar;

const PAR_THRESHOLD: usize = 1 << 14;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Sum,
    Prod,
    Min,
    Max,
    Mean,
}

impl Kind {
    fn name(self) -> &'static str {
        match self {
            Kind::Sum => "sum",
            Kind::Prod => "prod",
            Kind::Min => "min",
            Kind::Max => "max",
            Kind::Mean => "mean",
        }
    }
}

/// Sum with one atomic inaccuracy estimate: the input inaccuracies plus
/// half an ulp of the largest partial sum for every rounded step.
pub fn sum_reduce(a: &XArray, axis: Option<usize>) -> Result<XArray> {
    reduce(a, axis, Kind::Sum)
}

/// Product with relative inaccuracies accumulated atomically.
pub fn prod_reduce(a: &XArray, axis: Option<usize>) -> Result<XArray> {
    reduce(a, axis, Kind::Prod)
}

pub fn min_reduce(a: &XArray, axis: Option<usize>) -> Result<XArray> {
    reduce(a, axis, Kind::Min)
}

pub fn max_reduce(a: &XArray, axis: Option<usize>) -> Result<XArray> {
    reduce(a, axis, Kind::Max)
}

/// Sum divided by the exact element count.
pub fn mean(a: &XArray, axis: Option<usize>) -> Result<XArray> {
    reduce(a, axis, Kind::Mean)
}

impl XArray {
    pub fn sum(&self, axis: Option<usize>) -> Result<XArray> {
        sum_reduce(self, axis)
    }

    pub fn prod(&self, axis: Option<usize>) -> Result<XArray> {
        prod_reduce(self, axis)
    }

    pub fn min(&self, axis: Option<usize>) -> Result<XArray> {
        min_reduce(self, axis)
    }

    pub fn max(&self, axis: Option<usize>) -> Result<XArray> {
        max_reduce(self, axis)
    }

    pub fn mean(&self, axis: Option<usize>) -> Result<XArray> {
        mean(self, axis)
    }
}

fn reduce(a: &XArray, axis: Option<usize>, kind: Kind) -> Result<XArray> {
    let shape = a.shape();
    let (outer, len, inner, out_shape) = match axis {
        None => (1, a.len(), 1, vec![]),
        Some(ax) if ax < shape.len() => {
            let outer = shape[..ax].iter().product();
            let inner = shape[ax + 1..].iter().product();
            let mut out = shape.to_vec();
            out.remove(ax);
            (outer, shape[ax], inner, out)
        }
        Some(ax) => {
            return Err(Error::InvalidAxis {
                axis: ax,
                rank: shape.len(),
            })
        }
    };
    let lanes = check_shape(&out_shape)?;
    if len == 0 && lanes > 0 && matches!(kind, Kind::Min | Kind::Max | Kind::Mean) {
        return Err(Error::EmptyReduction(kind.name()));
    }
    let lane = |k: usize| {
        let (o, i) = (k / inner.max(1), k % inner.max(1));
        let base = o * len * inner + i;
        reduce_lane(a, (0..len).map(move |l| base + l * inner), len, kind)
    };
    let out: Vec<XScalar> = if a.len() >= PAR_THRESHOLD && lanes > 1 {
        (0..lanes).into_par_iter().map(lane).collect()
    } else {
        (0..lanes).map(lane).collect()
    };
    debug_assert_eq!(out.len(), outer * inner);
    Ok(XArray::from_scalar_vec(a.format(), out_shape, out))
}

fn reduce_lane(a: &XArray, idx: impl Iterator<Item = usize>, len: usize, kind: Kind) -> XScalar {
    let fmt = a.format();
    match kind {
        Kind::Sum => sum_lane(fmt, idx.map(|i| a.at(i))),
        Kind::Mean => {
            let s = sum_lane(fmt, idx.map(|i| a.at(i)));
            s.div(&XScalar::from_exact_in(fmt, len as f64))
        }
        Kind::Prod => prod_lane(fmt, idx.map(|i| a.at(i))),
        Kind::Min | Kind::Max => idx
            .map(|i| a.at(i))
            .reduce(|acc, x| if kind == Kind::Min { acc.min(&x) } else { acc.max(&x) })
            .expect("empty lanes are rejected earlier"),
    }
}

/// Atomic sum of one lane in the given order.
pub(crate) fn sum_lane(fmt: FloatFormat, xs: impl Iterator<Item = XScalar>) -> XScalar {
    let mut acc = 0.0f64;
    let mut inexact_steps = 0u64;
    let mut max_partial = 0.0f64;
    let mut deltas = Vec::new();
    for x in xs {
        let (s, err) = two_sum(acc, x.value());
        let r = fmt.round(s);
        if err != 0.0 || r != s {
            inexact_steps += 1;
        }
        acc = r;
        max_partial = max_partial.max(r.abs());
        let d = x.delta();
        if d > 0.0 {
            deltas.push(d);
        }
    }
    if !acc.is_finite() {
        return XScalar::normalized(fmt, acc, 0);
    }
    let rounding = if inexact_steps == 0 {
        0.0
    } else {
        inexact_steps as f64 * fmt.half_ulp(max_partial)
    };
    deltas.push(rounding);
    XScalar::from_delta(fmt, acc, sum_upward(deltas))
}

fn prod_lane(fmt: FloatFormat, xs: impl Iterator<Item = XScalar>) -> XScalar {
    let mut acc = 1.0f64;
    let mut rels = Vec::new();
    for x in xs {
        let prod = acc * x.value();
        let r = fmt.round(prod);
        let exact = r == prod && acc.mul_add(x.value(), -prod) == 0.0;
        if !exact && r.is_finite() && r != 0.0 {
            rels.push(fmt.half_ulp(r) / r.abs());
        }
        rels.push(x.relative_delta());
        acc = r;
    }
    if !acc.is_finite() {
        return XScalar::normalized(fmt, acc, 0);
    }
    let rel = sum_upward(rels.into_iter().filter(|r| *r > 0.0));
    XScalar::from_delta(fmt, acc, rel * acc.abs())
}
