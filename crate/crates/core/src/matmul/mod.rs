//! Matrix products with exact-bit estimates.
//!
//! Values come from a fixed-order fused multiply-accumulate kernel. Bits
//! come from a lower bound on each entry's inaccuracy exponent: one of the
//! mean-relaxed estimators, combined by max with the kernel's own
//! rounding error.

mod estimators;
mod matrix;
mod tropical;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use estimators::{
    estimate_holder, estimate_v1, estimate_v2, select_auto_p, HolderEstimate, HolderP,
    AUTO_P_CANDIDATES,
};
pub use matrix::{InaccuracyExponentMatrix, Matrix, NEG_INF, POS_INF};
pub use tropical::{mixed_tropical, tropical_matmul};

use crate::array::XArray;
use crate::error::{Error, Result};
use crate::format::{floor_log2, two_sum, FloatFormat};
use crate::scalar::XScalar;
use matrix::{dims, to_extended};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Estimator {
    V1,
    #[default]
    V2,
    Holder(HolderP),
}

/// Product values plus, per entry, the number of accumulation steps that
/// were not provably exact.
pub struct KernelOutput {
    pub values: Vec<f64>,
    pub inexact_steps: Vec<u32>,
}

/// `C = A·B` accumulated as `c ← round(fma(a_il, b_lj, c))` for
/// `l = 0, 1, …, n−1`. Rows run in parallel; each entry's order is fixed.
pub fn kernel(fmt: FloatFormat, a: &[f64], b: &[f64], m: usize, n: usize, k: usize) -> KernelOutput {
    let mut values = vec![0.0; m * k];
    let mut inexact_steps = vec![0u32; m * k];
    values
        .par_chunks_mut(k.max(1))
        .zip(inexact_steps.par_chunks_mut(k.max(1)))
        .enumerate()
        .for_each(|(i, (row, counts))| {
            for l in 0..n {
                let x = a[i * n + l];
                for ((c, cnt), &y) in row.iter_mut().zip(counts.iter_mut()).zip(&b[l * k..(l + 1) * k]) {
                    let prod = x * y;
                    let prod_err = x.mul_add(y, -prod);
                    let (s, sum_err) = two_sum(*c, prod);
                    let r = fmt.round(x.mul_add(y, *c));
                    if prod_err != 0.0 || sum_err != 0.0 || r != s {
                        *cnt += 1;
                    }
                    *c = r;
                }
            }
        });
    KernelOutput {
        values,
        inexact_steps,
    }
}

/// Raw estimator output for `A·B`, before rounding terms are added.
pub fn estimate(a: &XArray, b: &XArray, estimator: Estimator) -> Result<Matrix> {
    let (av, ae) = (Matrix::from_values(a)?, InaccuracyExponentMatrix::from_xarray(a)?);
    let (bv, be) = (Matrix::from_values(b)?, InaccuracyExponentMatrix::from_xarray(b)?);
    match estimator {
        Estimator::V1 => estimate_v1(&ae, &be),
        Estimator::V2 => estimate_v2(&av, &ae, &bv, &be),
        Estimator::Holder(p) => Ok(estimate_holder(&av, &ae, &bv, &be, p)?.estimate),
    }
}

pub fn matmul(a: &XArray, b: &XArray, estimator: Estimator) -> Result<XArray> {
    if a.format() != b.format() {
        return Err(Error::FormatMismatch(a.format(), b.format()));
    }
    let ((m, n), (n2, k)) = (dims(a)?, dims(b)?);
    if n != n2 {
        return Err(Error::Shape(format!(
            "cannot multiply {m}x{n} by {n2}x{k}"
        )));
    }
    if n == 0 {
        return Err(Error::Shape("inner dimension must be at least 1".into()));
    }
    let fmt = a.format();
    let out = kernel(fmt, a.values(), b.values(), m, n, k);
    let est = estimate(a, b, estimator)?;
    let scalars: Vec<XScalar> = out
        .values
        .iter()
        .zip(&out.inexact_steps)
        .zip(est.data())
        .map(|((&v, &steps), &e)| entry(fmt, v, steps, e))
        .collect();
    Ok(XArray::from_scalar_vec(fmt, vec![m, k], scalars))
}

/// Bits of one product entry from its estimated inaccuracy exponent.
fn entry(fmt: FloatFormat, v: f64, steps: u32, est: f64) -> XScalar {
    let p = fmt.mantissa_bits() as i64;
    if !v.is_finite() {
        return XScalar::normalized(fmt, v, 0);
    }
    if v == 0.0 {
        return XScalar::normalized(fmt, v, p);
    }
    let mut k = to_extended(est);
    if steps > 0 {
        k = k.max((steps as f64 * fmt.half_ulp(v)).log2());
    }
    let bits = if k == f64::NEG_INFINITY {
        p
    } else if k == f64::INFINITY || k.is_nan() {
        0
    } else {
        floor_log2(v) as i64 - k.floor() as i64
    };
    XScalar::normalized(fmt, v, bits)
}

/// Inner product via the `1×n · n×1` product. Empty vectors give an exact 0.
pub fn dot(a: &XArray, b: &XArray) -> Result<XScalar> {
    if a.rank() != 1 || b.rank() != 1 || a.len() != b.len() {
        return Err(Error::Shape(format!(
            "dot needs two vectors of equal length, got {:?} and {:?}",
            a.shape(),
            b.shape()
        )));
    }
    if a.format() != b.format() {
        return Err(Error::FormatMismatch(a.format(), b.format()));
    }
    if a.is_empty() {
        return Ok(XScalar::from_exact_in(a.format(), 0.0));
    }
    let n = a.len();
    matmul(&a.reshape(vec![1, n])?, &b.reshape(vec![n, 1])?, Estimator::V2)?.to_scalar()
}

impl XArray {
    pub fn matmul(&self, other: &XArray, estimator: Estimator) -> Result<XArray> {
        matmul(self, other, estimator)
    }

    pub fn dot(&self, other: &XArray) -> Result<XScalar> {
        dot(self, other)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn wb(v: f64, bits: u32) -> XScalar {
        XScalar::with_bits(v, bits).unwrap()
    }

    #[test]
    fn identity_keeps_values_and_bits() {
        let id = XArray::from_exact(
            vec![4, 4],
            (0..16).map(|k| if k % 5 == 0 { 1.0 } else { 0.0 }).collect(),
        )
        .unwrap();
        let xs: Vec<XScalar> = (0..16).map(|k| wb(1.0 + k as f64 / 7.0, 10 + k as u32)).collect();
        let b = XArray::from_scalars(vec![4, 4], &xs).unwrap();
        let c = matmul(&id, &b, Estimator::V2).unwrap();
        assert_eq!(c.values(), b.values());
        // The mean over four terms of which one is nonzero costs log2(4) = 2 bits.
        for (cb, bb) in c.bits().iter().zip(b.bits()) {
            assert!(*cb >= *bb && *cb <= bb + 2, "{cb} vs {bb}");
        }
    }

    #[test]
    fn exact_products_are_exact() {
        let a = XArray::from_exact(vec![2, 2], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let c = matmul(&a, &a, Estimator::V2).unwrap();
        assert_eq!(c.values(), &[7.0, 10.0, 15.0, 22.0]);
        assert!(c.bits().iter().all(|b| *b == 53));
        let c1 = matmul(&a, &a, Estimator::V1).unwrap();
        assert_eq!(c1, c);
    }

    #[test]
    fn rounding_term_applies_to_exact_inputs() {
        let a = XArray::from_exact(vec![1, 2], vec![0.1, 0.2]).unwrap();
        let b = XArray::from_exact(vec![2, 1], vec![0.3, 0.7]).unwrap();
        let c = matmul(&a, &b, Estimator::V2).unwrap().to_scalar().unwrap();
        assert!(c.exact_bits() < 53 && c.exact_bits() >= 50, "{:?}", c);
    }

    #[test]
    fn one_by_one_v2_is_below_scalar_rule() {
        for k in 0..100 {
            let x = wb(1.0 + k as f64 * 0.37, 10 + (k % 30) as u32);
            let y = wb(-3.0 + k as f64 * 0.11, 12 + (k % 25) as u32);
            let c = matmul(
                &XArray::scalar(x).reshape(vec![1, 1]).unwrap(),
                &XArray::scalar(y).reshape(vec![1, 1]).unwrap(),
                Estimator::V2,
            )
            .unwrap()
            .to_scalar()
            .unwrap();
            let s = x.mul(&y);
            assert_eq!(c.value(), s.value());
            assert!(c.delta() <= s.delta() || c.value() == 0.0, "{c:?} {s:?}");
        }
    }

    #[test]
    fn dot_selection_and_empty() {
        let e = XArray::from_exact(vec![3], vec![1.0, 0.0, 0.0]).unwrap();
        let v = XArray::from_scalars(vec![3], &[wb(2.5, 20), wb(7.0, 9), wb(-1.0, 3)]).unwrap();
        let d = dot(&e, &v).unwrap();
        assert_eq!(d.value(), 2.5);
        let z = XArray::from_exact(vec![0], vec![]).unwrap();
        let d0 = dot(&z, &z).unwrap();
        assert_eq!((d0.value(), d0.exact_bits()), (0.0, 53));
        assert!(dot(&e, &z).is_err());
    }

    #[test]
    fn shape_errors() {
        let a = XArray::from_exact(vec![2, 3], vec![0.0; 6]).unwrap();
        assert!(matmul(&a, &a, Estimator::V2).is_err());
        let z = XArray::from_exact(vec![2, 0], vec![]).unwrap();
        let z2 = XArray::from_exact(vec![0, 2], vec![]).unwrap();
        assert!(matmul(&z, &z2, Estimator::V2).is_err());
    }

    #[test]
    fn nan_entries_poison_their_row() {
        let a = XArray::from_exact(vec![2, 2], vec![f64::NAN, 1.0, 2.0, 3.0]).unwrap();
        let b = XArray::from_exact(vec![2, 2], vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        let c = matmul(&a, &b, Estimator::V2).unwrap();
        assert_eq!(&c.bits()[..2], &[0, 0]);
        assert_eq!(&c.bits()[2..], &[53, 53]);
    }
}
