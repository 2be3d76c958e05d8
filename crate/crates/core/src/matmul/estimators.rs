//! Mean-relaxed lower bounds on the inaccuracy exponents of a product.
//!
//! The exact bound is a max-plus product. Replacing the max over the `n`
//! terms by their (power) mean turns it into ordinary matrix products,
//! and since a mean never exceeds the max the result stays a lower bound.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::matrix::{
    from_extended, max_abs_exponent, max_abs_value_exponent, to_extended,
    InaccuracyExponentMatrix, Matrix,
};
use crate::error::{Error, Result};

/// Candidate exponents for the automatically chosen power mean.
pub const AUTO_P_CANDIDATES: [f64; 6] = [1.0, 2.0, 4.0, 8.0, 16.0, 32.0];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HolderP {
    Fixed(f64),
    Auto,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HolderEstimate {
    pub estimate: Matrix,
    pub p: f64,
    /// Infinite or NaN values met while forming the power sums.
    pub nonfinite_intermediates: usize,
}

fn check_inner(lr: usize, lc: usize, rr: usize, rc: usize) -> Result<()> {
    if lc != rr {
        return Err(Error::Shape(format!(
            "cannot multiply {lr}x{lc} by {rr}x{rc}"
        )));
    }
    Ok(())
}

/// `(1/p)·(log2 Σ_l 2^{p(L_il + R_lj)} − log2 n)` for every `(i, j)`.
///
/// Rows of `L` and columns of `R` are shifted by their largest finite
/// entry, and each shifted power is split into a mantissa in `[1, 2)` and
/// an integer exponent. Sums are taken relative to the largest term of
/// each entry, so no term that matters can overflow or underflow.
fn log_power_mean(left: &Matrix, right: &Matrix, p: f64, nonfinite: &mut usize) -> Matrix {
    let (m, n, k) = (left.rows(), left.cols(), right.cols());
    let l: Vec<f64> = left.data().iter().map(|v| to_extended(*v)).collect();
    let r: Vec<f64> = right.data().iter().map(|v| to_extended(*v)).collect();
    let finite_max = |it: &mut dyn Iterator<Item = f64>| {
        it.filter(|v| v.is_finite()).fold(f64::NEG_INFINITY, f64::max)
    };
    let row_shift: Vec<f64> = (0..m)
        .map(|i| finite_max(&mut l[i * n..(i + 1) * n].iter().copied()))
        .collect();
    let row_unbounded: Vec<bool> = (0..m)
        .map(|i| l[i * n..(i + 1) * n].contains(&f64::INFINITY))
        .collect();
    let col_shift: Vec<f64> = (0..k)
        .map(|j| finite_max(&mut (0..n).map(|t| r[t * k + j])))
        .collect();
    let col_unbounded: Vec<bool> = (0..k)
        .map(|j| (0..n).any(|t| r[t * k + j] == f64::INFINITY))
        .collect();
    // `None` marks a zero factor (an exact entry or a zero value).
    let factor = |v: f64, shift: f64| -> Option<(f64, i64)> {
        v.is_finite().then(|| {
            let x = p * (v - shift);
            let e = x.floor();
            ((x - e).exp2(), e as i64)
        })
    };
    let lf: Vec<Option<(f64, i64)>> =
        (0..m * n).map(|x| factor(l[x], row_shift[x / n.max(1)])).collect();
    let rf: Vec<Option<(f64, i64)>> =
        (0..n * k).map(|x| factor(r[x], col_shift[x % k.max(1)])).collect();
    let (la, le) = split(&lf);
    let (ra, re) = split(&rf);
    let log_n = (n as f64).log2();
    let mut out = vec![0.0; m * k];
    let bad: usize = out
        .par_chunks_mut(k.max(1))
        .enumerate()
        .map(|(i, row)| {
            // Pass 1: the largest term exponent of each output entry.
            let mut top = vec![i64::MIN; k];
            for t in 0..n {
                let ea = le[i * n + t];
                if ea == i64::MIN {
                    continue;
                }
                for (m, eb) in top.iter_mut().zip(&re[t * k..(t + 1) * k]) {
                    if *eb != i64::MIN {
                        *m = (*m).max(ea.saturating_add(*eb));
                    }
                }
            }
            // Pass 2: every term scaled by that exponent, so the sum is in [1, 4n).
            let mut sums = vec![0.0f64; k];
            for t in 0..n {
                let (fa, ea) = (la[i * n + t], le[i * n + t]);
                if ea == i64::MIN {
                    continue;
                }
                let rows = ra[t * k..(t + 1) * k].iter().zip(&re[t * k..(t + 1) * k]);
                for ((s, m), (fb, eb)) in sums.iter_mut().zip(&top).zip(rows) {
                    if *eb != i64::MIN {
                        *s += fa * fb * pow2(ea.saturating_add(*eb).saturating_sub(*m));
                    }
                }
            }
            let mut bad = 0;
            for (j, (o, (s, e))) in row.iter_mut().zip(sums.iter().zip(&top)).enumerate() {
                if !s.is_finite() {
                    bad += 1;
                }
                let v = if row_unbounded[i] || col_unbounded[j] {
                    f64::INFINITY
                } else if *e == i64::MIN {
                    f64::NEG_INFINITY
                } else {
                    row_shift[i] + col_shift[j] + (*e as f64 + s.log2() - log_n) / p
                };
                *o = from_extended(v);
            }
            bad
        })
        .sum();
    *nonfinite += bad;
    Matrix::new(m, k, out).expect("dimensions are consistent")
}

/// Mantissas and exponents as separate arrays; zero factors get `i64::MIN`.
fn split(f: &[Option<(f64, i64)>]) -> (Vec<f64>, Vec<i64>) {
    f.iter().map(|x| x.unwrap_or((0.0, i64::MIN))).unzip()
}

/// `2^d` for `d ≤ 0`, flushed to zero below the normal range.
fn pow2(d: i64) -> f64 {
    if d < -1022 {
        0.0
    } else {
        f64::from_bits(((d + 1023) as u64) << 52)
    }
}

fn elementwise_max(a: Matrix, b: &Matrix) -> Matrix {
    let data = a.data().iter().zip(b.data()).map(|(x, y)| x.max(*y)).collect();
    Matrix::new(a.rows(), a.cols(), data).expect("same dimensions")
}

/// `log2((2^𝒜 · 2^ℬ)_ij) − log2 n`: the arithmetic mean of the
/// `2^{𝔞+𝔟}` terms in place of their max.
pub fn estimate_v1(
    a_exp: &InaccuracyExponentMatrix,
    b_exp: &InaccuracyExponentMatrix,
) -> Result<Matrix> {
    check_inner(a_exp.rows(), a_exp.cols(), b_exp.rows(), b_exp.cols())?;
    let mut nonfinite = 0;
    Ok(log_power_mean(&a_exp.to_matrix(), &b_exp.to_matrix(), 1.0, &mut nonfinite))
}

/// `log2 max((|A|·2^ℬ)_ij, (2^𝒜·|B|)_ij) − log2 n`.
pub fn estimate_v2(
    a_values: &Matrix,
    a_exp: &InaccuracyExponentMatrix,
    b_values: &Matrix,
    b_exp: &InaccuracyExponentMatrix,
) -> Result<Matrix> {
    Ok(holder_at(a_values, a_exp, b_values, b_exp, 1.0)?.estimate)
}

/// Power-mean version of [`estimate_v2`]; larger `p` is tighter.
pub fn estimate_holder(
    a_values: &Matrix,
    a_exp: &InaccuracyExponentMatrix,
    b_values: &Matrix,
    b_exp: &InaccuracyExponentMatrix,
    p: HolderP,
) -> Result<HolderEstimate> {
    let p = match p {
        HolderP::Auto => select_auto_p(a_values, a_exp, b_values, b_exp),
        HolderP::Fixed(p) if p >= 1.0 && p.is_finite() => p,
        HolderP::Fixed(p) => return Err(Error::Range(p, "Hölder exponent must be ≥ 1")),
    };
    holder_at(a_values, a_exp, b_values, b_exp, p)
}

fn holder_at(
    a_values: &Matrix,
    a_exp: &InaccuracyExponentMatrix,
    b_values: &Matrix,
    b_exp: &InaccuracyExponentMatrix,
    p: f64,
) -> Result<HolderEstimate> {
    check_operands(a_values, a_exp, b_values, b_exp)?;
    let mut nonfinite = 0;
    let value_side = log_power_mean(&a_values.log2_abs(), &b_exp.to_matrix(), p, &mut nonfinite);
    let exp_side = log_power_mean(&a_exp.to_matrix(), &b_values.log2_abs(), p, &mut nonfinite);
    Ok(HolderEstimate {
        estimate: elementwise_max(value_side, &exp_side),
        p,
        nonfinite_intermediates: nonfinite,
    })
}

pub(crate) fn check_operands(
    a_values: &Matrix,
    a_exp: &InaccuracyExponentMatrix,
    b_values: &Matrix,
    b_exp: &InaccuracyExponentMatrix,
) -> Result<()> {
    if (a_values.rows(), a_values.cols()) != (a_exp.rows(), a_exp.cols())
        || (b_values.rows(), b_values.cols()) != (b_exp.rows(), b_exp.cols())
    {
        return Err(Error::Shape("values and exponents differ in shape".into()));
    }
    check_inner(a_values.rows(), a_values.cols(), b_values.rows(), b_values.cols())
}

/// Largest candidate `p` with `p·(M + log2 n + 4) < 1020`, where `M` is the
/// largest magnitude among value and inaccuracy exponents.
pub fn select_auto_p(
    a_values: &Matrix,
    a_exp: &InaccuracyExponentMatrix,
    b_values: &Matrix,
    b_exp: &InaccuracyExponentMatrix,
) -> f64 {
    let m = [
        max_abs_value_exponent(a_values),
        max_abs_value_exponent(b_values),
        max_abs_exponent(a_exp),
        max_abs_exponent(b_exp),
    ]
    .into_iter()
    .max()
    .unwrap_or(0) as f64;
    let n = a_values.cols().max(1) as f64;
    AUTO_P_CANDIDATES
        .into_iter()
        .rev()
        .find(|p| p * (m + n.log2() + 4.0) < 1020.0)
        .unwrap_or(1.0)
}

#[cfg(test)]
mod tests {
    use super::super::matrix::NEG_INF;
    use super::*;

    fn exps(rows: usize, cols: usize, d: &[i32]) -> InaccuracyExponentMatrix {
        InaccuracyExponentMatrix::new(rows, cols, d.to_vec()).unwrap()
    }

    #[test]
    fn v1_single_term() {
        let e = estimate_v1(&exps(1, 1, &[-10]), &exps(1, 1, &[-7])).unwrap();
        assert_eq!(e.get(0, 0), -17.0);
    }

    #[test]
    fn v1_equal_terms_cancel_the_mean() {
        let a = exps(1, 4, &[-10, -12, -9, -20]);
        let b = exps(4, 1, &[-5, -3, -6, 5]);
        let e = estimate_v1(&a, &b).unwrap();
        assert!((e.get(0, 0) + 15.0).abs() < 1e-12);
    }

    #[test]
    fn exact_operands_give_sentinel() {
        let v = Matrix::new(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let x = exps(2, 2, &[NEG_INF; 4]);
        let e = estimate_v2(&v, &x, &v, &x).unwrap();
        assert!(e.data().iter().all(|v| *v == NEG_INF as f64));
    }

    #[test]
    fn v2_single_term() {
        let a = Matrix::new(1, 1, vec![3.0]).unwrap();
        let b = Matrix::new(1, 1, vec![-0.5]).unwrap();
        let e = estimate_v2(&a, &exps(1, 1, &[-20]), &b, &exps(1, 1, &[-30])).unwrap();
        let expect = (3.0f64.log2() - 30.0).max(-20.0 + (-1.0));
        assert!((e.get(0, 0) - expect).abs() < 1e-12);
    }

    #[test]
    fn holder_p1_is_v2() {
        let a = Matrix::from_fn(3, 4, |i, j| (i as f64 + 1.0) * (j as f64 - 1.5));
        let b = Matrix::from_fn(4, 2, |i, j| 0.3 * i as f64 - j as f64 + 0.1);
        let ae = exps(3, 4, &[-20, -30, -25, NEG_INF, -18, -40, -22, -21, -35, -19, -27, -33]);
        let be = exps(4, 2, &[-12, -50, -31, -24, -17, NEG_INF, -29, -26]);
        let v2 = estimate_v2(&a, &ae, &b, &be).unwrap();
        let h = estimate_holder(&a, &ae, &b, &be, HolderP::Fixed(1.0)).unwrap();
        assert_eq!(v2, h.estimate);
        assert!(matches!(
            estimate_holder(&a, &ae, &b, &be, HolderP::Fixed(0.5)),
            Err(Error::Range(..))
        ));
    }

    #[test]
    fn auto_p_for_large_exponents() {
        let a = Matrix::from_fn(4, 4, |i, j| crate::format::pow2(300 - 150 * ((i + j) % 5) as i32));
        let ae = exps(4, 4, &[-330; 16]);
        let h = estimate_holder(&a, &ae, &a, &ae, HolderP::Auto).unwrap();
        assert_eq!(h.p, 2.0);
        assert_eq!(h.nonfinite_intermediates, 0);
        assert!(h.estimate.data().iter().all(|v| v.is_finite()));
    }

    #[test]
    fn shape_mismatch() {
        assert!(estimate_v1(&exps(2, 3, &[0; 6]), &exps(2, 3, &[0; 6])).is_err());
    }
}
