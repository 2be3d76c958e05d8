//! Brute-force max-plus products: the exact bounds the mean-relaxed
//! estimators are measured against.

use super::estimators::check_operands;
use super::matrix::{from_extended, to_extended, InaccuracyExponentMatrix, Matrix};
use crate::error::{Error, Result};

/// `out_ij = max_l (X_il + Y_lj)` with `NEG_INF` absorbing.
pub fn tropical_matmul(x: &Matrix, y: &Matrix) -> Result<Matrix> {
    if x.cols() != y.rows() {
        return Err(Error::Shape(format!(
            "cannot multiply {}x{} by {}x{}",
            x.rows(),
            x.cols(),
            y.rows(),
            y.cols()
        )));
    }
    Ok(Matrix::from_fn(x.rows(), y.cols(), |i, j| {
        let best = (0..x.cols())
            .map(|l| tropical_term(x.get(i, l), y.get(l, j)))
            .fold(f64::NEG_INFINITY, f64::max);
        from_extended(best)
    }))
}

fn tropical_term(a: f64, b: f64) -> f64 {
    let (a, b) = (to_extended(a), to_extended(b));
    if a == f64::NEG_INFINITY || b == f64::NEG_INFINITY {
        f64::NEG_INFINITY
    } else {
        a + b
    }
}

/// `out_ij = max_l max(log2|A_il| + ℬ_lj, 𝒜_il + log2|B_lj|)`, the exact
/// form of the value/inaccuracy cross-term bound.
pub fn mixed_tropical(
    a_values: &Matrix,
    a_exp: &InaccuracyExponentMatrix,
    b_values: &Matrix,
    b_exp: &InaccuracyExponentMatrix,
) -> Result<Matrix> {
    check_operands(a_values, a_exp, b_values, b_exp)?;
    let la = a_values.log2_abs();
    let lb = b_values.log2_abs();
    let (ae, be) = (a_exp.to_matrix(), b_exp.to_matrix());
    Ok(Matrix::from_fn(a_values.rows(), b_values.cols(), |i, j| {
        let best = (0..a_values.cols())
            .map(|l| {
                tropical_term(la.get(i, l), be.get(l, j))
                    .max(tropical_term(ae.get(i, l), lb.get(l, j)))
            })
            .fold(f64::NEG_INFINITY, f64::max);
        from_extended(best)
    }))
}

#[cfg(test)]
mod tests {
    use super::super::matrix::NEG_INF;
    use super::*;

    #[test]
    fn hand_computed() {
        let x = Matrix::new(1, 3, vec![1.0, 2.0, 3.0]).unwrap();
        let y = Matrix::new(3, 1, vec![3.0, 2.0, 1.0]).unwrap();
        assert_eq!(tropical_matmul(&x, &y).unwrap().get(0, 0), 4.0);
    }

    #[test]
    fn tropical_identity() {
        let n = NEG_INF as f64;
        let id = Matrix::from_fn(3, 3, |i, j| if i == j { 0.0 } else { n });
        let y = Matrix::from_fn(3, 2, |i, j| i as f64 * 1.5 - j as f64);
        assert_eq!(tropical_matmul(&id, &y).unwrap(), y);
    }

    #[test]
    fn loop_order_does_not_matter() {
        let x = Matrix::from_fn(5, 5, |i, j| ((i * 7 + j * 3) % 11) as f64 - 5.0);
        let y = Matrix::from_fn(5, 5, |i, j| ((i * 5 + j * 2) % 13) as f64 - 6.0);
        let mut alt = [f64::NEG_INFINITY; 25];
        for l in (0..5).rev() {
            for j in 0..5 {
                for i in 0..5 {
                    alt[i * 5 + j] = alt[i * 5 + j].max(x.get(i, l) + y.get(l, j));
                }
            }
        }
        assert_eq!(tropical_matmul(&x, &y).unwrap().data(), &alt[..]);
    }

    #[test]
    fn mixed_single_term() {
        let a = Matrix::new(1, 1, vec![8.0]).unwrap();
        let b = Matrix::new(1, 1, vec![0.25]).unwrap();
        let ae = InaccuracyExponentMatrix::new(1, 1, vec![-20]).unwrap();
        let be = InaccuracyExponentMatrix::new(1, 1, vec![-30]).unwrap();
        let m = mixed_tropical(&a, &ae, &b, &be).unwrap();
        assert_eq!(m.get(0, 0), (3.0f64 - 30.0).max(-20.0 - 2.0));
    }
}
