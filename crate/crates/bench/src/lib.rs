//! Input generators shared by the benchmarks.

use preciseum_core::matmul::{InaccuracyExponentMatrix, Matrix};
use preciseum_core::{XArray, XScalar};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `rows×cols` values `±[1,2)·2^k`, `|k| ≤ exp_range`, with 8 to 40 exact bits.
pub fn random_xarray(seed: u64, rows: usize, cols: usize, exp_range: i32) -> XArray {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let xs: Vec<XScalar> = (0..rows * cols)
        .map(|_| {
            let sign = if rng.random_bool(0.5) { -1.0 } else { 1.0 };
            let v = sign * rng.random_range(1.0..2.0) * 2f64.powi(rng.random_range(-exp_range..=exp_range));
            XScalar::with_bits(v, rng.random_range(8..=40)).expect("bits in range")
        })
        .collect();
    XArray::from_scalars(vec![rows, cols], &xs).expect("shape matches")
}

/// Values and inaccuracy exponents of one operand.
pub fn split(a: &XArray) -> (Matrix, InaccuracyExponentMatrix) {
    (
        Matrix::from_values(a).expect("rank 2"),
        InaccuracyExponentMatrix::from_xarray(a).expect("rank 2"),
    )
}

pub fn random_scalars(seed: u64, n: usize) -> Vec<XScalar> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| XScalar::with_bits(rng.random_range(0.1..4.0), rng.random_range(4..=53)).expect("bits in range"))
        .collect()
}
