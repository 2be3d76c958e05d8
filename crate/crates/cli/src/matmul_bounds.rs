//! Compares the mean-relaxed product bounds with the exact max-plus bound.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;
use std::time::Instant;

use preciseum_core::matmul::{
    estimate_holder, estimate_v1, estimate_v2, mixed_tropical, HolderP,
    InaccuracyExponentMatrix, Matrix, NEG_INF,
};
use preciseum_core::{io, XArray, XScalar};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::report::{DemoReport, Row};
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Dist {
    /// Values in [−1, 1], every entry exact.
    Exact,
    /// Values in [−1, 1], 8 to 40 exact bits.
    Uniform,
    /// Magnitudes 2^±300, 8 to 40 exact bits.
    Wide,
}

pub fn random_matrix(rng: &mut impl Rng, rows: usize, cols: usize, dist: Dist) -> XArray {
    let xs: Vec<XScalar> = (0..rows * cols)
        .map(|_| {
            let v = match dist {
                Dist::Exact | Dist::Uniform => rng.random_range(-1.0..=1.0),
                Dist::Wide => {
                    let sign = if rng.random_bool(0.5) { -1.0 } else { 1.0 };
                    sign * rng.random_range(1.0..2.0) * 2f64.powi(rng.random_range(-300..=300))
                }
            };
            match dist {
                Dist::Exact => XScalar::from_exact(v),
                _ => XScalar::with_bits(v, rng.random_range(8..=40)).expect("bits in range"),
            }
        })
        .collect();
    XArray::from_scalars(vec![rows, cols], &xs).expect("shape matches")
}

/// Mean of `reference − estimate` over entries where both are finite
/// exponents; `None` when every entry is exact.
pub fn mean_gap(reference: &Matrix, estimate: &Matrix) -> Option<f64> {
    let sentinel = NEG_INF as f64;
    let gaps: Vec<f64> = reference
        .data()
        .iter()
        .zip(estimate.data())
        .filter(|(r, e)| **r > sentinel && **e > sentinel)
        .map(|(r, e)| r - e)
        .collect();
    (!gaps.is_empty()).then(|| gaps.iter().sum::<f64>() / gaps.len() as f64)
}

pub struct BoundsInput {
    pub a: XArray,
    pub b: XArray,
}

pub fn generate(n: usize, dist: Dist, seed: u64) -> BoundsInput {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = random_matrix(&mut rng, n, n, dist);
    let b = random_matrix(&mut rng, n, n, dist);
    BoundsInput { a, b }
}

pub fn save(input: &BoundsInput, path: &Path) -> Result<(), CliError> {
    let f = File::create(path).map_err(|e| CliError::Internal(format!("{}: {e}", path.display())))?;
    io::save_many(&[&input.a, &input.b], BufWriter::new(f))?;
    Ok(())
}

pub fn load(path: &Path) -> Result<BoundsInput, CliError> {
    let f = File::open(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    let mut arrays = io::load_many(BufReader::new(f), 2)?;
    let b = arrays.pop().expect("two arrays");
    let a = arrays.pop().expect("two arrays");
    Ok(BoundsInput { a, b })
}

pub struct BoundsOptions {
    pub n: usize,
    pub dist: Dist,
    pub seed: u64,
    pub p_list: Vec<f64>,
    pub save: Option<std::path::PathBuf>,
    pub load: Option<std::path::PathBuf>,
}

pub fn cmd_matmul_bounds(opts: &BoundsOptions) -> Result<DemoReport, CliError> {
    if opts.load.is_none() && !(1..=512).contains(&opts.n) {
        return Err(CliError::Usage(format!("n must be in 1..=512, got {}", opts.n)));
    }
    if let Some(p) = opts.p_list.iter().find(|p| !(**p >= 1.0 && p.is_finite())) {
        return Err(CliError::Usage(format!("Hölder exponents must be >= 1, got {p}")));
    }
    let input = match &opts.load {
        Some(path) => load(path)?,
        None => generate(opts.n, opts.dist, opts.seed),
    };
    if let Some(path) = &opts.save {
        save(&input, path)?;
    }
    let av = Matrix::from_values(&input.a)?;
    let bv = Matrix::from_values(&input.b)?;
    let ae = InaccuracyExponentMatrix::from_xarray(&input.a)?;
    let be = InaccuracyExponentMatrix::from_xarray(&input.b)?;

    let mut report = DemoReport::new("matmul-bounds")
        .param("n", input.a.shape()[0])
        .param("dist", serde_json::to_value(opts.dist).expect("enum"))
        .param("seed", opts.seed);
    let t = Instant::now();
    let reference = mixed_tropical(&av, &ae, &bv, &be)?;
    report.row(Row::new("mixed_tropical").metric("seconds", t.elapsed().as_secs_f64()));

    let mut push = |label: String, est: Matrix, secs: f64, p: Option<f64>| {
        let mut row = Row::new(label).metric("seconds", secs);
        match mean_gap(&reference, &est) {
            Some(g) => row = row.metric("mean_gap", g),
            None => row = row.verdict("exact"),
        }
        if let Some(p) = p {
            row = row.metric("p", p);
        }
        report.row(row);
    };
    let t = Instant::now();
    let v1 = estimate_v1(&ae, &be)?;
    push("v1".into(), v1, t.elapsed().as_secs_f64(), None);
    let t = Instant::now();
    let v2 = estimate_v2(&av, &ae, &bv, &be)?;
    push("v2".into(), v2, t.elapsed().as_secs_f64(), None);
    for &p in &opts.p_list {
        let t = Instant::now();
        let h = estimate_holder(&av, &ae, &bv, &be, HolderP::Fixed(p))?;
        push(format!("holder({p})"), h.estimate, t.elapsed().as_secs_f64(), Some(p));
    }
    let t = Instant::now();
    let h = estimate_holder(&av, &ae, &bv, &be, HolderP::Auto)?;
    push("holder(auto)".into(), h.estimate, t.elapsed().as_secs_f64(), Some(h.p));
    Ok(report)
}
