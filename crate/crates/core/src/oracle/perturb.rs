//! Perturbation sampling and the black-bit check.
//!
//! The library promises that bits it marks inexact are meaningless. The
//! check replays a program on inputs drawn from their inaccuracy intervals
//! and fails when an output claims a much larger inaccuracy than the
//! observed spread of the replays.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::program::Program;
use crate::error::{Error, Result};
use crate::scalar::XScalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Spread {
    pub min: f64,
    pub max: f64,
    pub width: f64,
    /// Replay at the interval centers.
    pub center: f64,
}

impl Spread {
    pub fn half_width(&self) -> f64 {
        self.width / 2.0
    }
}

/// Replays `prog` on `samples` input vectors: every input at its lower
/// bound, every input at its upper bound, all at their centers, then
/// independent uniform draws from a generator seeded with `seed`.
pub fn perturb_run(
    prog: &dyn Program,
    inputs: &[XScalar],
    samples: usize,
    seed: u64,
) -> Result<Vec<Spread>> {
    if samples < 2 {
        return Err(Error::Range(samples as f64, "perturb_run needs at least 2 samples"));
    }
    if inputs.len() != prog.n_inputs() {
        return Err(Error::Shape(format!(
            "program takes {} inputs, got {}",
            prog.n_inputs(),
            inputs.len()
        )));
    }
    let fmt = prog.format();
    let centers: Vec<f64> = inputs.iter().map(|x| x.value()).collect();
    let deltas: Vec<f64> = inputs.iter().map(|x| x.delta()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_out = prog.n_outputs();
    let mut lo = vec![f64::INFINITY; n_out];
    let mut hi = vec![f64::NEG_INFINITY; n_out];
    let mut center_out = vec![f64::NAN; n_out];
    let mut point = vec![0.0; inputs.len()];
    for s in 0..samples {
        for (i, p) in point.iter_mut().enumerate() {
            let (c, d) = (centers[i], deltas[i]);
            let offset = if !d.is_finite() || d == 0.0 {
                0.0
            } else {
                match s {
                    0 => -d,
                    1 => d,
                    2 => 0.0,
                    _ => rng.random_range(-1.0..=1.0) * d,
                }
            };
            *p = fmt.round(c + offset);
        }
        let out = prog.replay(&point);
        for (j, v) in out.iter().enumerate() {
            if v.is_nan() {
                lo[j] = f64::NEG_INFINITY;
                hi[j] = f64::INFINITY;
            } else {
                lo[j] = lo[j].min(*v);
                hi[j] = hi[j].max(*v);
            }
            if s == 2 || (samples == 2 && s == 0) {
                center_out[j] = *v;
            }
        }
    }
    Ok((0..n_out)
        .map(|j| Spread {
            min: lo[j],
            max: hi[j],
            width: if lo[j] == hi[j] { 0.0 } else { hi[j] - lo[j] },
            center: center_out[j],
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CheckConfig {
    /// Allowed ratio between claimed inaccuracy and observed half-width.
    pub slack: f64,
    pub samples: usize,
    pub seed: u64,
}

impl Default for CheckConfig {
    fn default() -> Self {
        CheckConfig {
            slack: 4.0,
            samples: 64,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub output: usize,
    pub value: f64,
    pub exact_bits: u32,
    pub delta_estimated: f64,
    pub observed_half_width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlackBitReport {
    pub passed: bool,
    /// Outputs with a nonzero observed spread, which the verdict covers.
    pub checked: usize,
    /// Outputs whose replays never varied; reported but not judged.
    pub informational: usize,
    pub violations: Vec<Violation>,
    /// Largest `Δ_estimated / observed_half_width` among checked outputs.
    pub worst_ratio: f64,
    pub config: CheckConfig,
}

/// Passes when every output with a nonzero observed spread satisfies
/// `Δ_estimated ≤ slack · half_width + ulp`.
pub fn check_black_bits(
    prog: &dyn Program,
    inputs: &[XScalar],
    estimate: &[XScalar],
    config: CheckConfig,
) -> Result<BlackBitReport> {
    if estimate.len() != prog.n_outputs() {
        return Err(Error::Shape(format!(
            "program has {} outputs, estimate has {}",
            prog.n_outputs(),
            estimate.len()
        )));
    }
    let spreads = perturb_run(prog, inputs, config.samples, config.seed)?;
    let fmt = prog.format();
    let mut report = BlackBitReport {
        passed: true,
        checked: 0,
        informational: 0,
        violations: vec![],
        worst_ratio: 0.0,
        config,
    };
    for (j, (x, s)) in estimate.iter().zip(&spreads).enumerate() {
        let hw = s.half_width();
        if !x.value().is_finite() || !hw.is_finite() {
            report.informational += 1;
            continue;
        }
        if hw == 0.0 {
            report.informational += 1;
            continue;
        }
        report.checked += 1;
        let d = x.delta();
        report.worst_ratio = report.worst_ratio.max(d / hw);
        if d > config.slack * hw + fmt.ulp(x.value()) {
            report.passed = false;
            report.violations.push(Violation {
                output: j,
                value: x.value(),
                exact_bits: x.exact_bits(),
                delta_estimated: d,
                observed_half_width: hw,
            });
        }
    }
    Ok(report)
}
