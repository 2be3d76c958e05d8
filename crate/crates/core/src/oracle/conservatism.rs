//! Single-operation comparison of the tracked inaccuracy with the interval
//! image of the operands' inaccuracy intervals.

use serde::{Deserialize, Serialize};

use super::interval::Interval;
use super::program::OpChoice;
use crate::error::{Error, Result};
use crate::scalar::XScalar;

/// Why a case was left out of the comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Exclusion {
    /// Zero results are maximally exact by convention.
    ZeroResult,
    /// Non-finite result or unbounded interval (poles, domain edges).
    Unbounded,
    /// The condition number changes by more than 2× across the input
    /// interval, so a linearized estimate has no meaning there.
    ConditionVaries,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Conservatism {
    /// `estimate ≥ half_width / 2`.
    Holds { estimate: f64, half_width: f64 },
    Violated { estimate: f64, half_width: f64 },
    Excluded(Exclusion),
}

impl Conservatism {
    pub fn is_violation(&self) -> bool {
        matches!(self, Conservatism::Violated { .. })
    }
}

const CONDITION_SPREAD: f64 = 2.0;

/// Runs `op` through the tracked path and through interval arithmetic on
/// `[v − Δ, v + Δ]`, and checks `Δ_est ≥ half_width / 2`. Nonzero full-bit
/// results count half an ulp of inaccuracy; zero-bit results claim nothing.
pub fn check_conservatism(op: OpChoice, args: &[XScalar]) -> Result<Conservatism> {
    let (result, image) = match (op, args) {
        (OpChoice::Binary(b), [x, y]) => (
            b.apply(x, y),
            Interval::from_xscalar(x).binary(b, &Interval::from_xscalar(y)),
        ),
        (OpChoice::Unary(f), [x]) => {
            let iv = Interval::from_xscalar(x);
            if condition_varies(&f, &iv) {
                return Ok(Conservatism::Excluded(Exclusion::ConditionVaries));
            }
            (f.apply(x), iv.unary(&f))
        }
        _ => {
            return Err(Error::Shape(format!(
                "{op:?} does not take {} arguments",
                args.len()
            )))
        }
    };
    if result.value() == 0.0 {
        return Ok(Conservatism::Excluded(Exclusion::ZeroResult));
    }
    if !result.value().is_finite() || image.is_unbounded() {
        return Ok(Conservatism::Excluded(Exclusion::Unbounded));
    }
    // Zero exact bits is the floor of the scale: no precision is claimed,
    // so the bound is open above.
    let estimate = if result.exact_bits() == 0 {
        f64::INFINITY
    } else {
        result.implied_delta()
    };
    let half_width = image.half_width();
    Ok(if estimate >= half_width / 2.0 {
        Conservatism::Holds { estimate, half_width }
    } else {
        Conservatism::Violated { estimate, half_width }
    })
}

fn condition_varies(f: &crate::unary::UnaryFn, iv: &Interval) -> bool {
    if iv.is_unbounded() {
        return false;
    }
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    for k in 0..=4 {
        let t = k as f64 / 4.0;
        let c = f.condition_number(iv.lo + t * (iv.hi - iv.lo));
        if !c.is_finite() {
            return true;
        }
        lo = lo.min(c);
        hi = hi.max(c);
    }
    hi > CONDITION_SPREAD * lo
}
