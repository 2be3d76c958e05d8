//! Binary floating-point formats and the bit-level helpers shared by every
//! precision rule.
//!
//! All values are carried as `f64` internally. A value tagged with a
//! narrower format is always exactly representable in that format; every
//! arithmetic result is rounded back into it with round-to-nearest-even.

use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FloatFormat {
    Binary64,
    Binary32,
    Binary16,
    BFloat16,
}

impl FloatFormat {
    pub const ALL: [FloatFormat; 4] = [
        FloatFormat::Binary64,
        FloatFormat::Binary32,
        FloatFormat::Binary16,
        FloatFormat::BFloat16,
    ];

    /// Significand width including the implicit leading bit.
    pub const fn mantissa_bits(self) -> u32 {
        match self {
            FloatFormat::Binary64 => 53,
            FloatFormat::Binary32 => 24,
            FloatFormat::Binary16 => 11,
            FloatFormat::BFloat16 => 8,
        }
    }

    /// Exponent of the smallest positive normal number.
    pub const fn min_exponent(self) -> i32 {
        match self {
            FloatFormat::Binary64 => -1022,
            FloatFormat::Binary32 | FloatFormat::BFloat16 => -126,
            FloatFormat::Binary16 => -14,
        }
    }

    pub const fn code(self) -> u8 {
        match self {
            FloatFormat::Binary64 => 0,
            FloatFormat::Binary32 => 1,
            FloatFormat::Binary16 => 2,
            FloatFormat::BFloat16 => 3,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        FloatFormat::ALL.into_iter().find(|f| f.code() == code)
    }

    /// Width in bytes of one encoded value.
    pub const fn byte_width(self) -> usize {
        match self {
            FloatFormat::Binary64 => 8,
            FloatFormat::Binary32 => 4,
            FloatFormat::Binary16 | FloatFormat::BFloat16 => 2,
        }
    }

    /// Round an `f64` to the nearest value of this format (ties to even).
    ///
    /// NaNs in the narrow formats are canonicalized so that encoding and
    /// decoding round-trips bit for bit.
    pub fn round(self, v: f64) -> f64 {
        if v.is_nan() && self != FloatFormat::Binary64 {
            return f64::NAN;
        }
        match self {
            FloatFormat::Binary64 => v,
            FloatFormat::Binary32 => v as f32 as f64,
            FloatFormat::Binary16 | FloatFormat::BFloat16 => round_to_precision(
                v,
                self.mantissa_bits() as i32,
                self.min_exponent(),
                self.max_exponent(),
            ),
        }
    }

    /// Exponent of the largest finite number.
    pub const fn max_exponent(self) -> i32 {
        match self {
            FloatFormat::Binary64 => 1023,
            FloatFormat::Binary32 | FloatFormat::BFloat16 => 127,
            FloatFormat::Binary16 => 15,
        }
    }

    pub fn is_representable(self, v: f64) -> bool {
        v.is_nan() || self.round(v) == v
    }

    /// Spacing of representable values at the magnitude of `v`.
    pub fn ulp(self, v: f64) -> f64 {
        let e = if v == 0.0 || !v.is_finite() {
            self.min_exponent()
        } else {
            floor_log2(v).max(self.min_exponent())
        };
        pow2(e - (self.mantissa_bits() as i32 - 1))
    }

    /// Half the spacing at `v`; in the binary64 subnormal range this would
    /// underflow, so it stops at the smallest subnormal.
    pub fn half_ulp(self, v: f64) -> f64 {
        (self.ulp(v) * 0.5).max(f64::from_bits(1))
    }

    /// Significant decimal digits needed to show every mantissa bit.
    pub fn display_digits(self) -> usize {
        (self.mantissa_bits() as f64 * std::f64::consts::LOG10_2).ceil() as usize
    }

    pub fn encode(self, v: f64, out: &mut Vec<u8>) {
        match self {
            FloatFormat::Binary64 => out.extend_from_slice(&v.to_le_bytes()),
            FloatFormat::Binary32 => out.extend_from_slice(&(v as f32).to_le_bytes()),
            FloatFormat::Binary16 => out.extend_from_slice(&half::f16::from_f64(v).to_le_bytes()),
            FloatFormat::BFloat16 => {
                out.extend_from_slice(&half::bf16::from_f64(v).to_le_bytes())
            }
        }
    }

    /// Decode one value; `bytes` must hold exactly [`byte_width`](Self::byte_width) bytes.
    pub fn decode(self, bytes: &[u8]) -> f64 {
        let v = match self {
            FloatFormat::Binary64 => f64::from_le_bytes(bytes.try_into().unwrap()),
            FloatFormat::Binary32 => f32::from_le_bytes(bytes.try_into().unwrap()) as f64,
            FloatFormat::Binary16 => half::f16::from_le_bytes(bytes.try_into().unwrap()).to_f64(),
            FloatFormat::BFloat16 => {
                half::bf16::from_le_bytes(bytes.try_into().unwrap()).to_f64()
            }
        };
        self.round(v)
    }
}

impl fmt::Display for FloatFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FloatFormat::Binary64 => "binary64",
            FloatFormat::Binary32 => "binary32",
            FloatFormat::Binary16 => "binary16",
            FloatFormat::BFloat16 => "bfloat16",
        })
    }
}

/// Round-to-nearest-even onto a `p`-bit significand with the given normal
/// exponent range, including gradual underflow and overflow to infinity.
fn round_to_precision(v: f64, p: i32, emin: i32, emax: i32) -> f64 {
    if !v.is_finite() || v == 0.0 {
        return v;
    }
    let quantum = pow2(floor_log2(v).max(emin) - p + 1);
    let r = (v / quantum).round_ties_even() * quantum;
    let max_finite = (2.0 - pow2(1 - p)) * pow2(emax);
    if r.abs() > max_finite {
        f64::INFINITY.copysign(v)
    } else {
        r
    }
}

/// `floor(log2 |v|)` computed from the bit pattern. Subnormals use their
/// normalized exponent. `v` must be finite and nonzero.
pub fn floor_log2(v: f64) -> i32 {
    debug_assert!(v.is_finite() && v != 0.0);
    let bits = v.to_bits();
    let biased = ((bits >> 52) & 0x7ff) as i32;
    if biased == 0 {
        let mant = bits & ((1u64 << 52) - 1);
        -1074 + (63 - mant.leading_zeros() as i32)
    } else {
        biased - 1023
    }
}

/// `ceil(log2 v)` for finite positive `v`.
pub fn ceil_log2(v: f64) -> i32 {
    let e = floor_log2(v);
    if is_pow2(v) {
        e
    } else {
        e + 1
    }
}

pub fn is_pow2(v: f64) -> bool {
    if !v.is_finite() || v == 0.0 {
        return false;
    }
    let bits = v.abs().to_bits();
    let biased = (bits >> 52) & 0x7ff;
    let mant = bits & ((1u64 << 52) - 1);
    if biased == 0 {
        mant.is_power_of_two()
    } else {
        mant == 0
    }
}

/// Exact `2^k`, saturating to `inf` above the range and to `0` below it.
pub fn pow2(k: i32) -> f64 {
    if k > 1023 {
        f64::INFINITY
    } else if k >= -1022 {
        f64::from_bits(((k + 1023) as u64) << 52)
    } else if k >= -1074 {
        f64::from_bits(1u64 << (k + 1074))
    } else {
        0.0
    }
}

/// `x * 2^n` without spurious intermediate overflow or underflow.
pub fn ldexp(mut x: f64, mut n: i32) -> f64 {
    while n > 1000 {
        x *= pow2(1000);
        n -= 1000;
    }
    while n < -1000 {
        x *= pow2(-1000);
        n += 1000;
    }
    x * pow2(n)
}

/// Sum of nonnegative terms, rounded upward so the result never
/// understates the true sum.
pub fn sum_upward(terms: impl IntoIterator<Item = f64>) -> f64 {
    let mut acc = 0.0f64;
    for t in terms {
        let (s, err) = two_sum(acc, t);
        acc = if err > 0.0 { s.next_up() } else { s };
    }
    acc
}

/// Error-free transformation: `a + b = s + err` exactly.
pub fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    (s, err)
}
