//! Conversion of decimal literals into extended floats.
//!
//! The parse is correctly rounded. A literal whose exact value is not
//! representable in the target format loses its last mantissa bit.

use std::cmp::Ordering;

use num_bigint::BigUint;

use crate::error::{Error, Result};
use crate::format::FloatFormat;
use crate::scalar::XScalar;

/// A validated decimal numeral `±digits · 10^exp10`.
#[derive(Debug, Clone, PartialEq)]
pub struct Decimal {
    pub negative: bool,
    pub digits: BigUint,
    pub exp10: i64,
}

impl Decimal {
    pub fn parse(text: &str) -> Result<Self> {
        let err = || Error::Parse(text.to_string());
        let s = text.trim();
        let (negative, rest) = match s.as_bytes().first() {
            Some(b'-') => (true, &s[1..]),
            Some(b'+') => (false, &s[1..]),
            _ => (false, s),
        };
        let (mantissa, exponent) = match rest.find(['e', 'E']) {
            Some(i) => (&rest[..i], Some(&rest[i + 1..])),
            None => (rest, None),
        };
        let (int_part, frac_part) = match mantissa.find('.') {
            Some(i) => (&mantissa[..i], &mantissa[i + 1..]),
            None => (mantissa, ""),
        };
        let all_digits = |p: &str| p.bytes().all(|b| b.is_ascii_digit());
        if int_part.len() + frac_part.len() == 0 || !all_digits(int_part) || !all_digits(frac_part)
        {
            return Err(err());
        }
        let mut exp10: i64 = match exponent {
            Some(e) => {
                let digits = e.strip_prefix(['+', '-']).unwrap_or(e);
                if digits.is_empty() || !all_digits(digits) {
                    return Err(err());
                }
                // Saturate absurd exponents; the value is then 0 or infinite anyway.
                e.parse::<i64>()
                    .unwrap_or(if e.starts_with('-') { -1 << 40 } else { 1 << 40 })
                    .clamp(-(1 << 40), 1 << 40)
            }
            None => 0,
        };
        exp10 -= frac_part.len() as i64;
        let joined: String = [int_part, frac_part].concat();
        let digits = BigUint::parse_bytes(joined.as_bytes(), 10).unwrap_or_default();
        Ok(Decimal {
            negative,
            digits,
            exp10,
        })
    }

    fn is_zero(&self) -> bool {
        self.digits == BigUint::ZERO
    }

    /// Compares `|self|` with the finite, nonzero `|v|` exactly.
    fn cmp_abs(&self, v: f64) -> Ordering {
        let (m, k) = decompose(v.abs());
        let mut lhs = self.digits.clone();
        let mut rhs = BigUint::from(m);
        if self.exp10 >= 0 {
            lhs *= BigUint::from(10u32).pow(self.exp10 as u32);
        } else {
            rhs *= BigUint::from(10u32).pow((-self.exp10) as u32);
        }
        if k >= 0 {
            rhs <<= k as usize;
        } else {
            lhs <<= (-k) as usize;
        }
        lhs.cmp(&rhs)
    }
}

/// `v = m · 2^k` with integral `m`, for finite positive `v`.
fn decompose(v: f64) -> (u64, i64) {
    let bits = v.to_bits();
    let biased = ((bits >> 52) & 0x7ff) as i64;
    let mant = bits & ((1u64 << 52) - 1);
    if biased == 0 {
        (mant, -1074)
    } else {
        (mant | (1u64 << 52), biased - 1075)
    }
}

/// Correctly rounded conversion of a validated numeral into `format`.
fn round_decimal(format: FloatFormat, text: &str, dec: &Decimal) -> f64 {
    let clean = text.trim();
    match format {
        FloatFormat::Binary64 => clean.parse::<f64>().unwrap_or(f64::NAN),
        FloatFormat::Binary32 => clean.parse::<f32>().map(|v| v as f64).unwrap_or(f64::NAN),
        FloatFormat::Binary16 | FloatFormat::BFloat16 => {
            // Going through binary64 double-rounds only when the binary64
            // value lands exactly on a midpoint of the narrow format.
            let v64 = clean.parse::<f64>().unwrap_or(f64::NAN);
            let r = format.round(v64);
            if !v64.is_finite() || v64 == r || !r.is_finite() || dec.is_zero() {
                return r;
            }
            // v64 lies strictly between two neighbors spaced by its own ulp.
            let ulp = format.ulp(v64);
            let other = if v64 > r { r + ulp } else { r - ulp };
            let mid = (r + other) * 0.5;
            if v64 != mid {
                return r;
            }
            match dec.cmp_abs(mid) {
                Ordering::Equal => r,
                ord => {
                    let away_from_zero = ord == Ordering::Greater;
                    let (lo, hi) = if r.abs() < other.abs() { (r, other) } else { (other, r) };
                    if away_from_zero {
                        hi
                    } else {
                        lo
                    }
                }
            }
        }
    }
}

pub fn from_decimal(text: &str) -> Result<XScalar> {
    from_decimal_in(FloatFormat::Binary64, text)
}

pub fn from_decimal_in(format: FloatFormat, text: &str) -> Result<XScalar> {
    let dec = Decimal::parse(text)?;
    let value = round_decimal(format, text, &dec);
    let p = format.mantissa_bits() as i64;
    let bits = if !value.is_finite() || value == 0.0 {
        0
    } else if dec.cmp_abs(value) == Ordering::Equal {
        p
    } else {
        p - 1
    };
    Ok(XScalar::normalized(format, value, bits))
}
