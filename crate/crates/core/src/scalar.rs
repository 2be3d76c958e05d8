//! Extended floating-point scalars: a value plus the number of its leading
//! mantissa bits that are known to be exact.
//!
//! A scalar with `exact_bits = s` and binary exponent `e = floor(log2 |v|)`
//! has absolute inaccuracy at most `2^(e - s)`. A scalar with every mantissa
//! bit exact is treated as the exact real number it stores; the rounding of
//! the operation that produced it is already accounted for when the bit
//! count was computed. Only inaccuracy that is certainly present is counted,
//! so the inexact ("black") tail of the mantissa never carries information.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::format::{floor_log2, pow2, sum_upward, two_sum, FloatFormat};

/// Absolute inaccuracy of a scalar as a power of two.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Inaccuracy {
    Exact,
    /// Absolute error bound `2^k`.
    Magnitude(i32),
    /// NaN or infinity: nothing is known.
    Unbounded,
}

impl Inaccuracy {
    pub fn delta(self) -> f64 {
        match self {
            Inaccuracy::Exact => 0.0,
            Inaccuracy::Magnitude(k) => pow2(k),
            Inaccuracy::Unbounded => f64::INFINITY,
        }
    }
}

impl PartialOrd for Inaccuracy {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Inaccuracy {
    fn cmp(&self, other: &Self) -> Ordering {
        use Inaccuracy::*;
        match (self, other) {
            (Exact, Exact) | (Unbounded, Unbounded) => Ordering::Equal,
            (Exact, _) | (_, Unbounded) => Ordering::Less,
            (_, Exact) | (Unbounded, _) => Ordering::Greater,
            (Magnitude(a), Magnitude(b)) => a.cmp(b),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RoundMode {
    Floor,
    Ceil,
    Nearest,
    Trunc,
}

impl RoundMode {
    pub fn apply(self, v: f64) -> f64 {
        match self {
            RoundMode::Floor => v.floor(),
            RoundMode::Ceil => v.ceil(),
            RoundMode::Nearest => v.round_ties_even(),
            RoundMode::Trunc => v.trunc(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Comparison {
    Equal,
    Unequal,
    Indistinguishable,
}

#[derive(Clone, Copy, PartialEq)]
pub struct XScalar {
    value: f64,
    exact_bits: u8,
    format: FloatFormat,
}

impl XScalar {
    /// Builds a scalar, rounding `value` into `format`, clamping `bits` and
    /// enforcing the special-value rules. Below the normal range an inexact
    /// count is capped so that `Δ` stays at least one subnormal spacing.
    pub(crate) fn normalized(format: FloatFormat, value: f64, bits: i64) -> Self {
        let value = format.round(value);
        let max = format.mantissa_bits() as i64;
        let exact_bits = if !value.is_finite() {
            0
        } else if value == 0.0 || bits >= max {
            max
        } else {
            let e = floor_log2(value) as i64;
            let tiny = (format.min_exponent() - (max as i32 - 1)) as i64;
            bits.clamp(0, (e - tiny).clamp(0, max - 1))
        };
        XScalar {
            value,
            exact_bits: exact_bits as u8,
            format,
        }
    }

    pub fn from_exact(value: f64) -> Self {
        Self::from_exact_in(FloatFormat::Binary64, value)
    }

    /// A value taken as exact. If it is not representable in `format` the
    /// rounded value loses its last bit, as for decimal conversion.
    pub fn from_exact_in(format: FloatFormat, value: f64) -> Self {
        let p = format.mantissa_bits() as i64;
        let bits = if format.is_representable(value) { p } else { p - 1 };
        Self::normalized(format, value, bits)
    }

    pub fn with_bits(value: f64, bits: u32) -> Result<Self> {
        Self::with_bits_in(FloatFormat::Binary64, value, bits)
    }

    pub fn with_bits_in(format: FloatFormat, value: f64, bits: u32) -> Result<Self> {
        let max = format.mantissa_bits();
        if bits > max {
            return Err(Error::BitsOutOfRange { bits, max, format });
        }
        Ok(Self::normalized(format, value, bits as i64))
    }

    pub fn nan(format: FloatFormat) -> Self {
        Self::normalized(format, f64::NAN, 0)
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn exact_bits(&self) -> u32 {
        self.exact_bits as u32
    }

    pub fn format(&self) -> FloatFormat {
        self.format
    }

    pub fn mantissa_bits(&self) -> u32 {
        self.format.mantissa_bits()
    }

    pub fn is_exact(&self) -> bool {
        self.value == 0.0 || (self.value.is_finite() && self.exact_bits() == self.mantissa_bits())
    }

    /// Binary exponent `floor(log2 |value|)`; `None` for zero, NaN and infinities.
    pub fn exponent(&self) -> Option<i32> {
        (self.value.is_finite() && self.value != 0.0).then(|| floor_log2(self.value))
    }

    pub fn inaccuracy(&self) -> Inaccuracy {
        if !self.value.is_finite() {
            Inaccuracy::Unbounded
        } else if self.is_exact() {
            Inaccuracy::Exact
        } else {
            Inaccuracy::Magnitude(floor_log2(self.value) - self.exact_bits as i32)
        }
    }

    /// Absolute inaccuracy bound as a number.
    pub fn delta(&self) -> f64 {
        self.inaccuracy().delta()
    }

    /// `Δ / |value|`, zero for exact values.
    pub(crate) fn relative_delta(&self) -> f64 {
        if !self.value.is_finite() {
            f64::INFINITY
        } else if self.is_exact() {
            0.0
        } else {
            self.delta() / self.value.abs()
        }
    }

    /// Inaccuracy implied by the bit count alone: like [`delta`](Self::delta)
    /// but a nonzero full-bit value still carries half an ulp.
    pub fn implied_delta(&self) -> f64 {
        if self.value.is_finite() && self.value != 0.0 && self.is_exact() {
            self.format.half_ulp(self.value)
        } else {
            self.delta()
        }
    }

    /// Same value with a different bit count (clamped into range).
    pub fn with_exact_bits(&self, bits: i64) -> Self {
        Self::normalized(self.format, self.value, bits)
    }

    /// Converts an absolute inaccuracy of `value` into an exact-bit count,
    /// rounding the inaccuracy down to a power of two.
    pub fn from_delta(format: FloatFormat, value: f64, delta: f64) -> Self {
        let value = format.round(value);
        let p = format.mantissa_bits() as i64;
        let bits = if !value.is_finite() || value == 0.0 || delta == 0.0 {
            p
        } else if !delta.is_finite() {
            0
        } else {
            floor_log2(value) as i64 - floor_log2(delta) as i64
        };
        Self::normalized(format, value, bits)
    }

    fn check_format(&self, other: &XScalar) {
        assert!(
            self.format == other.format,
            "{}",
            Error::FormatMismatch(self.format, other.format)
        );
    }

    pub fn neg(&self) -> Self {
        XScalar {
            value: -self.value,
            ..*self
        }
    }

    pub fn abs(&self) -> Self {
        XScalar {
            value: self.value.abs(),
            ..*self
        }
    }

    /// Sum with inaccuracy `Δx + Δy` plus half an ulp of the result when the
    /// sum had to be rounded.
    ///
    /// # Panics
    /// If the operands have different formats.
    pub fn add(&self, other: &XScalar) -> Self {
        self.check_format(other);
        let fmt = self.format;
        let (s, err) = two_sum(self.value, other.value);
        let r = fmt.round(s);
        if !r.is_finite() || r == 0.0 {
            return Self::normalized(fmt, r, 0);
        }
        let rounding = if err == 0.0 && r == s {
            0.0
        } else {
            fmt.half_ulp(r)
        };
        let delta = sum_upward([self.delta(), other.delta(), rounding]);
        Self::from_delta(fmt, r, delta)
    }

    pub fn sub(&self, other: &XScalar) -> Self {
        self.add(&other.neg())
    }

    /// Product with inaccuracy `|y|Δx + |x|Δy + ΔxΔy` plus half an ulp when
    /// the product is not representable.
    pub fn mul(&self, other: &XScalar) -> Self {
        self.check_format(other);
        let fmt = self.format;
        let (x, y) = (self.value, other.value);
        let p = x * y;
        let r = fmt.round(p);
        if !r.is_finite() || r == 0.0 {
            return Self::normalized(fmt, r, 0);
        }
        let exact = r == p && x.mul_add(y, -p) == 0.0;
        let (dx, dy) = (self.delta(), other.delta());
        let delta = sum_upward([
            y.abs() * dx,
            x.abs() * dy,
            dx * dy,
            if exact { 0.0 } else { fmt.half_ulp(r) },
        ]);
        Self::from_delta(fmt, r, delta)
    }

    /// Quotient with inaccuracy `(|x|Δy + |y|Δx) / (|y|(|y| − Δy))`, unbounded
    /// once the divisor's interval reaches zero.
    pub fn div(&self, other: &XScalar) -> Self {
        self.check_format(other);
        let fmt = self.format;
        let (x, y) = (self.value, other.value);
        let q = x / y;
        let r = fmt.round(q);
        if !r.is_finite() || r == 0.0 {
            return Self::normalized(fmt, r, 0);
        }
        let exact = r == q && (-q).mul_add(y, x) == 0.0;
        let (dx, dy) = (self.delta(), other.delta());
        let rounding = if exact { 0.0 } else { fmt.half_ulp(r) };
        let propagated = if dx == 0.0 && dy == 0.0 {
            0.0
        } else if dy >= y.abs() {
            f64::INFINITY
        } else {
            sum_upward([x.abs() * dy, y.abs() * dx]) / (y.abs() * (y.abs() - dy))
        };
        Self::from_delta(fmt, r, sum_upward([propagated, rounding]))
    }

    pub fn min(&self, other: &XScalar) -> Self {
        self.min_max(other, true)
    }

    pub fn max(&self, other: &XScalar) -> Self {
        self.min_max(other, false)
    }

    /// The value is always one of the arguments' values; the precision comes
    /// from the winner only when the two inaccuracy intervals are disjoint.
    fn min_max(&self, other: &XScalar, min: bool) -> Self {
        self.check_format(other);
        match (self.value.is_nan(), other.value.is_nan()) {
            (true, true) => return Self::nan(self.format),
            (true, false) => return *other,
            (false, true) => return *self,
            _ => {}
        }
        let (winner, loser) = match (self.value < other.value) == min {
            true if self.value != other.value => (self, other),
            _ => (other, self),
        };
        let (dw, dl) = (winner.delta(), loser.delta());
        let disjoint = if winner.value < loser.value {
            winner.value + dw < loser.value - dl
        } else {
            loser.value + dl < winner.value - dw
        };
        if disjoint {
            *winner
        } else {
            Self::from_delta(winner.format, winner.value, dw.max(dl))
        }
    }

    /// Rounds to an integral value. The result is fully exact when the first
    /// inexact bit lies strictly below the highest bit changed by rounding.
    pub fn round(&self, mode: RoundMode) -> Self {
        let fmt = self.format;
        if !self.value.is_finite() {
            return Self::normalized(fmt, self.value, 0);
        }
        let r = mode.apply(self.value);
        if r == self.value {
            return *self;
        }
        if r == 0.0 {
            return Self::normalized(fmt, r, 0);
        }
        let p_inexact = floor_log2(self.value) - self.exact_bits as i32;
        let p_changed = highest_differing_bit(self.value.abs(), r.abs());
        let bits = if p_inexact < p_changed {
            fmt.mantissa_bits() as i64
        } else {
            self.exact_bits as i64
        };
        Self::normalized(fmt, r, bits)
    }

    pub fn approx_eq(&self, other: &XScalar) -> Comparison {
        if self.value.is_nan() || other.value.is_nan() {
            return Comparison::Unequal;
        }
        if self.value.to_bits() == other.value.to_bits() && self.is_exact() && other.is_exact() {
            return Comparison::Equal;
        }
        let gap = (self.value - other.value).abs();
        if gap <= self.delta() + other.delta() {
            Comparison::Indistinguishable
        } else {
            Comparison::Unequal
        }
    }
}

/// Weight exponent of the highest bit at which two distinct nonnegative
/// finite values differ.
fn highest_differing_bit(a: f64, b: f64) -> i32 {
    debug_assert!(a != b);
    let top = [a, b]
        .iter()
        .filter(|v| **v != 0.0)
        .map(|v| floor_log2(*v))
        .max()
        .unwrap_or(0);
    let mut h = top;
    while h >= -1074 {
        let fa = crate::format::ldexp(a, -h).floor();
        let fb = crate::format::ldexp(b, -h).floor();
        if fa != fb {
            return h;
        }
        h -= 1;
    }
    -1075
}

impl fmt::Debug for XScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "XScalar({:e}, {} bits, {})",
            self.value, self.exact_bits, self.format
        )
    }
}

impl fmt::Display for XScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let digits = self.format.display_digits();
        f.write_str(&crate::display::format(
            self,
            crate::display::Style::Scientific(digits),
        ))
    }
}

macro_rules! binop {
    ($trait:ident, $method:ident, $impl:ident) => {
        impl std::ops::$trait for XScalar {
            type Output = XScalar;
            fn $method(self, rhs: XScalar) -> XScalar {
                XScalar::$impl(&self, &rhs)
            }
        }
        impl std::ops::$trait<&XScalar> for &XScalar {
            type Output = XScalar;
            fn $method(self, rhs: &XScalar) -> XScalar {
                XScalar::$impl(self, rhs)
            }
        }
    };
}

binop!(Add, add, add);
binop!(Sub, sub, sub);
binop!(Mul, mul, mul);
binop!(Div, div, div);

impl std::ops::Neg for XScalar {
    type Output = XScalar;
    fn neg(self) -> XScalar {
        XScalar::neg(&self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn wb(v: f64, bits: u32) -> XScalar {
        XScalar::with_bits(v, bits).unwrap()
    }

    #[test]
    fn from_exact_special_values() {
        let x = XScalar::from_exact(1.5);
        assert_eq!((x.value(), x.exact_bits()), (1.5, 53));
        let n = XScalar::from_exact(f64::NAN);
        assert!(n.value().is_nan());
        assert_eq!(n.exact_bits(), 0);
        assert_eq!(XScalar::from_exact(0.0).exact_bits(), 53);
        assert_eq!(XScalar::from_exact(-0.0).exact_bits(), 53);
    }

    #[test]
    fn from_exact_narrow_format_charges_conversion() {
        let x = XScalar::from_exact_in(FloatFormat::Binary32, 0.1);
        assert_eq!(x.value(), 0.1f32 as f64);
        assert_eq!(x.exact_bits(), 23);
        let y = XScalar::from_exact_in(FloatFormat::Binary16, 0.5);
        assert_eq!(y.exact_bits(), 11);
    }

    #[test]
    fn with_bits_rules() {
        let x = wb(0.999999, 20);
        assert_eq!((x.value(), x.exact_bits()), (0.999999, 20));
        assert_eq!(wb(f64::INFINITY, 40).exact_bits(), 0);
        assert_eq!(wb(0.0, 3).exact_bits(), 53);
        assert!(matches!(
            XScalar::with_bits(1.0, 54),
            Err(Error::BitsOutOfRange { bits: 54, max: 53, .. })
        ));
        assert!(XScalar::with_bits_in(FloatFormat::BFloat16, 1.0, 9).is_err());
    }

    #[test]
    fn inaccuracy_round_trips_with_bits() {
        let x = wb(6.0, 2);
        assert_eq!(x.inaccuracy(), Inaccuracy::Magnitude(0));
        assert_eq!(XScalar::from_exact(0.0).inaccuracy(), Inaccuracy::Exact);
        assert_eq!(XScalar::from_exact(3.0).inaccuracy(), Inaccuracy::Exact);
        assert_eq!(XScalar::from_exact(f64::NAN).inaccuracy(), Inaccuracy::Unbounded);
        for bits in 0..53 {
            let x = wb(-123.456, bits);
            let Inaccuracy::Magnitude(k) = x.inaccuracy() else {
                panic!()
            };
            assert_eq!((x.exponent().unwrap() - k) as u32, bits);
        }
    }

    #[test]
    fn add_exact_binary_values_only_rounds() {
        let s = XScalar::from_exact(0.1) + XScalar::from_exact(0.2);
        assert_eq!(s.value(), 0.1 + 0.2);
        assert_eq!(s.exact_bits(), 53);
    }

    #[test]
    fn add_zero_is_identity() {
        for x in [wb(3.25, 17), wb(-1e-9, 40), XScalar::from_exact(7.0)] {
            assert_eq!(x + XScalar::from_exact(0.0), x);
        }
    }

    #[test]
    fn add_cancellation() {
        let a = XScalar::from_exact(1.0 + pow2(-50));
        let b = XScalar::from_exact(-1.0);
        let s = a + b;
        assert_eq!((s.value(), s.exact_bits()), (pow2(-50), 53));
        let s40 = wb(1.0 + pow2(-50), 40) + wb(-1.0, 40);
        assert_eq!(s40.value(), pow2(-50));
        assert_eq!(s40.exact_bits(), 0);
    }

    #[test]
    fn sub_self_is_exact_zero() {
        let x = wb(2.5, 11);
        let d = x - x;
        assert_eq!((d.value(), d.exact_bits()), (0.0, 53));
    }

    #[test]
    fn sub_of_exact_decimal_images() {
        let d = XScalar::from_exact(0.3) - (XScalar::from_exact(0.1) + XScalar::from_exact(0.2));
        assert_eq!(d.value(), 0.3 - (0.1 + 0.2));
        assert!((d.value() + 5.551115123125783e-17).abs() < 1e-30);
        assert_eq!(d.exact_bits(), 53);
    }

    #[test]
    fn sub_cancellation_loses_about_twenty_bits() {
        let d = wb(1000.0, 30) - wb(999.999, 30);
        assert!((8..=12).contains(&d.exact_bits()), "{d:?}");
        assert_eq!(d.exact_bits(), 10);
    }

    #[test]
    fn mul_relative_errors_add() {
        // [5, 7]² = 36 ± 13, so 2 bits.
        let sq = wb(6.0, 2) * wb(6.0, 2);
        assert_eq!((sq.value(), sq.exact_bits()), (36.0, 2));
        for bits in [0, 1, 12, 40, 52] {
            let x = wb(1.2345, bits);
            assert_eq!((x * XScalar::from_exact(2.0)).exact_bits(), bits);
        }
        let z = XScalar::from_exact(0.0) * wb(1e300, 3);
        assert_eq!((z.value(), z.exact_bits()), (0.0, 53));
    }

    #[test]
    fn div_rules() {
        let x = wb(1.75, 30);
        let q = x / XScalar::from_exact(1.0);
        assert_eq!(q, x);
        let q = wb(1.0, 10) / wb(3.0, 10);
        assert_eq!(q.exact_bits(), 9);
        let inf = XScalar::from_exact(1.0) / XScalar::from_exact(0.0);
        assert_eq!(inf.value(), f64::INFINITY);
        assert_eq!(inf.exact_bits(), 0);
        let nan = XScalar::from_exact(0.0) / XScalar::from_exact(0.0);
        assert!(nan.value().is_nan());
    }

    #[test]
    fn min_max_overlap_takes_worse_precision() {
        let a = wb(1.0, 2);
        let b = wb(1.5, 1);
        let m = a.min(&b);
        assert_eq!((m.value(), m.exact_bits()), (1.0, 1));
        let m = XScalar::from_exact(1.0).min(&XScalar::from_exact(2.0));
        assert_eq!((m.value(), m.exact_bits()), (1.0, 53));
        let m = wb(100.0, 3).max(&wb(1.0, 53));
        assert_eq!((m.value(), m.exact_bits()), (100.0, 3));
    }

    #[test]
    fn min_max_equal_values_use_overlap_rule() {
        let m = wb(4.0, 10).max(&wb(4.0, 30));
        assert_eq!(m.exact_bits(), 10);
    }

    #[test]
    fn min_max_nan_follows_ieee() {
        let n = XScalar::nan(FloatFormat::Binary64);
        let x = wb(2.0, 9);
        assert_eq!(n.min(&x), x);
        assert_eq!(x.max(&n), x);
        assert!(n.max(&n).value().is_nan());
    }

    #[test]
    fn rounding_rules() {
        let z = wb(0.3, 5).round(RoundMode::Nearest);
        assert_eq!((z.value(), z.exact_bits()), (0.0, 53));
        let two = XScalar::from_exact(2.0).round(RoundMode::Floor);
        assert_eq!((two.value(), two.exact_bits()), (2.0, 53));
        let f = wb(2.7, 3).round(RoundMode::Floor);
        assert_eq!((f.value(), f.exact_bits()), (2.0, 53));
        // 2.1 = 10.000110..., the first changed bit sits at weight 2^-4.
        let g = wb(2.1, 3).round(RoundMode::Floor);
        assert_eq!((g.value(), g.exact_bits()), (2.0, 3));
        let inf = XScalar::from_exact(f64::INFINITY).round(RoundMode::Ceil);
        assert_eq!(inf.exact_bits(), 0);
    }

    #[test]
    fn highest_differing_bit_examples() {
        assert_eq!(highest_differing_bit(2.7, 2.0), -1);
        assert_eq!(highest_differing_bit(2.7, 3.0), 0);
        assert_eq!(highest_differing_bit(2.1, 2.0), -4);
        assert_eq!(highest_differing_bit(1e-300, 1.0), 0);
    }

    #[test]
    fn approx_eq_tri_state() {
        let one = XScalar::from_exact(1.0);
        assert_eq!(one.approx_eq(&one), Comparison::Equal);
        assert_eq!(
            one.approx_eq(&XScalar::from_exact(2.0)),
            Comparison::Unequal
        );
        let nan = XScalar::nan(FloatFormat::Binary64);
        assert_eq!(nan.approx_eq(&nan), Comparison::Unequal);
    }

    #[test]
    #[should_panic(expected = "format mismatch")]
    fn mixed_formats_panic() {
        let _ = XScalar::from_exact(1.0) + XScalar::from_exact_in(FloatFormat::Binary32, 1.0);
    }

    #[test]
    fn narrow_format_arithmetic_rounds_into_format() {
        let f = FloatFormat::Binary16;
        let a = XScalar::from_exact_in(f, 1.0);
        let b = XScalar::from_exact_in(f, pow2(-11));
        let s = a + b;
        assert_eq!(s.value(), 1.0);
        assert_eq!(s.exact_bits(), 11);
        let c = XScalar::from_exact_in(f, 3.0);
        let q = a / c;
        assert_eq!(q.value(), f.round(1.0 / 3.0));
        assert_eq!(q.exact_bits(), 11);
    }
}
