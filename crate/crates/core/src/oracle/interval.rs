//! Outward-rounded interval arithmetic.
//!
//! Basic operations use error-free transformations to decide whether a
//! bound was rounded and step one ulp outward only when it was, so exact
//! operations keep point intervals. Library functions are not correctly
//! rounded and get a fixed padding instead.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use serde::{Deserialize, Serialize};

use crate::array::BinaryOp;
use crate::format::two_sum;
use crate::scalar::{RoundMode, XScalar};
use crate::unary::UnaryFn;

/// Ulps added on each side of a library-function result.
pub const LIBM_PAD: u32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

fn lower(s: f64, err: f64) -> f64 {
    if err < 0.0 {
        s.next_down()
    } else {
        s
    }
}

fn upper(s: f64, err: f64) -> f64 {
    if err > 0.0 {
        s.next_up()
    } else {
        s
    }
}

fn pad_down(mut v: f64, ulps: u32) -> f64 {
    for _ in 0..ulps {
        v = v.next_down();
    }
    v
}

fn pad_up(mut v: f64, ulps: u32) -> f64 {
    for _ in 0..ulps {
        v = v.next_up();
    }
    v
}

impl Interval {
    pub const ENTIRE: Interval = Interval {
        lo: f64::NEG_INFINITY,
        hi: f64::INFINITY,
    };

    /// `[lo, hi]`; anything malformed (NaN bound, `lo > hi`) becomes the
    /// unbounded marker.
    pub fn new(lo: f64, hi: f64) -> Self {
        if lo.is_nan() || hi.is_nan() || lo > hi {
            Self::ENTIRE
        } else {
            Interval { lo, hi }
        }
    }

    pub fn point(v: f64) -> Self {
        Self::new(v, v)
    }

    /// `[v − Δ, v + Δ]` for the scalar's inaccuracy bound, rounded outward.
    pub fn from_xscalar(x: &XScalar) -> Self {
        let (v, d) = (x.value(), x.delta());
        if !v.is_finite() || !d.is_finite() {
            return Self::ENTIRE;
        }
        let (lo, el) = two_sum(v, -d);
        let (hi, eh) = two_sum(v, d);
        Self::new(lower(lo, el), upper(hi, eh))
    }

    pub fn is_unbounded(&self) -> bool {
        !(self.lo.is_finite() && self.hi.is_finite())
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn half_width(&self) -> f64 {
        self.width() / 2.0
    }

    pub fn contains(&self, v: f64) -> bool {
        self.lo <= v && v <= self.hi
    }

    pub fn contains_zero(&self) -> bool {
        self.contains(0.0)
    }

    pub fn neg(&self) -> Self {
        Self::new(-self.hi, -self.lo)
    }

    pub fn add(&self, o: &Interval) -> Self {
        let (l, el) = two_sum(self.lo, o.lo);
        let (h, eh) = two_sum(self.hi, o.hi);
        Self::new(lower(l, el), upper(h, eh))
    }

    pub fn sub(&self, o: &Interval) -> Self {
        self.add(&o.neg())
    }

    pub fn mul(&self, o: &Interval) -> Self {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for a in [self.lo, self.hi] {
            for b in [o.lo, o.hi] {
                let p = a * b;
                if p.is_nan() {
                    // 0 · ∞ from an unbounded operand.
                    return Self::ENTIRE;
                }
                let err = if p.is_finite() { a.mul_add(b, -p) } else { 0.0 };
                lo = lo.min(lower(p, err));
                hi = hi.max(upper(p, err));
            }
        }
        Self::new(lo, hi)
    }

    /// Division; a divisor containing zero gives the unbounded marker.
    pub fn div(&self, o: &Interval) -> Self {
        if o.contains_zero() {
            return Self::ENTIRE;
        }
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for a in [self.lo, self.hi] {
            for b in [o.lo, o.hi] {
                let q = a / b;
                if q.is_nan() {
                    return Self::ENTIRE;
                }
                // a/b − q has the sign of (a − q·b)/b.
                let err = if q.is_finite() && b.is_finite() {
                    (-q).mul_add(b, a) * b.signum()
                } else {
                    0.0
                };
                lo = lo.min(lower(q, err));
                hi = hi.max(upper(q, err));
            }
        }
        Self::new(lo, hi)
    }

    pub fn min(&self, o: &Interval) -> Self {
        Self::new(self.lo.min(o.lo), self.hi.min(o.hi))
    }

    pub fn max(&self, o: &Interval) -> Self {
        Self::new(self.lo.max(o.lo), self.hi.max(o.hi))
    }

    pub fn binary(&self, op: BinaryOp, o: &Interval) -> Self {
        match op {
            BinaryOp::Add => self.add(o),
            BinaryOp::Sub => self.sub(o),
            BinaryOp::Mul => self.mul(o),
            BinaryOp::Div => self.div(o),
            BinaryOp::Min => self.min(o),
            BinaryOp::Max => self.max(o),
        }
    }

    pub fn round(&self, mode: RoundMode) -> Self {
        Self::new(mode.apply(self.lo), mode.apply(self.hi))
    }

    fn increasing(&self, f: impl Fn(f64) -> f64, pad: u32) -> Self {
        Self::new(pad_down(f(self.lo), pad), pad_up(f(self.hi), pad))
    }

    fn decreasing(&self, f: impl Fn(f64) -> f64, pad: u32) -> Self {
        Self::new(pad_down(f(self.hi), pad), pad_up(f(self.lo), pad))
    }

    /// Entire interval when the input leaves `[dlo, dhi]`.
    fn within(&self, dlo: f64, dhi: f64) -> bool {
        self.lo >= dlo && self.hi <= dhi
    }

    pub fn unary(&self, f: &UnaryFn) -> Self {
        if self.is_unbounded() && !matches!(f, UnaryFn::Scale(_) | UnaryFn::AddConst(_)) {
            return Self::ENTIRE;
        }
        match *f {
            UnaryFn::Exp => self.increasing(f64::exp, LIBM_PAD),
            UnaryFn::Ln if self.lo > 0.0 => self.increasing(f64::ln, LIBM_PAD),
            UnaryFn::Sqrt if self.lo >= 0.0 => self.increasing(f64::sqrt, 1),
            UnaryFn::Atan => self.increasing(f64::atan, LIBM_PAD),
            UnaryFn::Tanh => self.increasing(f64::tanh, LIBM_PAD).clamp(-1.0, 1.0),
            UnaryFn::Sigmoid => {
                Self::new(sigmoid_enclosure(self.lo).lo, sigmoid_enclosure(self.hi).hi)
                    .clamp(0.0, 1.0)
            }
            UnaryFn::Asin if self.within(-1.0, 1.0) => self.increasing(f64::asin, LIBM_PAD),
            UnaryFn::Acos if self.within(-1.0, 1.0) => self.decreasing(f64::acos, LIBM_PAD),
            UnaryFn::Sin => trig(self, 0.0),
            UnaryFn::Cos => trig(self, FRAC_PI_2),
            UnaryFn::Tan => {
                if self.width() >= PI || straddles(self, FRAC_PI_2, PI) {
                    Self::ENTIRE
                } else {
                    self.increasing(f64::tan, LIBM_PAD)
                }
            }
            UnaryFn::Recip => Self::point(1.0).div(self),
            UnaryFn::Scale(c) => self.mul(&Self::point(c)),
            UnaryFn::AddConst(c) => self.add(&Self::point(c)),
            UnaryFn::PowInt(n) => self.powi(n),
            _ => Self::ENTIRE,
        }
    }

    /// Intersection with a known range of the function.
    fn clamp(&self, lo: f64, hi: f64) -> Self {
        Self::new(self.lo.max(lo), self.hi.min(hi))
    }

    /// Integer power by repeated squaring in interval arithmetic, matching
    /// the multiplication chain `powi` evaluates.
    fn powi(&self, n: i32) -> Self {
        if n == 0 {
            return Self::point(1.0);
        }
        if n < 0 {
            return Self::point(1.0).div(&self.powi(-n));
        }
        let base = if n % 2 == 0 && self.contains_zero() {
            Self::new(0.0, self.lo.abs().max(self.hi.abs()))
        } else {
            *self
        };
        let mut acc: Option<Interval> = None;
        let mut sq = base;
        let mut k = n.unsigned_abs();
        loop {
            if k & 1 == 1 {
                acc = Some(match acc {
                    None => sq,
                    Some(a) => a.mul(&sq),
                });
            }
            k >>= 1;
            if k == 0 {
                break;
            }
            sq = sq.square();
        }
        acc.unwrap_or(Self::point(1.0))
    }

    /// `x²`, which unlike `x·x` never dips below zero.
    fn square(&self) -> Self {
        let m = self.mul(self);
        if self.contains_zero() {
            Self::new(0.0, m.hi)
        } else {
            Self::new(m.lo.max(0.0), m.hi)
        }
    }
}

/// Encloses `1/(1+e^-x)` at a point. Far left, where `e^-x` would overflow,
/// `e^x/(1+e^x)` is used; there `1 + e^x` is 1 and the repeated `e^x`
/// costs nothing.
fn sigmoid_enclosure(x: f64) -> Interval {
    let one = Interval::point(1.0);
    let half = Interval::point(0.5);
    let via_exp = if x >= -700.0 {
        let e = Interval::point(-x).increasing(f64::exp, LIBM_PAD);
        one.div(&one.add(&e))
    } else {
        let e = Interval::point(x).increasing(f64::exp, LIBM_PAD);
        e.div(&one.add(&e))
    };
    // σ(x) = (1 + tanh(x/2))/2 is much tighter near zero.
    let t = Interval::point(x).mul(&half).increasing(f64::tanh, LIBM_PAD);
    let via_tanh = one.add(&t).mul(&half);
    Interval::new(via_exp.lo.max(via_tanh.lo), via_exp.hi.min(via_tanh.hi))
}

/// Whether `[lo, hi]` contains or nearly touches a point `c + kπ·step`.
fn straddles(x: &Interval, c: f64, period: f64) -> bool {
    let slack = 1e-12 * (1.0 + x.lo.abs().max(x.hi.abs()));
    let k_lo = ((x.lo - slack - c) / period).ceil();
    let k_hi = ((x.hi + slack - c) / period).floor();
    k_lo <= k_hi
}

/// `sin(x + shift)`: endpoints plus any enclosed extremum.
fn trig(x: &Interval, shift: f64) -> Interval {
    if x.width() >= TAU {
        return Interval::new(-1.0, 1.0);
    }
    let f = |v: f64| if shift == 0.0 { v.sin() } else { v.cos() };
    let (a, b) = (f(x.lo), f(x.hi));
    let mut lo = pad_down(a.min(b), LIBM_PAD);
    let mut hi = pad_up(a.max(b), LIBM_PAD);
    // Maxima of sin(v + shift) sit at v = π/2 − shift + 2kπ.
    if straddles(x, FRAC_PI_2 - shift, TAU) {
        hi = 1.0;
    }
    if straddles(x, -FRAC_PI_2 - shift, TAU) {
        lo = -1.0;
    }
    Interval::new(lo.max(-1.0), hi.min(1.0))
}
