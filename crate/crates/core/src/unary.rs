//! Differentiable unary functions and their condition numbers
//! `C_f(x) = |x f'(x) / f(x)|`.
//!
//! An argument with `s` exact bits yields `s - ceil(log2 max(C_f(x), 1)) - 1`
//! exact bits; the extra bit covers the math library's own rounding, which
//! is only faithful, not correct.

use crate::format::{ceil_log2, two_sum};
use crate::scalar::XScalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum UnaryFn {
    Sin,
    Cos,
    Tan,
    Asin,
    Acos,
    Atan,
    Ln,
    Exp,
    Sqrt,
    Recip,
    PowInt(i32),
    Scale(f64),
    AddConst(f64),
    Sigmoid,
    Tanh,
}

impl UnaryFn {
    pub fn name(&self) -> String {
        match self {
            UnaryFn::Sin => "sin".into(),
            UnaryFn::Cos => "cos".into(),
            UnaryFn::Tan => "tan".into(),
            UnaryFn::Asin => "asin".into(),
            UnaryFn::Acos => "acos".into(),
            UnaryFn::Atan => "atan".into(),
            UnaryFn::Ln => "ln".into(),
            UnaryFn::Exp => "exp".into(),
            UnaryFn::Sqrt => "sqrt".into(),
            UnaryFn::Recip => "recip".into(),
            UnaryFn::PowInt(n) => format!("pow_int({n})"),
            UnaryFn::Scale(a) => format!("scale({a})"),
            UnaryFn::AddConst(a) => format!("add_const({a})"),
            UnaryFn::Sigmoid => "sigmoid".into(),
            UnaryFn::Tanh => "tanh".into(),
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            UnaryFn::Sin => x.sin(),
            UnaryFn::Cos => x.cos(),
            UnaryFn::Tan => x.tan(),
            UnaryFn::Asin => x.asin(),
            UnaryFn::Acos => x.acos(),
            UnaryFn::Atan => x.atan(),
            UnaryFn::Ln => x.ln(),
            UnaryFn::Exp => x.exp(),
            UnaryFn::Sqrt => x.sqrt(),
            UnaryFn::Recip => 1.0 / x,
            UnaryFn::PowInt(n) => x.powi(n),
            UnaryFn::Scale(a) => a * x,
            UnaryFn::AddConst(a) => x + a,
            UnaryFn::Sigmoid => sigmoid(x),
            UnaryFn::Tanh => x.tanh(),
        }
    }

    /// Derivative, used by the gradient tape and the finite-difference checks.
    pub fn derivative(&self, x: f64) -> f64 {
        match *self {
            UnaryFn::Sin => x.cos(),
            UnaryFn::Cos => -x.sin(),
            UnaryFn::Tan => 1.0 / (x.cos() * x.cos()),
            UnaryFn::Asin => 1.0 / (1.0 - x * x).sqrt(),
            UnaryFn::Acos => -1.0 / (1.0 - x * x).sqrt(),
            UnaryFn::Atan => 1.0 / (1.0 + x * x),
            UnaryFn::Ln => 1.0 / x,
            UnaryFn::Exp => x.exp(),
            UnaryFn::Sqrt => 0.5 / x.sqrt(),
            UnaryFn::Recip => -1.0 / (x * x),
            UnaryFn::PowInt(n) => n as f64 * x.powi(n - 1),
            UnaryFn::Scale(a) => a,
            UnaryFn::AddConst(_) => 1.0,
            UnaryFn::Sigmoid => {
                let s = sigmoid(x);
                s * (1.0 - s)
            }
            UnaryFn::Tanh => {
                let t = x.tanh();
                1.0 - t * t
            }
        }
    }

    /// `|x f'(x) / f(x)|`, with analytic limits at removable singularities.
    /// Infinite or NaN at poles.
    pub fn condition_number(&self, x: f64) -> f64 {
        match *self {
            UnaryFn::Sin => {
                if x == 0.0 {
                    1.0
                } else {
                    (x * x.cos() / x.sin()).abs()
                }
            }
            UnaryFn::Cos => (x * x.tan()).abs(),
            UnaryFn::Tan => {
                if x == 0.0 {
                    1.0
                } else {
                    (x / (x.sin() * x.cos())).abs()
                }
            }
            UnaryFn::Asin => {
                if x == 0.0 {
                    1.0
                } else {
                    (x / ((1.0 - x * x).sqrt() * x.asin())).abs()
                }
            }
            UnaryFn::Acos => (x / ((1.0 - x * x).sqrt() * x.acos())).abs(),
            UnaryFn::Atan => {
                if x == 0.0 {
                    1.0
                } else {
                    (x / ((1.0 + x * x) * x.atan())).abs()
                }
            }
            UnaryFn::Ln => (1.0 / x.ln()).abs(),
            UnaryFn::Exp => x.abs(),
            UnaryFn::Sqrt => 0.5,
            UnaryFn::Recip | UnaryFn::Scale(_) => 1.0,
            UnaryFn::PowInt(n) => (n as f64).abs(),
            UnaryFn::AddConst(a) => (x / (x + a)).abs(),
            UnaryFn::Sigmoid => (x * (1.0 - sigmoid(x))).abs(),
            UnaryFn::Tanh => {
                if x == 0.0 {
                    1.0
                } else {
                    let t = x.tanh();
                    (x * (1.0 - t * t) / t).abs()
                }
            }
        }
    }

    /// Whether the result is representable without rounding, for the
    /// functions where that can be checked cheaply.
    fn is_exact_result(&self, x: f64, r: f64) -> bool {
        match *self {
            UnaryFn::Scale(a) => {
                let p = a * x;
                p == r && a.mul_add(x, -p) == 0.0
            }
            UnaryFn::AddConst(a) => {
                let (s, err) = two_sum(x, a);
                s == r && err == 0.0
            }
            _ => false,
        }
    }

    pub fn apply(&self, x: &XScalar) -> XScalar {
        apply_unary(self, x)
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Bits lost to the condition number: `ceil(log2 max(C, 1))`, `None` at poles.
pub fn condition_loss(c: f64) -> Option<i64> {
    if !c.is_finite() {
        None
    } else if c <= 1.0 {
        Some(0)
    } else {
        Some(ceil_log2(c) as i64)
    }
}

pub fn apply_unary(f: &UnaryFn, x: &XScalar) -> XScalar {
    let fmt = x.format();
    let v = x.value();
    let raw = f.eval(v);
    let r = fmt.round(raw);
    if !v.is_finite() || !r.is_finite() || r == 0.0 {
        return XScalar::normalized(fmt, r, 0);
    }
    let Some(loss) = condition_loss(f.condition_number(v)) else {
        return XScalar::normalized(fmt, r, 0);
    };
    let rounding = if raw == r && f.is_exact_result(v, r) { 0 } else { 1 };
    XScalar::normalized(fmt, r, x.exact_bits() as i64 - loss - rounding)
}
