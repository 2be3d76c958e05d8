//! Roots of `a·x² + b·x + c` by the textbook formula and by the
//! cancellation-free one.

use preciseum_core::{apply_unary, from_decimal, Style, UnaryFn, XScalar};
use serde::{Deserialize, Serialize};

use crate::report::{DemoReport, Row};
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Naive,
    Stable,
}

pub struct Roots {
    pub x1: XScalar,
    pub x2: XScalar,
}

/// Naive: `(−b ∓ √D)/(2a)`. Stable: `x₁ = (−b − sgn(b)√D)/(2a)`,
/// `x₂ = c/(a·x₁)`.
pub fn solve(a: XScalar, b: XScalar, c: XScalar, method: Method) -> Roots {
    let two = XScalar::from_exact(2.0);
    let four = XScalar::from_exact(4.0);
    let disc = b * b - four * a * c;
    let root = apply_unary(&UnaryFn::Sqrt, &disc);
    let two_a = two * a;
    match method {
        Method::Naive => Roots {
            x1: (-b - root) / two_a,
            x2: (-b + root) / two_a,
        },
        Method::Stable => {
            let signed = if b.value() < 0.0 { -root } else { root };
            let x1 = (-b - signed) / two_a;
            Roots {
                x1,
                x2: c / (a * x1),
            }
        }
    }
}

pub fn cmd_quadratic(a: &str, b: &str, c: &str, method: Method) -> Result<DemoReport, CliError> {
    let parse = |name: &str, s: &str| {
        from_decimal(s).map_err(|e| CliError::Usage(format!("coefficient {name}: {e}")))
    };
    let (xa, xb, xc) = (parse("a", a)?, parse("b", b)?, parse("c", c)?);
    if xa.value() == 0.0 {
        return Err(CliError::Usage("coefficient a must be nonzero".into()));
    }
    let roots = solve(xa, xb, xc, method);
    let mut report = DemoReport::new("quadratic")
        .param("a", a)
        .param("b", b)
        .param("c", c)
        .param("method", serde_json::to_value(method).expect("enum"));
    for (label, x) in [("x1", roots.x1), ("x2", roots.x2)] {
        report.row(
            Row::new(label)
                .rendered(preciseum_core::display::format(&x, Style::Fixed(15)))
                .rendered(preciseum_core::display::format(&x, Style::Scientific(16)))
                .bits(x.exact_bits()),
        );
    }
    Ok(report)
}
