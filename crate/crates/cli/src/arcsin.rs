//! `asin` of a decimal input known to a given number of digits.

use std::f64::consts::LOG10_2;

use preciseum_core::display::format;
use preciseum_core::{apply_unary, exact_decimal_digits, from_decimal, Style, UnaryFn, XScalar};

use crate::report::{DemoReport, Row};
use crate::CliError;

/// Bits carrying `digits` decimal digits: `ceil(digits / log10 2)`.
pub fn bits_for_digits(digits: u32) -> u32 {
    (digits as f64 / LOG10_2).ceil() as u32
}

pub fn arcsin(x: &str, digits: u32) -> Result<(XScalar, XScalar), CliError> {
    let parsed = from_decimal(x).map_err(|e| CliError::Usage(e.to_string()))?;
    if parsed.value().is_nan() || parsed.value().abs() > 1.0 {
        return Err(CliError::Usage(format!("asin needs |x| <= 1, got {x}")));
    }
    if digits == 0 {
        return Err(CliError::Usage("digits must be at least 1".into()));
    }
    let bits = bits_for_digits(digits).min(parsed.exact_bits());
    let input = parsed.with_exact_bits(bits as i64);
    Ok((input, apply_unary(&UnaryFn::Asin, &input)))
}

pub fn cmd_arcsin(x: &str, digits: u32) -> Result<DemoReport, CliError> {
    let (input, out) = arcsin(x, digits)?;
    let mut report = DemoReport::new("arcsin").param("x", x).param("digits", digits);
    for (label, v) in [("input", input), ("asin", out)] {
        report.row(
            Row::new(label)
                .rendered(format(&v, Style::Fixed(3)))
                .rendered(format(&v, Style::Scientific(16)))
                .bits(v.exact_bits())
                .metric("exact_digits", exact_decimal_digits(&v) as f64),
        );
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn six_and_three_digit_inputs() {
        let r = cmd_arcsin("0.999999", 6).unwrap();
        assert_eq!(r.find("asin").unwrap().rendered[0], "1.56?");
        let r = cmd_arcsin("0.999", 3).unwrap();
        assert_eq!(r.find("asin").unwrap().rendered[0], "1.???");
    }

    #[test]
    fn well_conditioned_input_keeps_its_digits() {
        let (_, out) = arcsin("0.5", 15).unwrap();
        assert!(exact_decimal_digits(&out) >= 13, "{out:?}");
    }

    #[test]
    fn domain_is_checked() {
        assert!(matches!(arcsin("1.5", 6), Err(CliError::Usage(_))));
        assert!(matches!(arcsin("0.5", 0), Err(CliError::Usage(_))));
    }
}
