//! Rendering with unreliable digits replaced by `?`.
//!
//! A significant digit is masked when either
//! * its index is at least `floor(exact_bits · log10 2)`, the number of
//!   decimal digits the exact mantissa prefix can carry, or
//! * its decimal place value is at most `2Δ`, the full width of the
//!   inaccuracy interval.
//!
//! Sign, decimal point and exponent are never masked. Zero is exact and
//! never masked.

use std::f64::consts::LOG10_2;

use serde::{Deserialize, Serialize};

use crate::scalar::XScalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Style {
    /// `k` digits after the decimal point, capped so that no more than the
    /// format's display width of significant digits is printed.
    Fixed(usize),
    /// `k` significant digits, C-style exponent (`e+03`, `e-14`).
    Scientific(usize),
}

/// Decimal digits backed by `bits` exact mantissa bits.
pub fn reliable_digits(bits: u32) -> usize {
    (bits as f64 * LOG10_2 + 1e-9).floor() as usize
}

pub fn format(x: &XScalar, style: Style) -> String {
    let v = x.value();
    if v.is_nan() {
        return "NaN".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let (text, places) = match style {
        Style::Scientific(k) => render_scientific(v, k.max(1)),
        Style::Fixed(k) => render_fixed(v, k, x.format().display_digits()),
    };
    if v == 0.0 {
        return text;
    }
    let limit = reliable_digits(x.exact_bits());
    let delta = x.delta();
    let log_width = if delta > 0.0 {
        (2.0 * delta).log10()
    } else {
        f64::NEG_INFINITY
    };
    let mut out = String::with_capacity(text.len());
    let mut sig_index = 0usize;
    let mut seen_nonzero = false;
    let mut digit_no = 0usize;
    for ch in text.chars() {
        if !ch.is_ascii_digit() || digit_no >= places.len() {
            if ch == 'e' {
                // Everything after the mantissa is the exponent field.
                digit_no = usize::MAX;
            }
            out.push(ch);
            continue;
        }
        let place = places[digit_no];
        digit_no += 1;
        if ch != '0' {
            seen_nonzero = true;
        }
        let by_count = seen_nonzero && {
            let masked = sig_index >= limit;
            sig_index += 1;
            masked
        };
        let by_width = (place as f64) <= log_width + 1e-12;
        out.push(if by_count || by_width { '?' } else { ch });
    }
    out
}

/// Count of leading significant digits left unmasked in scientific style at
/// the format's full display width.
pub fn exact_decimal_digits(x: &XScalar) -> usize {
    let width = x.format().display_digits();
    if !x.value().is_finite() {
        return 0;
    }
    if x.value() == 0.0 {
        return width;
    }
    let text = format(x, Style::Scientific(width));
    let mantissa = text.split('e').next().unwrap_or("");
    mantissa
        .chars()
        .filter(|c| c.is_ascii_digit() || *c == '?')
        .take_while(|c| *c != '?')
        .count()
}

/// Mantissa digits plus the decimal exponent (as log10 place) of each digit.
fn render_scientific(v: f64, k: usize) -> (String, Vec<i32>) {
    let raw = format!("{:.*e}", k - 1, v);
    let (mantissa, exp) = raw.split_once('e').expect("scientific output has an exponent");
    let exp: i32 = exp.parse().expect("integral exponent");
    let places = (0..k as i32).map(|j| exp - j).collect();
    let sign = if exp < 0 { '-' } else { '+' };
    (format!("{mantissa}e{sign}{:02}", exp.abs()), places)
}

fn render_fixed(v: f64, k: usize, display_digits: usize) -> (String, Vec<i32>) {
    let int_digits = |s: &str| {
        let int_part = s.trim_start_matches('-').split('.').next().unwrap_or("");
        let trimmed = int_part.trim_start_matches('0');
        trimmed.len()
    };
    let mut decimals = k;
    let first = format!("{:.*}", k, v);
    let n_int = int_digits(&first);
    if n_int > 0 {
        decimals = k.min(display_digits.saturating_sub(n_int));
    }
    let text = format!("{:.*}", decimals, v);
    let int_len = text
        .trim_start_matches('-')
        .split('.')
        .next()
        .unwrap_or("")
        .len() as i32;
    let places = (0..int_len)
        .map(|i| int_len - 1 - i)
        .chain((1..=decimals as i32).map(|i| -i))
        .collect();
    (text, places)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::format::FloatFormat;

    fn wb(v: f64, bits: u32) -> XScalar {
        XScalar::with_bits(v, bits).unwrap()
    }

    #[test]
    fn stable_root_has_one_unreliable_digit() {
        assert_eq!(
            format(&wb(2.0e-14, 52), Style::Scientific(16)),
            "2.00000000000000?e-14"
        );
        assert_eq!(exact_decimal_digits(&wb(2.0e-14, 52)), 15);
    }

    #[test]
    fn garbage_root_is_fully_masked() {
        let x = wb(5.684341886080801e-14, 0);
        assert_eq!(format(&x, Style::Scientific(16)), "?.???????????????e-14");
        assert_eq!(format(&x, Style::Fixed(15)), "0.0000000000000??");
        assert_eq!(exact_decimal_digits(&x), 0);
    }

    #[test]
    fn exact_values_render_plainly_up_to_display_width() {
        assert_eq!(format(&XScalar::from_exact(1.5), Style::Fixed(3)), "1.500");
        assert_eq!(exact_decimal_digits(&XScalar::from_exact(1.0)), 15);
        assert_eq!(
            format(&XScalar::from_exact(-1000.0), Style::Fixed(15)),
            "-1000.00000000000?"
        );
        assert_eq!(
            format(&XScalar::from_exact(-1000.0), Style::Scientific(16)),
            "-1.00000000000000?e+03"
        );
    }

    #[test]
    fn fixed_small_values_keep_all_requested_decimals() {
        let x = XScalar::from_exact(2.0e-14);
        assert_eq!(format(&x, Style::Fixed(15)), "0.000000000000020");
    }

    #[test]
    fn masking_by_interval_width() {
        // 1.569... with 10 bits: Δ = 2^-10, 2Δ ≈ 0.00195 masks the 1e-3 place.
        let x = wb(1.5693821131146693, 10);
        assert_eq!(format(&x, Style::Fixed(6)), "1.56????");
        assert_eq!(exact_decimal_digits(&x), 3);
    }

    #[test]
    fn zero_nan_inf() {
        assert_eq!(format(&XScalar::from_exact(0.0), Style::Scientific(3)), "0.00e+00");
        assert_eq!(exact_decimal_digits(&XScalar::from_exact(0.0)), 16);
        assert_eq!(format(&XScalar::from_exact(f64::NAN), Style::Fixed(2)), "NaN");
        assert_eq!(format(&XScalar::from_exact(f64::NEG_INFINITY), Style::Fixed(2)), "-inf");
        assert_eq!(exact_decimal_digits(&XScalar::from_exact(f64::INFINITY)), 0);
    }

    #[test]
    fn all_bits_lost_means_no_digits() {
        for v in [1.0, -37.5, 1e-300, 6.02e23] {
            assert_eq!(exact_decimal_digits(&wb(v, 0)), 0, "{v}");
        }
    }

    #[test]
    fn rounding_carry_is_handled() {
        let x = wb(9.9999, 8);
        let s = format(&x, Style::Scientific(3));
        assert_eq!(s, "1.0?e+01");
    }

    #[test]
    fn narrow_format_display_width() {
        let x = XScalar::from_exact_in(FloatFormat::Binary16, 0.333251953125);
        assert_eq!(x.exact_bits(), 11);
        assert_eq!(format(&x, Style::Scientific(4)), "3.33?e-01");
    }

    #[test]
    fn masked_count_is_monotone_in_bits() {
        let mut prev = 0;
        for bits in 0..=53 {
            let n = exact_decimal_digits(&wb(std::f64::consts::PI, bits));
            assert!(n >= prev);
            prev = n;
        }
        assert_eq!(prev, 15);
    }
}
