//! Exact rational arithmetic helpers.
//!
//! Every payoff, line coefficient, and running average in this crate is a
//! [`Rat`] (an arbitrary-precision rational). Tie cases in the decision rules
//! ("on or below the line") and the per-round decay envelopes are decided by
//! exact sign tests, so no floating point enters the simulation state; floats
//! appear only when values are rendered for reports.

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};
use std::str::FromStr;

/// Arbitrary-precision rational number.
pub type Rat = num_rational::BigRational;

/// Rational from an integer numerator and denominator.
///
/// Panics if `denom` is zero.
pub fn rat(numer: i64, denom: i64) -> Rat {
    Rat::new(BigInt::from(numer), BigInt::from(denom))
}

/// Rational from an integer.
pub fn int(value: i64) -> Rat {
    Rat::from_integer(BigInt::from(value))
}

/// Parse error for [`parse_rat`].
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid rational {input:?}: expected an integer or `numerator/denominator`")]
pub struct ParseRatError {
    pub input: String,
}

/// Parses `"a/b"` or a plain integer literal into a [`Rat`].
pub fn parse_rat(input: &str) -> Result<Rat, ParseRatError> {
    let trimmed = input.trim();
    Rat::from_str(trimmed).map_err(|_| ParseRatError {
        input: input.to_string(),
    })
}

/// Rounds `value` to `sig_digits` significant decimal digits and renders it in
/// plain decimal notation, exactly (no float detour). Trailing fractional
/// zeros are trimmed.
pub fn to_decimal(value: &Rat, sig_digits: usize) -> String {
    assert!(sig_digits > 0, "need at least one significant digit");
    if value.is_zero() {
        return "0".to_string();
    }
    let negative = value.is_negative();
    let numer = value.numer().abs();
    let denom = value.denom().clone();

    // Decimal exponent e with 10^e <= numer/denom < 10^(e+1).
    let mut exponent = digit_count(&numer) as i64 - digit_count(&denom) as i64;
    if scaled_cmp(&numer, &denom, exponent) == std::cmp::Ordering::Less {
        exponent -= 1;
    }

    // Round numer/denom * 10^(sig-1-e) to the nearest integer, half away
    // from zero; this yields exactly `sig_digits` digits unless rounding
    // carries into one more.
    let shift = sig_digits as i64 - 1 - exponent;
    let (num_sh, den_sh) = apply_shift(&numer, &denom, shift);
    let (quot, rem) = num_integer::div_rem(num_sh, den_sh.clone());
    let mut digits = if &rem * 2 >= den_sh { quot + 1 } else { quot }.to_string();
    if digits.len() > sig_digits {
        // e.g. 9.99 -> 10.0
        exponent += 1;
        digits.truncate(sig_digits);
    }

    let point = exponent + 1; // digits before the decimal point
    let mut out = String::new();
    if negative {
        out.push('-');
    }
    if point <= 0 {
        out.push_str("0.");
        for _ in 0..(-point) {
            out.push('0');
        }
        out.push_str(digits.trim_end_matches('0'));
        if out.ends_with('.') {
            out.push('0');
        }
    } else if (point as usize) >= digits.len() {
        out.push_str(&digits);
        for _ in 0..(point as usize - digits.len()) {
            out.push('0');
        }
    } else {
        let (head, tail) = digits.split_at(point as usize);
        out.push_str(head);
        let tail = tail.trim_end_matches('0');
        if !tail.is_empty() {
            out.push('.');
            out.push_str(tail);
        }
    }
    out
}

/// Lossy conversion for plotting and log output.
pub fn to_f64(value: &Rat) -> f64 {
    value.to_f64().unwrap_or(f64::NAN)
}

/// Mean of a slice of rationals. Panics on an empty slice.
pub fn mean(values: &[Rat]) -> Rat {
    assert!(!values.is_empty());
    let sum: Rat = values.iter().sum();
    sum / int(values.len() as i64)
}

/// Sup-norm distance between two equal-length vectors.
pub fn max_abs_diff(a: &[Rat], b: &[Rat]) -> Rat {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .max()
        .unwrap_or_else(|| int(0))
}

fn digit_count(value: &BigInt) -> u64 {
    // Number of decimal digits of a positive integer.
    value.to_string().len() as u64
}

/// Compares numer against denom * 10^exponent without building negative powers.
fn scaled_cmp(numer: &BigInt, denom: &BigInt, exponent: i64) -> std::cmp::Ordering {
    if exponent >= 0 {
        numer.cmp(&(denom * BigInt::from(10u8).pow(exponent as u32)))
    } else {
        (numer * BigInt::from(10u8).pow((-exponent) as u32)).cmp(denom)
    }
}

fn apply_shift(numer: &BigInt, denom: &BigInt, shift: i64) -> (BigInt, BigInt) {
    if shift >= 0 {
        (numer * BigInt::from(10u8).pow(shift as u32), denom.clone())
    } else {
        (
            numer.clone(),
            denom * BigInt::from(10u8).pow((-shift) as u32),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_fractions_and_integers() {
        assert_eq!(parse_rat("3/4").unwrap(), rat(3, 4));
        assert_eq!(parse_rat(" -7 ").unwrap(), int(-7));
        assert_eq!(parse_rat("10/4").unwrap(), rat(5, 2));
        assert!(parse_rat("1.5").is_err());
        assert!(parse_rat("a/b").is_err());
        assert!(parse_rat("1/0").is_err());
    }

    #[test]
    fn decimal_rendering() {
        assert_eq!(to_decimal(&int(4), 12), "4");
        assert_eq!(to_decimal(&rat(84, 11), 12), "7.63636363636");
        assert_eq!(to_decimal(&rat(1, 3), 5), "0.33333");
        assert_eq!(to_decimal(&rat(2, 3), 5), "0.66667");
        assert_eq!(to_decimal(&rat(-5, 2), 12), "-2.5");
        assert_eq!(to_decimal(&int(0), 12), "0");
        assert_eq!(to_decimal(&rat(1, 1000), 3), "0.001");
        assert_eq!(to_decimal(&rat(999, 100), 2), "10");
        assert_eq!(to_decimal(&int(123456), 3), "123000");
        assert_eq!(to_decimal(&rat(1, 8), 3), "0.125");
    }

    #[test]
    fn decimal_rounds_half_away_from_zero() {
        assert_eq!(to_decimal(&rat(25, 10), 1), "3");
        assert_eq!(to_decimal(&rat(-25, 10), 1), "-3");
    }

    #[test]
    fn mean_and_norms() {
        let v = vec![int(0), int(7), int(7)];
        assert_eq!(mean(&v), rat(14, 3));
        let w = vec![int(1), int(5), int(7)];
        assert_eq!(max_abs_diff(&v, &w), int(2));
    }
}
