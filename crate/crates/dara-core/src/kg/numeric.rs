//! Exact decimal comparison for typed literals.
//!
//! Comparatives and superlatives promote every operand to an
//! arbitrary-precision decimal before comparing, so `5`, `5.0` and `5.00`
//! tie exactly regardless of the lexical form or datatype they carried.

use num_bigint::BigInt;
use std::cmp::Ordering;

/// An exact decimal: `mantissa * 10^-scale`.
#[derive(Debug, Clone)]
pub struct NumericValue {
    mantissa: BigInt,
    scale: u32,
}

impl NumericValue {
    /// Parse a decimal lexical form, with optional sign, fraction and
    /// exponent (`-12`, `980.0`, `1.5e3`). Returns `None` on anything else.
    pub fn parse(lexical: &str) -> Option<NumericValue> {
        let s = lexical.trim();
        if s.is_empty() {
            return None;
        }
        let (s, exp) = match s.split_once(['e', 'E']) {
            Some((mant, exp)) => (mant, exp.parse::<i64>().ok()?),
            None => (s, 0),
        };
        let (int_part, frac_part) = match s.split_once('.') {
            Some((i, f)) => (i, f),
            None => (s, ""),
        };
        let digits: String = format!("{int_part}{frac_part}");
        let body = digits.strip_prefix(['+', '-']).unwrap_or(&digits);
        if body.is_empty() || !body.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        if !frac_part.is_empty() && !frac_part.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        let mut mantissa: BigInt = digits.parse().ok()?;
        let mut scale = frac_part.len() as i64 - exp;
        if scale < 0 {
            mantissa *= BigInt::from(10u32).pow((-scale) as u32);
            scale = 0;
        }
        Some(NumericValue { mantissa, scale: scale as u32 })
    }
}

impl PartialEq for NumericValue {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for NumericValue {}

impl PartialOrd for NumericValue {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for NumericValue {
    fn cmp(&self, other: &Self) -> Ordering {
        let scale = self.scale.max(other.scale);
        let lhs = &self.mantissa * BigInt::from(10u32).pow(scale - self.scale);
        let rhs = &other.mantissa * BigInt::from(10u32).pow(scale - other.scale);
        lhs.cmp(&rhs)
    }
}
