//! Exact rational arithmetic helpers shared by every module.
//!
//! All mechanism outputs are computed with [`BigRational`]; floats only appear in
//! the iterative solver and in the brute-force oracles. Irrational thresholds of
//! the form `a + b*sqrt(c)` are compared exactly through [`Surd`].

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub type Rational = BigRational;

/// `num / den` as an exact rational. Panics on a zero denominator.
pub fn ratio(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Exact conversion of a finite float. Non-finite input maps to `None`.
pub fn from_f64(x: f64) -> Option<Rational> {
    Rational::from_float(x)
}

pub fn is_integral(r: &Rational) -> bool {
    r.denom().is_one()
}

/// Smallest value among `items`, or `None` for an empty iterator.
pub fn min_of<'a, I: IntoIterator<Item = &'a Rational>>(items: I) -> Option<Rational> {
    items.into_iter().min().cloned()
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid rational literal {literal:?}: {reason}")]
pub struct ParseRationalError {
    pub literal: String,
    pub reason: &'static str,
}

/// Parses `"p/q"`, integers, and finite decimals such as `"0.6"`, `"-1.25e-3"`.
///
/// Decimals are converted exactly: `"0.1"` is `1/10`, never the nearest float.
pub fn parse_rational(s: &str) -> Result<Rational, ParseRationalError> {
    let err = |reason| ParseRationalError {
        literal: s.to_string(),
        reason,
    };
    let t = s.trim();
    if t.is_empty() {
        return Err(err("empty string"));
    }
    if let Some((num, den)) = t.split_once('/') {
        let num: BigInt = num.trim().parse().map_err(|_| err("bad numerator"))?;
        let den: BigInt = den.trim().parse().map_err(|_| err("bad denominator"))?;
        if den.is_zero() {
            return Err(err("zero denominator"));
        }
        return Ok(Rational::new(num, den));
    }

    let (mantissa, exponent) = match t.find(['e', 'E']) {
        Some(pos) => {
            let exp: i32 = t[pos + 1..].parse().map_err(|_| err("bad exponent"))?;
            (&t[..pos], exp)
        }
        None => (t, 0),
    };
    let (negative, digits) = match mantissa.as_bytes().first() {
        Some(b'-') => (true, &mantissa[1..]),
        Some(b'+') => (false, &mantissa[1..]),
        _ => (false, mantissa),
    };
    let (whole, frac) = digits.split_once('.').unwrap_or((digits, ""));
    if whole.is_empty() && frac.is_empty() {
        return Err(err("no digits"));
    }
    if !whole.bytes().chain(frac.bytes()).all(|b| b.is_ascii_digit()) {
        return Err(err("unexpected character"));
    }
    let joined = format!("{whole}{frac}");
    let mut num: BigInt = joined.parse().map_err(|_| err("no digits"))?;
    if negative {
        num = -num;
    }
    let scale = exponent - frac.len() as i32;
    let ten = BigInt::from(10);
    let value = if scale >= 0 {
        Rational::from_integer(num * num_traits::pow(ten, scale as usize))
    } else {
        Rational::new(num, num_traits::pow(ten, (-scale) as usize))
    };
    Ok(value)
}

/// `"p/q"`, or just `"p"` for integers.
pub fn format_exact(r: &Rational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Decimal rendering rounded half away from zero to `digits` places.
pub fn format_decimal(r: &Rational, digits: usize) -> String {
    let scale = num_traits::pow(BigInt::from(10), digits);
    let scaled = r.abs() * Rational::from_integer(scale.clone());
    let half = ratio(1, 2);
    let rounded = (scaled + half).floor().to_integer();
    let (whole, frac) = rounded.div_rem(&scale);
    let sign = if r.is_negative() && !rounded.is_zero() { "-" } else { "" };
    if digits == 0 {
        format!("{sign}{whole}")
    } else {
        format!("{sign}{whole}.{:0>width$}", frac.to_string(), width = digits)
    }
}

/// The real number `a + b * sqrt(c)` with rational `a`, `b` and `c >= 0`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Surd {
    pub a: Rational,
    pub b: Rational,
    pub c: Rational,
}

impl Surd {
    pub fn new(a: Rational, b: Rational, c: Rational) -> Self {
        assert!(!c.is_negative(), "radicand must be nonnegative");
        Self { a, b, c }
    }

    /// `b * sqrt(c)`.
    pub fn root(b: Rational, c: Rational) -> Self {
        Self::new(Rational::zero(), b, c)
    }

    pub fn to_f64(&self) -> f64 {
        to_f64(&self.a) + to_f64(&self.b) * to_f64(&self.c).sqrt()
    }

    /// Exact ordering of `r` relative to this surd.
    pub fn cmp_rational(&self, r: &Rational) -> Ordering {
        // sign(r - a - b*sqrt(c)) = sign(d - t) with d = r - a, t = b*sqrt(c)
        let d = r - &self.a;
        let t_sign = if self.c.is_zero() { 0 } else { sign_of(&self.b) };
        let d_sign = sign_of(&d);
        
        if d_sign != t_sign || (d_sign == 0 && t_sign == 0) {
            d_sign.cmp(&t_sign)
        } else {
            // same nonzero sign: compare squares, flipping for negatives
            let d2 = &d * &d;
            let t2 = &self.b * &self.b * &self.c;
            if d_sign > 0 {
                d2.cmp(&t2)
            } else {
                t2.cmp(&d2)
            }
        }
    }

    /// Is `r >= self`, exactly.
    pub fn le_rational(&self, r: &Rational) -> bool {
        self.cmp_rational(r) != Ordering::Less
    }
}

impl fmt::Display for Surd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} + {}*sqrt({}) (~{:.9})",
            format_exact(&self.a),
            format_exact(&self.b),
            format_exact(&self.c),
            self.to_f64()
        )
    }
}

fn sign_of(r: &Rational) -> i8 {
    if r.is_positive() {
        1
    } else if r.is_negative() {
        -1
    } else {
        0
    }
}

/// Published bounds, kept exact.
pub mod bounds {
    use super::{int, ratio, Rational, Surd};
    use num_traits::Zero;

    /// `(2*sqrt(3) + 3) / (4*sqrt(3)) = 1/2 + sqrt(3)/4`, two-bidder PF welfare bound.
    pub fn pf_welfare_two_bidders() -> Surd {
        Surd::new(ratio(1, 2), ratio(1, 4), int(3))
    }

    /// `2*(sqrt(2) - 1)`, the improved two-bidder two-item guarantee.
    pub fn two_bidder_two_item() -> Surd {
        Surd::new(int(-2), int(2), int(2))
    }

    /// `(12 - sqrt(12)) / 11`, the improved three-bidder two-item guarantee.
    pub fn three_bidder_two_item() -> Surd {
        Surd::new(ratio(12, 11), ratio(-2, 11), int(3))
    }

    /// `1 + sqrt(2)`, where the two-bidder schedule is worst.
    pub fn two_bidder_worst_v() -> Surd {
        Surd::new(int(1), int(1), int(2))
    }

    /// `sqrt(12)`, where the three-bidder schedule is worst.
    pub fn sqrt12() -> Surd {
        Surd::root(int(1), int(12))
    }

    /// `(2 + sqrt(14)) / 5`, interior minimiser for a middle ratio-defining bidder.
    pub fn three_bidder_middle_minimizer() -> Surd {
        Surd::new(ratio(2, 5), ratio(1, 5), int(14))
    }

    /// The hybrid welfare bound `2/3` against the PF allocation.
    pub fn hybrid_vs_pf() -> Rational {
        ratio(2, 3)
    }

    pub fn zero() -> Rational {
        Rational::zero()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_fractions_and_decimals() {
        assert_eq!(parse_rational("1/2").unwrap(), ratio(1, 2));
        assert_eq!(parse_rational("0.6").unwrap(), ratio(3, 5));
        assert_eq!(parse_rational("-1.25e-1").unwrap(), ratio(-1, 8));
        assert_eq!(parse_rational("3").unwrap(), int(3));
        assert_eq!(parse_rational(".5").unwrap(), ratio(1, 2));
        assert_eq!(parse_rational("2e3").unwrap(), int(2000));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("abc").is_err());
        assert!(parse_rational("").is_err());
        assert!(parse_rational("1.2.3").is_err());
    }

    #[test]
    fn formats() {
        assert_eq!(format_exact(&ratio(6, 4)), "3/2");
        assert_eq!(format_exact(&int(-2)), "-2");
        assert_eq!(format_decimal(&ratio(2, 3), 4), "0.6667");
        assert_eq!(format_decimal(&ratio(-1, 8), 2), "-0.13");
        assert_eq!(format_decimal(&ratio(-1, 1000), 2), "0.00");
        assert_eq!(format_decimal(&int(7), 0), "7");
    }

    #[test]
    fn surd_comparisons_are_exact() {
        let s = bounds::two_bidder_two_item();
        assert!((s.to_f64() - 0.828_427_124_746).abs() < 1e-12);
        assert_eq!(s.cmp_rational(&ratio(828_427, 1_000_000)), Ordering::Less);
        assert_eq!(s.cmp_rational(&ratio(828_428, 1_000_000)), Ordering::Greater);
        let b = bounds::three_bidder_two_item();
        assert!((b.to_f64() - 0.775_990_8).abs() < 1e-6);
        assert_eq!(b.cmp_rational(&ratio(7759, 10_000)), Ordering::Less);
        assert_eq!(b.cmp_rational(&ratio(7760, 10_000)), Ordering::Greater);
        let pf = bounds::pf_welfare_two_bidders();
        assert!((pf.to_f64() - 0.933_012_7).abs() < 1e-6);
        // a rational surd (c a perfect square) compares like the rational
        let four = Surd::root(int(1), int(4));
        assert_eq!(four.cmp_rational(&int(2)), Ordering::Equal);
        assert_eq!(four.cmp_rational(&int(3)), Ordering::Greater);
        let neg = Surd::new(int(0), int(-1), int(4));
        assert_eq!(neg.cmp_rational(&int(-2)), Ordering::Equal);
        assert_eq!(neg.cmp_rational(&int(-3)), Ordering::Less);
    }
}
