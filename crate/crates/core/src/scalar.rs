//! Scalar abstraction shared by the distribution and linear-algebra code.
//!
//! Probabilities are exact rationals wherever a value feeds a complexity
//! decision; the same routines also run over `f64`/`f32` for reporting and
//! for cross-checking the exact route.

use std::fmt::Debug;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Num, One, Signed, ToPrimitive, Zero};

/// Field-like scalar over which distributions and stationary solves are generic.
pub trait Scalar:
    Clone + Debug + PartialOrd + Num + Signed + FromPrimitive + ToPrimitive + Send + Sync + 'static
{
    /// True when arithmetic is exact (equality tests are meaningful).
    const EXACT: bool;

    /// Magnitude below which a pivot is treated as zero. Zero for exact types.
    fn pivot_tolerance() -> Self;

    fn two() -> Self {
        Self::one() + Self::one()
    }

    /// Lossy conversion used by entropy reporting.
    fn as_f64(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    fn from_ratio(num: i64, den: i64) -> Self {
        Self::from_i64(num).expect("integer conversion") / Self::from_i64(den).expect("integer conversion")
    }

    fn is_negligible(&self) -> bool {
        self.abs() <= Self::pivot_tolerance()
    }
}

impl Scalar for f64 {
    const EXACT: bool = false;
    fn pivot_tolerance() -> Self {
        1e-12
    }
}

impl Scalar for f32 {
    const EXACT: bool = false;
    fn pivot_tolerance() -> Self {
        1e-6
    }
}

impl Scalar for BigRational {
    const EXACT: bool = true;
    fn pivot_tolerance() -> Self {
        BigRational::zero()
    }
    fn as_f64(&self) -> f64 {
        // Ratio::to_f64 is exact-rounding; fall back to a scaled division for
        // operands beyond f64 range.
        self.to_f64().unwrap_or_else(|| {
            let n = self.numer().to_f64().unwrap_or(f64::NAN);
            let d = self.denom().to_f64().unwrap_or(f64::NAN);
            n / d
        })
    }
}

/// `2^-exp` as an exact rational.
pub fn dyadic_unit(exp: u32) -> BigRational {
    BigRational::new(BigInt::one(), BigInt::one() << exp)
}

/// Exponent `e` such that `q = a / 2^e` in lowest terms, or `None` when the
/// reduced denominator is not a power of two.
pub fn dyadic_exponent(q: &BigRational) -> Option<u32> {
    let d = q.denom();
    if d.is_zero() {
        return None;
    }
    let tz = d.trailing_zeros().unwrap_or(0);
    if (d >> tz) == BigInt::one() {
        Some(tz as u32)
    } else {
        None
    }
}

/// Parses `"p/q"`, `"p"` or a decimal-free integer into an exact rational.
pub fn parse_rational(s: &str) -> Option<BigRational> {
    let s = s.trim();
    match s.split_once('/') {
        Some((n, d)) => {
            let n: BigInt = n.trim().parse().ok()?;
            let d: BigInt = d.trim().parse().ok()?;
            if d.is_zero() {
                return None;
            }
            Some(BigRational::new(n, d))
        }
        None => s.parse::<BigInt>().ok().map(BigRational::from_integer),
    }
}

/// Renders a rational as `"p/q"`, or `"p"` when integral.
pub fn format_rational(q: &BigRational) -> String {
    if q.is_integer() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn dyadic_exponents() {
        assert_eq!(dyadic_exponent(&q(1, 1)), Some(0));
        assert_eq!(dyadic_exponent(&q(3, 4)), Some(2));
        assert_eq!(dyadic_exponent(&q(2, 8)), Some(2));
        assert_eq!(dyadic_exponent(&q(1, 3)), None);
        assert_eq!(dyadic_exponent(&q(0, 1)), Some(0));
    }

    #[test]
    fn rational_text_round_trip() {
        for s in ["0", "1", "3/4", "1/3", "-2/5"] {
            assert_eq!(format_rational(&parse_rational(s).unwrap()), s);
        }
        assert_eq!(parse_rational("2/4"), Some(q(1, 2)));
        assert_eq!(parse_rational("1/0"), None);
        assert_eq!(parse_rational("x"), None);
    }

    #[test]
    fn exact_to_float() {
        assert_eq!(q(1, 4).as_f64(), 0.25);
        assert_eq!(<f64 as Scalar>::from_ratio(1, 4), 0.25);
    }
}
