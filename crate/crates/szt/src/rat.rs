//! Exact rational plumbing shared across the crate: canonical `p/q` text
//! form and square-root enclosures for reporting.

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Signed, ToPrimitive, Zero};

pub type Rat = BigRational;

/// Parses `p/q` or a bare integer `p` into a reduced rational.
pub fn parse_rat(text: &str) -> Result<Rat, String> {
    let (num, den) = match text.split_once('/') {
        Some((n, d)) => (n, d),
        None => (text, "1"),
    };
    let n: BigInt = num
        .trim()
        .parse()
        .map_err(|_| format!("bad numerator in {text:?}"))?;
    let d: BigInt = den
        .trim()
        .parse()
        .map_err(|_| format!("bad denominator in {text:?}"))?;
    if d.is_zero() {
        return Err(format!("zero denominator in {text:?}"));
    }
    Ok(Rat::new(n, d))
}

/// Canonical `p/q` form, denominator always present and positive.
pub fn format_rat(r: &Rat) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// Certified enclosure `[lo, hi]` of the square root of a nonnegative
/// rational: both bounds are floats validated by exact squaring.
pub fn sqrt_enclosure(squared: &Rat) -> (f64, f64) {
    assert!(!squared.is_negative(), "sqrt of negative rational");
    if squared.is_zero() {
        return (0.0, 0.0);
    }
    let approx = squared.to_f64().unwrap_or(f64::MAX).sqrt();
    let mut lo = approx * (1.0 - 1e-13);
    let mut hi = approx * (1.0 + 1e-13);
    let check = |x: f64| Rat::from_float(x);
    while check(lo).map_or(false, |r| !r.is_negative() && &(&r * &r) > squared) {
        lo *= 1.0 - 1e-12;
    }
    while check(hi).map_or(true, |r| &(&r * &r) < squared) {
        hi *= 1.0 + 1e-12;
    }
    (lo.max(0.0), hi)
}

pub fn rat_one() -> Rat {
    Rat::one()
}

pub fn rat_int(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_format_roundtrip() {
        assert_eq!(parse_rat("3/4").unwrap(), Rat::new(3.into(), 4.into()));
        assert_eq!(parse_rat("-2").unwrap(), rat_int(-2));
        assert_eq!(parse_rat("6/-4").unwrap(), Rat::new((-3).into(), 2.into()));
        assert!(parse_rat("1/0").is_err());
        assert!(parse_rat("x").is_err());
        assert_eq!(format_rat(&parse_rat("6/4").unwrap()), "3/2");
        assert_eq!(format_rat(&rat_int(5)), "5/1");
    }

    #[test]
    fn sqrt_enclosures_bracket() {
        for sq in ["0", "1", "2", "4", "9/4", "10007/3"] {
            let s = parse_rat(sq).unwrap();
            let (lo, hi) = sqrt_enclosure(&s);
            assert!(lo <= hi);
            let lo_r = Rat::from_float(lo).unwrap();
            let hi_r = Rat::from_float(hi).unwrap();
            assert!(&lo_r * &lo_r <= s);
            assert!(&hi_r * &hi_r >= s);
            assert!(hi - lo <= 1e-9 * (1.0 + hi));
        }
    }
}
