//! Exact rational scalars and the integer combinatorics used by the exact
//! engine.
//!
//! Everything here is arbitrary precision; the only deliberate restriction
//! is [`EXACT_FACTORIAL_LIMIT`]: factorial-type indices above it are refused
//! instead of computed, which keeps the exact engine's inputs at desk scale.

use num::bigint::BigInt;
use num::rational::BigRational;
use num::traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Exact rational scalar of the whole exact engine.
pub type Rat = BigRational;

/// Largest index accepted by factorial-type operations on the exact path.
pub const EXACT_FACTORIAL_LIMIT: u64 = 170;

pub fn rat_zero() -> Rat {
    Rat::zero()
}

pub fn rat_one() -> Rat {
    Rat::one()
}

pub fn rat_int(v: i64) -> Rat {
    Rat::from_integer(BigInt::from(v))
}

pub fn rat_frac(num: i64, den: i64) -> Rat {
    Rat::new(BigInt::from(num), BigInt::from(den))
}

pub fn rat_to_f64(v: &Rat) -> f64 {
    v.to_f64().unwrap_or(f64::NAN)
}

/// Parses "p", "-p" or "p/q" into a rational.
pub fn parse_rat(s: &str) -> Result<Rat> {
    s.trim()
        .parse::<Rat>()
        .map_err(|e| Error::Domain(format!("cannot parse rational {s:?}: {e}")))
}

/// `v^e` for integer exponents of either sign. Errors on `0^negative`.
pub fn rat_pow(v: &Rat, e: i64) -> Result<Rat> {
    if v.is_zero() && e < 0 {
        return Err(Error::Domain("zero raised to a negative power".into()));
    }
    if e >= 0 {
        Ok(num::pow::pow(v.clone(), e as usize))
    } else {
        Ok(num::pow::pow(v.clone(), (-e) as usize).recip())
    }
}

fn check_index(k: u64) -> Result<()> {
    if k > EXACT_FACTORIAL_LIMIT {
        Err(Error::Exactness {
            index: k,
            limit: EXACT_FACTORIAL_LIMIT,
        })
    } else {
        Ok(())
    }
}

/// Exact `k!` as a big integer; refuses beyond the exactness limit.
pub fn factorial(k: u64) -> Result<BigInt> {
    check_index(k)?;
    let mut acc = BigInt::one();
    for i in 2..=k {
        acc *= BigInt::from(i);
    }
    Ok(acc)
}

/// Exact falling factorial `base·(base-1)···(base-steps+1)` as a big
/// integer; `steps = 0` yields 1.
pub fn falling_factorial_int(base: i64, steps: u64) -> Result<BigInt> {
    check_index(steps)?;
    let mut acc = BigInt::one();
    for i in 0..steps as i64 {
        acc *= BigInt::from(base - i);
    }
    Ok(acc)
}

/// Exact binomial coefficient `C(n, k)` for `n ≥ 0`; zero for `k > n`.
pub fn binomial(n: u64, k: u64) -> Result<BigInt> {
    if k > n {
        return Ok(BigInt::zero());
    }
    let k = k.min(n - k);
    check_index(k)?;
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    Ok(acc)
}

/// Formats a rational as `p/q` (or `p` when the denominator is one),
/// matching the canonical JSON form of the exact engine.
pub fn format_rat(v: &Rat) -> String {
    if v.denom().is_one() {
        v.numer().to_string()
    } else {
        format!("{}/{}", v.numer(), v.denom())
    }
}

/// True when `v ≥ 0`.
pub fn rat_is_nonneg(v: &Rat) -> bool {
    !v.is_negative()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn factorial_small_values() {
        assert_eq!(factorial(0).unwrap(), BigInt::from(1));
        assert_eq!(factorial(5).unwrap(), BigInt::from(120));
        assert_eq!(factorial(12).unwrap(), BigInt::from(479_001_600u64));
    }

    #[test]
    fn factorial_refuses_beyond_limit() {
        assert!(factorial(EXACT_FACTORIAL_LIMIT).is_ok());
        assert!(matches!(
            factorial(EXACT_FACTORIAL_LIMIT + 1),
            Err(Error::Exactness { .. })
        ));
    }

    #[test]
    fn falling_factorial_values() {
        // brute products
        assert_eq!(falling_factorial_int(3, 2).unwrap(), BigInt::from(6));
        assert_eq!(falling_factorial_int(5, 0).unwrap(), BigInt::from(1));
        assert_eq!(falling_factorial_int(-1, 2).unwrap(), BigInt::from(2));
        assert_eq!(falling_factorial_int(2, 4).unwrap(), BigInt::from(0));
    }

    #[test]
    fn binomial_values() {
        assert_eq!(binomial(6, 2).unwrap(), BigInt::from(15));
        assert_eq!(binomial(6, 7).unwrap(), BigInt::from(0));
        assert_eq!(binomial(0, 0).unwrap(), BigInt::from(1));
    }

    #[test]
    fn parse_and_format_round_trip() {
        let v = parse_rat("-3/6").unwrap();
        assert_eq!(format_rat(&v), "-1/2");
        assert_eq!(format_rat(&parse_rat("4/2").unwrap()), "2");
        assert!(parse_rat("x").is_err());
    }

    #[test]
    fn pow_negative_exponent() {
        let v = rat_frac(2, 3);
        assert_eq!(rat_pow(&v, -2).unwrap(), rat_frac(9, 4));
        assert!(rat_pow(&rat_zero(), -1).is_err());
    }
}
