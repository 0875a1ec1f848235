//! Exact rational scalars and their "num/den" text encoding.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

/// The scalar field used everywhere in the crate.
pub type Q = BigRational;

pub fn q(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn qfrac(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

pub fn zero() -> Q {
    Q::zero()
}

pub fn one() -> Q {
    Q::one()
}

/// Serializes as `"num/den"`, always with an explicit denominator.
pub fn to_num_den(x: &Q) -> String {
    format!("{}/{}", x.numer(), x.denom())
}

/// Short human-readable form: integers print without a denominator.
pub fn to_short(x: &Q) -> String {
    if x.is_integer() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

pub fn parse_num_den(s: &str) -> Option<Q> {
    let s = s.trim();
    match s.split_once('/') {
        Some((n, d)) => {
            let n: BigInt = n.trim().parse().ok()?;
            let d: BigInt = d.trim().parse().ok()?;
            if d.is_zero() {
                None
            } else {
                Some(Q::new(n, d))
            }
        }
        None => s.parse::<BigInt>().ok().map(Q::from_integer),
    }
}

/// Converts an integral rational to `i64`, if it is one and fits.
pub fn to_i64(x: &Q) -> Option<i64> {
    if !x.is_integer() {
        return None;
    }
    i64::try_from(x.numer().clone()).ok()
}

pub fn factorial(n: u32) -> Q {
    let mut acc = BigInt::one();
    for k in 2..=n {
        acc *= k;
    }
    Q::from_integer(acc)
}

pub fn abs(x: &Q) -> Q {
    x.abs()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn num_den_round_trip() {
        for (n, d) in [(3, 4), (-7, 2), (0, 1), (5, 1), (6, -4)] {
            let x = qfrac(n, d);
            assert_eq!(parse_num_den(&to_num_den(&x)), Some(x));
        }
        assert_eq!(to_num_den(&q(2)), "2/1");
        assert_eq!(to_short(&qfrac(-3, 6)), "-1/2");
        assert_eq!(parse_num_den("1/0"), None);
        assert_eq!(parse_num_den("12"), Some(q(12)));
    }

    #[test]
    fn factorials() {
        assert_eq!(factorial(0), q(1));
        assert_eq!(factorial(5), q(120));
    }
}
