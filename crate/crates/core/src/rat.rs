//! Exact rational arithmetic. Weights and observation values are never
//! floating point; everything is a `BigRational` so geometric tails like
//! `1 - 2^-k` compare exactly.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

pub type Rat = BigRational;

pub fn rat(num: i64, den: i64) -> Rat {
    Rat::new(BigInt::from(num), BigInt::from(den))
}

pub fn zero() -> Rat {
    Rat::zero()
}

pub fn one() -> Rat {
    Rat::one()
}

pub fn half() -> Rat {
    rat(1, 2)
}

/// `2^-k`.
pub fn pow2_inv(k: u32) -> Rat {
    Rat::new(BigInt::one(), BigInt::from(2u32).pow(k))
}

/// `1 - 2^-k`, the mass of a geometric prefix of `k` fair coin flips.
pub fn one_minus_pow2_inv(k: u32) -> Rat {
    one() - pow2_inv(k)
}

/// Renders as `p/q` (or just `p` for integers), matching the parser below.
pub fn render(r: &Rat) -> String {
    r.to_string()
}

pub fn parse(s: &str) -> Option<Rat> {
    s.parse().ok()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn geometric_prefix_masses() {
        assert_eq!(one_minus_pow2_inv(1), half());
        assert_eq!(one_minus_pow2_inv(10), rat(1023, 1024));
        assert_eq!(render(&rat(3, 6)), "1/2");
        assert_eq!(render(&rat(2, 1)), "2");
        assert_eq!(parse("5/8"), Some(rat(5, 8)));
        assert_eq!(parse("1"), Some(one()));
    }
}
