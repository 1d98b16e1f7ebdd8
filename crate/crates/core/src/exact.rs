//! Rational and extended-precision helpers.
//!
//! Every finite `f64` is a dyadic rational, so conversions from floating
//! inputs are exact. Extended-precision work is done on `BigRational` values
//! rounded to a fixed number of significant bits after each operation.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Exact conversion. Panics on non-finite input.
pub fn rational_from_f64(x: f64) -> BigRational {
    BigRational::from_float(x).unwrap_or_else(|| panic!("non-finite value {x}"))
}

pub fn rational_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

pub fn int(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

fn bit_len(n: &BigInt) -> i64 {
    n.bits() as i64
}

/// Rounds `r` to the nearest dyadic rational with `bits` significant bits.
pub fn round_bits(r: &BigRational, bits: u32) -> BigRational {
    if r.is_zero() {
        return BigRational::zero();
    }
    let exponent = bit_len(r.numer()) - bit_len(r.denom());
    let shift = bits as i64 - exponent;
    let scaled = if shift >= 0 {
        r * BigRational::from_integer(BigInt::one() << shift as usize)
    } else {
        r / BigRational::from_integer(BigInt::one() << (-shift) as usize)
    };
    let m = round_to_integer(&scaled);
    if shift >= 0 {
        BigRational::new(m, BigInt::one() << shift as usize)
    } else {
        BigRational::from_integer(m << (-shift) as usize)
    }
}

fn round_to_integer(r: &BigRational) -> BigInt {
    let two = BigInt::from(2);
    (r.numer() * &two + r.denom()).div_floor(&(r.denom() * &two))
}

/// `e^{-t}` to roughly `bits` bits of relative precision.
pub fn exp_neg(t: &BigRational, bits: u32) -> BigRational {
    if t.is_zero() {
        return BigRational::one();
    }
    if t.is_negative() {
        return BigRational::one() / exp_neg(&-t, bits);
    }
    // Halve until the argument is below 1/2, sum the series, square back.
    let mut halvings = 0u32;
    let mut y = t.clone();
    let half = BigRational::new(BigInt::one(), BigInt::from(2));
    while y > half {
        y /= int(2);
        halvings += 1;
    }
    let work = bits + halvings + 32;
    let eps = BigRational::new(BigInt::one(), BigInt::one() << work as usize);
    let mut term = BigRational::one();
    let mut sum = BigRational::one();
    let mut n = 1i64;
    loop {
        term = round_bits(&(-(&term * &y) / int(n)), work);
        if term.abs() < eps {
            break;
        }
        sum += &term;
        n += 1;
    }
    let mut value = round_bits(&sum, work);
    for _ in 0..halvings {
        value = round_bits(&(&value * &value), work);
    }
    round_bits(&value, bits)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_roundtrip_is_exact() {
        for x in [0.0, 1.0, 0.1, 1e-300, 12345.678, f64::MAX] {
            assert_eq!(rational_to_f64(&rational_from_f64(x)), x);
        }
    }

    #[test]
    fn rounding_keeps_requested_bits() {
        let third = BigRational::new(BigInt::one(), BigInt::from(3));
        let r = round_bits(&third, 60);
        let err = rational_to_f64(&((&r - &third).abs() / &third));
        assert!(err < 2f64.powi(-59));
        assert_eq!(round_bits(&int(1023), 4), int(1024));
    }

    #[test]
    fn exp_matches_f64() {
        for t in [0.0, 0.25, 1.0, 3.0, 15.0, 40.5] {
            let v = rational_to_f64(&exp_neg(&rational_from_f64(t), 200));
            assert!((v - (-t).exp()).abs() <= 2.0 * f64::EPSILON * (-t).exp(), "t={t}");
        }
    }

    #[test]
    fn exp_high_precision_identity() {
        // e^{-1} * e^{-2} == e^{-3} far beyond double precision.
        let a = exp_neg(&int(1), 256);
        let b = exp_neg(&int(2), 256);
        let c = exp_neg(&int(3), 256);
        let rel = rational_to_f64(&((&a * &b - &c).abs() / &c));
        assert!(rel < 1e-70, "{rel}");
    }
}
