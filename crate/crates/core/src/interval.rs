//! Closed rational intervals over arbitrary-precision rationals, used to
//! enclose irrational distances (square roots of exact squared
//! distances) so that norm inequalities can be decided rigorously.

use core::fmt;
use core::ops::{Add, Mul};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::linalg::Q;

/// Default number of fractional bits for square-root enclosures.
pub const SQRT_BITS: u32 = 48;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Interval {
    pub lo: BigRational,
    pub hi: BigRational,
}

pub fn big(x: &Q) -> BigRational {
    BigRational::new(BigInt::from(*x.numer()), BigInt::from(*x.denom()))
}

impl Interval {
    pub fn point(x: BigRational) -> Self {
        Interval { lo: x.clone(), hi: x }
    }

    pub fn from_q(x: &Q) -> Self {
        Self::point(big(x))
    }

    pub fn from_int(n: i64) -> Self {
        Self::point(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn zero() -> Self {
        Self::from_int(0)
    }

    pub fn one() -> Self {
        Self::from_int(1)
    }

    /// Enclosure of `√x` for `x ≥ 0` with `bits` fractional bits.
    pub fn sqrt_of(x: &BigRational, bits: u32) -> Self {
        assert!(!x.is_negative(), "square root of a negative number");
        if x.is_zero() {
            return Self::zero();
        }
        let n = x.numer();
        let d = x.denom();
        // √(n/d) = √(n·d)/d
        let scale = BigInt::one() << (2 * bits as usize);
        let s = (n * d * scale).sqrt();
        let den = d * (BigInt::one() << bits as usize);
        let lo = BigRational::new(s.clone(), den.clone());
        let exact = &s * &s == n * d * (BigInt::one() << (2 * bits as usize));
        let hi = if exact { lo.clone() } else { BigRational::new(s + 1, den) };
        Interval { lo, hi }
    }

    pub fn sqrt_q(x: &Q) -> Self {
        Self::sqrt_of(&big(x), SQRT_BITS)
    }

    /// Square-root enclosure of an interval of nonnegative numbers.
    pub fn sqrt(&self) -> Self {
        let lo = Self::sqrt_of(&self.lo, SQRT_BITS).lo;
        let hi = Self::sqrt_of(&self.hi, SQRT_BITS).hi;
        Interval { lo, hi }
    }

    /// Power of an interval of nonnegative numbers.
    pub fn pow(&self, e: u32) -> Self {
        debug_assert!(!self.lo.is_negative());
        Interval { lo: num_traits::pow(self.lo.clone(), e as usize), hi: num_traits::pow(self.hi.clone(), e as usize) }
    }

    /// Reciprocal of an interval of positive numbers.
    pub fn recip(&self) -> Self {
        assert!(self.lo.is_positive(), "reciprocal of a non-positive interval");
        Interval { lo: self.hi.recip(), hi: self.lo.recip() }
    }

    pub fn scale(&self, k: &BigRational) -> Self {
        debug_assert!(!k.is_negative());
        Interval { lo: &self.lo * k, hi: &self.hi * k }
    }

    pub fn contains(&self, x: &BigRational) -> bool {
        &self.lo <= x && x <= &self.hi
    }

    pub fn width(&self) -> BigRational {
        &self.hi - &self.lo
    }

    pub fn mid_f64(&self) -> f64 {
        ((&self.lo + &self.hi) / BigRational::from_integer(BigInt::from(2))).to_f64().unwrap_or(f64::NAN)
    }

    pub fn lo_f64(&self) -> f64 {
        self.lo.to_f64().unwrap_or(f64::NAN)
    }

    pub fn hi_f64(&self) -> f64 {
        self.hi.to_f64().unwrap_or(f64::NAN)
    }

    /// Every element of `self` is at most every element of `other`.
    pub fn certainly_le(&self, other: &Interval) -> bool {
        self.hi <= other.lo
    }
}

impl Add for &Interval {
    type Output = Interval;
    fn add(self, o: &Interval) -> Interval {
        Interval { lo: &self.lo + &o.lo, hi: &self.hi + &o.hi }
    }
}

impl Add for Interval {
    type Output = Interval;
    fn add(self, o: Interval) -> Interval {
        &self + &o
    }
}

/// Product of intervals of nonnegative numbers.
impl Mul for &Interval {
    type Output = Interval;
    fn mul(self, o: &Interval) -> Interval {
        debug_assert!(!self.lo.is_negative() && !o.lo.is_negative());
        Interval { lo: &self.lo * &o.lo, hi: &self.hi * &o.hi }
    }
}

impl Mul for Interval {
    type Output = Interval;
    fn mul(self, o: Interval) -> Interval {
        &self * &o
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{:.12e}, {:.12e}]", self.lo_f64(), self.hi_f64())
    }
}
