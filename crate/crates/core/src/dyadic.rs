//! Exact dyadic rationals and the ring of dyadic rationals extended by √2.
//!
//! Cube geometry, Haar inner products and the exact-arithmetic test paths
//! all live in these two types. Overflow of the `i128` numerator panics,
//! like integer overflow does in debug builds.

use std::cmp::Ordering;
use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Mul, MulAssign, Neg, Sub, SubAssign};

/// A rational number `num · 2^exp`.
///
/// Stored normalized (`num` odd, or `num == 0 && exp == 0`) so that derived
/// equality and hashing are value equality.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Dyadic {
    num: i128,
    exp: i32,
}

fn shl_exact(v: i128, shift: u32) -> i128 {
    if v == 0 {
        return 0;
    }
    assert!(
        shift < 127 && v.unsigned_abs().leading_zeros() > shift + 1,
        "dyadic numerator overflow"
    );
    v << shift
}

impl Dyadic {
    pub const ZERO: Dyadic = Dyadic { num: 0, exp: 0 };
    pub const ONE: Dyadic = Dyadic { num: 1, exp: 0 };

    pub fn new(num: i128, exp: i32) -> Self {
        if num == 0 {
            return Self::ZERO;
        }
        let tz = num.trailing_zeros();
        Dyadic {
            num: num >> tz,
            exp: exp + tz as i32,
        }
    }

    pub fn from_int(v: i64) -> Self {
        Self::new(v as i128, 0)
    }

    /// `num / 2^log2_den`.
    pub fn ratio(num: i128, log2_den: u32) -> Self {
        Self::new(num, -(log2_den as i32))
    }

    pub fn pow2(exp: i32) -> Self {
        Dyadic { num: 1, exp }
    }

    pub fn numerator(self) -> i128 {
        self.num
    }

    pub fn exponent(self) -> i32 {
        self.exp
    }

    pub fn is_zero(self) -> bool {
        self.num == 0
    }

    pub fn signum(self) -> i32 {
        self.num.signum() as i32
    }

    pub fn abs(self) -> Self {
        Dyadic {
            num: self.num.abs(),
            exp: self.exp,
        }
    }

    pub fn mul_pow2(self, e: i32) -> Self {
        if self.num == 0 {
            self
        } else {
            Dyadic {
                num: self.num,
                exp: self.exp + e,
            }
        }
    }

    /// `self · 2^gen` as an integer, if it is one.
    pub fn scaled_integer(self, gen: u32) -> Option<i128> {
        if self.num == 0 {
            return Some(0);
        }
        let e = self.exp + gen as i32;
        if e < 0 {
            None
        } else {
            Some(shl_exact(self.num, e as u32))
        }
    }

    /// Nearest `f64`; exact whenever the numerator fits in 53 bits.
    pub fn to_f64(self) -> f64 {
        (self.num as f64) * 2f64.powi(self.exp)
    }

    /// Exact conversion of a finite `f64`.
    pub fn from_f64(x: f64) -> Option<Self> {
        if !x.is_finite() {
            return None;
        }
        if x == 0.0 {
            return Some(Self::ZERO);
        }
        let bits = x.to_bits();
        let sign = if bits >> 63 == 1 { -1i128 } else { 1 };
        let raw_exp = ((bits >> 52) & 0x7ff) as i32;
        let frac = (bits & ((1u64 << 52) - 1)) as i128;
        let (mantissa, exp) = if raw_exp == 0 {
            (frac, -1074)
        } else {
            (frac | (1i128 << 52), raw_exp - 1075)
        };
        Some(Self::new(sign * mantissa, exp))
    }

    fn aligned(self, other: Self) -> (i128, i128, i32) {
        if self.num == 0 {
            return (0, other.num, other.exp);
        }
        if other.num == 0 {
            return (self.num, 0, self.exp);
        }
        let e = self.exp.min(other.exp);
        (
            shl_exact(self.num, (self.exp - e) as u32),
            shl_exact(other.num, (other.exp - e) as u32),
            e,
        )
    }
}

impl Default for Dyadic {
    fn default() -> Self {
        Self::ZERO
    }
}

impl fmt::Debug for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.exp >= 0 {
            write!(f, "{}", shl_exact(self.num, self.exp as u32))
        } else {
            write!(f, "{}/2^{}", self.num, -self.exp)
        }
    }
}

impl From<i64> for Dyadic {
    fn from(v: i64) -> Self {
        Self::from_int(v)
    }
}

impl Add for Dyadic {
    type Output = Dyadic;
    fn add(self, rhs: Dyadic) -> Dyadic {
        let (a, b, e) = self.aligned(rhs);
        Dyadic::new(a.checked_add(b).expect("dyadic numerator overflow"), e)
    }
}

impl Sub for Dyadic {
    type Output = Dyadic;
    fn sub(self, rhs: Dyadic) -> Dyadic {
        self + (-rhs)
    }
}

impl Neg for Dyadic {
    type Output = Dyadic;
    fn neg(self) -> Dyadic {
        Dyadic {
            num: -self.num,
            exp: self.exp,
        }
    }
}

impl Mul for Dyadic {
    type Output = Dyadic;
    fn mul(self, rhs: Dyadic) -> Dyadic {
        let num = self
            .num
            .checked_mul(rhs.num)
            .expect("dyadic numerator overflow");
        Dyadic::new(num, self.exp + rhs.exp)
    }
}

impl AddAssign for Dyadic {
    fn add_assign(&mut self, rhs: Dyadic) {
        *self = *self + rhs;
    }
}

impl SubAssign for Dyadic {
    fn sub_assign(&mut self, rhs: Dyadic) {
        *self = *self - rhs;
    }
}

impl MulAssign for Dyadic {
    fn mul_assign(&mut self, rhs: Dyadic) {
        *self = *self * rhs;
    }
}

impl Sum for Dyadic {
    fn sum<I: Iterator<Item = Dyadic>>(iter: I) -> Dyadic {
        iter.fold(Dyadic::ZERO, |a, b| a + b)
    }
}

impl Ord for Dyadic {
    fn cmp(&self, other: &Self) -> Ordering {
        let (a, b, _) = self.aligned(*other);
        a.cmp(&b)
    }
}

impl PartialOrd for Dyadic {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// An element `rational + irrational·√2` with dyadic rational parts.
///
/// Haar scales `2^{nd/2}` live here exactly, including odd `nd`.
#[derive(Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct Sqrt2Dyadic {
    pub rational: Dyadic,
    pub irrational: Dyadic,
}

impl Sqrt2Dyadic {
    pub const ZERO: Sqrt2Dyadic = Sqrt2Dyadic {
        rational: Dyadic::ZERO,
        irrational: Dyadic::ZERO,
    };
    pub const ONE: Sqrt2Dyadic = Sqrt2Dyadic {
        rational: Dyadic::ONE,
        irrational: Dyadic::ZERO,
    };

    pub fn from_dyadic(d: Dyadic) -> Self {
        Sqrt2Dyadic {
            rational: d,
            irrational: Dyadic::ZERO,
        }
    }

    /// `2^{half_exp / 2}` for any integer `half_exp`.
    pub fn sqrt2_pow(half_exp: i64) -> Self {
        let half = half_exp.div_euclid(2) as i32;
        if half_exp.rem_euclid(2) == 0 {
            Self::from_dyadic(Dyadic::pow2(half))
        } else {
            Sqrt2Dyadic {
                rational: Dyadic::ZERO,
                irrational: Dyadic::pow2(half),
            }
        }
    }

    pub fn is_zero(self) -> bool {
        self.rational.is_zero() && self.irrational.is_zero()
    }

    /// The value as a dyadic rational, when the √2 part vanishes.
    pub fn as_dyadic(self) -> Option<Dyadic> {
        self.irrational.is_zero().then_some(self.rational)
    }

    pub fn to_f64(self) -> f64 {
        self.rational.to_f64() + self.irrational.to_f64() * std::f64::consts::SQRT_2
    }
}

impl fmt::Debug for Sqrt2Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.irrational.is_zero() {
            write!(f, "{}", self.rational)
        } else {
            write!(f, "{} + {}·√2", self.rational, self.irrational)
        }
    }
}

impl From<Dyadic> for Sqrt2Dyadic {
    fn from(d: Dyadic) -> Self {
        Self::from_dyadic(d)
    }
}

impl Add for Sqrt2Dyadic {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Sqrt2Dyadic {
            rational: self.rational + rhs.rational,
            irrational: self.irrational + rhs.irrational,
        }
    }
}

impl Sub for Sqrt2Dyadic {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        self + (-rhs)
    }
}

impl Neg for Sqrt2Dyadic {
    type Output = Self;
    fn neg(self) -> Self {
        Sqrt2Dyadic {
            rational: -self.rational,
            irrational: -self.irrational,
        }
    }
}

impl Mul for Sqrt2Dyadic {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let two = Dyadic::from_int(2);
        Sqrt2Dyadic {
            rational: self.rational * rhs.rational + two * self.irrational * rhs.irrational,
            irrational: self.rational * rhs.irrational + self.irrational * rhs.rational,
        }
    }
}

impl AddAssign for Sqrt2Dyadic {
    fn add_assign(&mut self, rhs: Self) {
        *self = *self + rhs;
    }
}

impl Sum for Sqrt2Dyadic {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::ZERO, |a, b| a + b)
    }
}

/// Scalar values carried by grid samples and step functions.
///
/// `f64` is the working type; [`Dyadic`] and [`Sqrt2Dyadic`] give the exact
/// mode used to check identities without rounding.
pub trait Scalar:
    Copy
    + PartialEq
    + fmt::Debug
    + Send
    + Sync
    + Add<Output = Self>
    + Sub<Output = Self>
    + Neg<Output = Self>
    + Mul<Output = Self>
{
    fn zero() -> Self;
    fn from_dyadic(d: Dyadic) -> Self;
    fn to_f64(self) -> f64;
}

/// Scalars that can represent `2^{m/2}`.
pub trait HaarScalar: Scalar {
    fn sqrt2_pow(half_exp: i64) -> Self;
}

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn from_dyadic(d: Dyadic) -> Self {
        d.to_f64()
    }
    fn to_f64(self) -> f64 {
        self
    }
}

impl HaarScalar for f64 {
    fn sqrt2_pow(half_exp: i64) -> Self {
        Sqrt2Dyadic::sqrt2_pow(half_exp).to_f64()
    }
}

impl Scalar for Dyadic {
    fn zero() -> Self {
        Dyadic::ZERO
    }
    fn from_dyadic(d: Dyadic) -> Self {
        d
    }
    fn to_f64(self) -> f64 {
        Dyadic::to_f64(self)
    }
}

impl Scalar for Sqrt2Dyadic {
    fn zero() -> Self {
        Sqrt2Dyadic::ZERO
    }
    fn from_dyadic(d: Dyadic) -> Self {
        Sqrt2Dyadic::from_dyadic(d)
    }
    fn to_f64(self) -> f64 {
        Sqrt2Dyadic::to_f64(self)
    }
}

impl HaarScalar for Sqrt2Dyadic {
    fn sqrt2_pow(half_exp: i64) -> Self {
        Sqrt2Dyadic::sqrt2_pow(half_exp)
    }
}
