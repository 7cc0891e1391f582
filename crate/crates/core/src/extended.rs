//! Non-negative reals with a wide binary exponent.
//!
//! Attack probabilities for day-long windows routinely fall far below the
//! smallest positive `f64` (about `4.9e-324`). [`ExtendedProb`] keeps a
//! normalised `f64` mantissa in `[1, 2)` and an `i64` binary exponent, so
//! products and powers keep full double precision at any magnitude.

use std::cmp::Ordering;
use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Mul, MulAssign};

const LOG10_2: f64 = std::f64::consts::LOG10_2;
const LN_2: f64 = std::f64::consts::LN_2;

/// A non-negative value `mantissa * 2^exponent` with `mantissa` in `[1, 2)`,
/// or exactly zero.
///
/// Despite the name, values above one are representable: union bounds can
/// exceed one and are only clamped when presented.
#[derive(Clone, Copy, Debug)]
pub struct ExtendedProb {
    mantissa: f64,
    exponent: i64,
}

/// Splits a positive finite `x` into `(m, e)` with `m` in `[1, 2)`.
fn frexp(x: f64) -> (f64, i64) {
    debug_assert!(x > 0.0 && x.is_finite());
    let bits = x.to_bits();
    let biased = ((bits >> 52) & 0x7ff) as i64;
    if biased == 0 {
        // subnormal
        let (m, e) = frexp(x * 2f64.powi(64));
        return (m, e - 64);
    }
    let m = f64::from_bits((bits & !(0x7ff_u64 << 52)) | (1023_u64 << 52));
    (m, biased - 1023)
}

/// `2^e` applied to `m` without intermediate overflow or underflow.
fn ldexp(m: f64, e: i64) -> f64 {
    if e > 1100 {
        return f64::INFINITY;
    }
    if e < -1200 {
        return 0.0;
    }
    let half = (e / 2) as i32;
    let rest = (e - e / 2) as i32;
    m * 2f64.powi(half) * 2f64.powi(rest)
}

impl ExtendedProb {
    pub const ZERO: ExtendedProb = ExtendedProb {
        mantissa: 0.0,
        exponent: 0,
    };
    pub const ONE: ExtendedProb = ExtendedProb {
        mantissa: 1.0,
        exponent: 0,
    };

    /// Builds from `mantissa * 2^exponent`; `mantissa` may be any
    /// non-negative finite value.
    pub fn from_parts(mantissa: f64, exponent: i64) -> Self {
        assert!(
            mantissa >= 0.0 && mantissa.is_finite(),
            "ExtendedProb needs a finite non-negative mantissa, got {mantissa}"
        );
        if mantissa == 0.0 {
            return Self::ZERO;
        }
        let (m, e) = frexp(mantissa);
        ExtendedProb {
            mantissa: m,
            exponent: exponent + e,
        }
    }

    pub fn from_f64(x: f64) -> Self {
        Self::from_parts(x, 0)
    }

    /// `exp(ln_value)`; `-inf` maps to zero.
    pub fn from_ln(ln_value: f64) -> Self {
        if ln_value == f64::NEG_INFINITY {
            return Self::ZERO;
        }
        assert!(ln_value.is_finite(), "from_ln needs a finite logarithm");
        let e = (ln_value / LN_2).floor();
        let m = (ln_value - e * LN_2).exp();
        Self::from_parts(m, e as i64)
    }

    pub fn is_zero(&self) -> bool {
        self.mantissa == 0.0
    }

    pub fn mantissa(&self) -> f64 {
        self.mantissa
    }

    pub fn exponent(&self) -> i64 {
        self.exponent
    }

    /// Nearest `f64`; underflows to `0.0` and overflows to infinity.
    pub fn to_f64(&self) -> f64 {
        if self.is_zero() {
            0.0
        } else {
            ldexp(self.mantissa, self.exponent)
        }
    }

    pub fn ln(&self) -> f64 {
        if self.is_zero() {
            f64::NEG_INFINITY
        } else {
            self.mantissa.ln() + self.exponent as f64 * LN_2
        }
    }

    pub fn log10(&self) -> f64 {
        if self.is_zero() {
            f64::NEG_INFINITY
        } else {
            self.mantissa.log10() + self.exponent as f64 * LOG10_2
        }
    }

    /// `self^k` by repeated squaring.
    pub fn powu(self, mut k: u64) -> Self {
        let mut base = self;
        let mut acc = Self::ONE;
        while k > 0 {
            if k & 1 == 1 {
                acc *= base;
            }
            base *= base;
            k >>= 1;
        }
        acc
    }

    /// `max(self - other, 0)`.
    pub fn saturating_sub(self, other: Self) -> Self {
        if other >= self {
            return Self::ZERO;
        }
        if other.is_zero() {
            return self;
        }
        let shift = self.exponent - other.exponent;
        if shift > 64 {
            return self;
        }
        Self::from_parts(
            self.mantissa - other.mantissa * 2f64.powi(-(shift as i32)),
            self.exponent,
        )
    }

    pub fn min(self, other: Self) -> Self {
        if self <= other {
            self
        } else {
            other
        }
    }

    pub fn max(self, other: Self) -> Self {
        if self >= other {
            self
        } else {
            other
        }
    }

    /// Relative difference `|self - other| / max(self, other)`; zero when both
    /// are zero.
    pub fn relative_diff(self, other: Self) -> f64 {
        let hi = self.max(other);
        let lo = self.min(other);
        if hi.is_zero() {
            return 0.0;
        }
        let diff = hi.saturating_sub(lo);
        if diff.is_zero() {
            return 0.0;
        }
        ldexp(diff.mantissa / hi.mantissa, diff.exponent - hi.exponent)
    }

    /// Scientific notation with `digits` significant digits, e.g.
    /// `8.87010e-3`. Works for any magnitude.
    pub fn to_scientific(&self, digits: usize) -> String {
        let digits = digits.max(1);
        if self.is_zero() {
            return format!("{:.*e}", digits - 1, 0.0);
        }
        if (-1000..=1000).contains(&self.exponent) {
            return format!("{:.*e}", digits - 1, self.to_f64());
        }
        let l = self.log10();
        let mut decimal_exp = l.floor();
        let mut lead = 10f64.powf(l - decimal_exp);
        let scale = 10f64.powi(digits as i32 - 1);
        if (lead * scale).round() >= 10.0 * scale {
            lead /= 10.0;
            decimal_exp += 1.0;
        }
        format!("{:.*}e{}", digits - 1, lead, decimal_exp as i64)
    }
}

impl Default for ExtendedProb {
    fn default() -> Self {
        Self::ZERO
    }
}

impl From<f64> for ExtendedProb {
    fn from(x: f64) -> Self {
        Self::from_f64(x)
    }
}

impl PartialEq for ExtendedProb {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for ExtendedProb {}

impl PartialOrd for ExtendedProb {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ExtendedProb {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self.is_zero(), other.is_zero()) {
            (true, true) => Ordering::Equal,
            (true, false) => Ordering::Less,
            (false, true) => Ordering::Greater,
            (false, false) => self
                .exponent
                .cmp(&other.exponent)
                .then(self.mantissa.total_cmp(&other.mantissa)),
        }
    }
}

impl Mul for ExtendedProb {
    type Output = ExtendedProb;

    fn mul(self, rhs: Self) -> Self {
        if self.is_zero() || rhs.is_zero() {
            return Self::ZERO;
        }
        Self::from_parts(self.mantissa * rhs.mantissa, self.exponent + rhs.exponent)
    }
}

impl MulAssign for ExtendedProb {
    fn mul_assign(&mut self, rhs: Self) {
        *self = *self * rhs;
    }
}

impl Add for ExtendedProb {
    type Output = ExtendedProb;

    fn add(self, rhs: Self) -> Self {
        if rhs.is_zero() {
            return self;
        }
        if self.is_zero() {
            return rhs;
        }
        let (hi, lo) = if self.exponent >= rhs.exponent {
            (self, rhs)
        } else {
            (rhs, self)
        };
        let shift = hi.exponent - lo.exponent;
        if shift > 64 {
            return hi;
        }
        Self::from_parts(
            hi.mantissa + lo.mantissa * 2f64.powi(-(shift as i32)),
            hi.exponent,
        )
    }
}

impl AddAssign for ExtendedProb {
    fn add_assign(&mut self, rhs: Self) {
        *self = *self + rhs;
    }
}

impl Sum for ExtendedProb {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::ZERO, |acc, x| acc + x)
    }
}

impl fmt::Display for ExtendedProb {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_scientific(f.precision().unwrap_or(6)))
    }
}
