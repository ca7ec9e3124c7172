//! Exact non-negative rational numbers, used for ranks and simulation timestamps.
//!
//! Ranks must order exactly: WFQ virtual-finish arithmetic works with weights like
//! 1/10, and floating-point comparison jitter could flip a scheduling decision. The
//! domain is restricted to non-negative values; operations that would go negative
//! are either rejected at construction or exposed as checked operations.

use std::fmt;
use std::ops::{Add, AddAssign, Mul};
use std::str::FromStr;

use num_rational::Ratio;
use num_traits::{CheckedSub, Zero};
use thiserror::Error;

/// An exact non-negative rational number.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Rat(Ratio<i64>);

/// Priority value attached to every PIFO entry; lower pops first.
pub type Rank = Rat;

/// Simulation timestamp in seconds; shares the exact representation of ranks.
pub type Time = Rat;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RatError {
    #[error("denominator must be nonzero")]
    ZeroDenominator,
    #[error("value must be non-negative")]
    Negative,
    #[error("cannot parse `{0}` as a non-negative rational")]
    Parse(String),
}

impl Rat {
    /// Builds `num/den`, rejecting zero denominators and negative values.
    pub fn new(num: i64, den: i64) -> Result<Self, RatError> {
        if den == 0 {
            return Err(RatError::ZeroDenominator);
        }
        let r = Ratio::new(num, den);
        if r < Ratio::zero() {
            return Err(RatError::Negative);
        }
        Ok(Rat(r))
    }

    pub fn zero() -> Self {
        Rat(Ratio::zero())
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn numer(&self) -> i64 {
        *self.0.numer()
    }

    pub fn denom(&self) -> i64 {
        *self.0.denom()
    }

    /// Exact division; `None` when `other` is zero.
    pub fn checked_div(self, other: Rat) -> Option<Rat> {
        if other.0.is_zero() {
            None
        } else {
            Some(Rat(self.0 / other.0))
        }
    }

    /// Exact subtraction; `None` when the result would be negative (or overflow).
    pub fn checked_sub(self, other: Rat) -> Option<Rat> {
        let d = self.0.checked_sub(&other.0)?;
        if d < Ratio::zero() {
            None
        } else {
            Some(Rat(d))
        }
    }

    /// Renders as a terminating decimal when the reduced denominator divides a
    /// power of ten, falling back to `num/den` otherwise. Used by the CSV writers
    /// so timestamps like 1/4 round-trip as "0.25".
    pub fn to_decimal_string(&self) -> String {
        let mut den = self.denom();
        let mut pow10: i64 = 1;
        while den % 2 == 0 {
            den /= 2;
            pow10 = match pow10.checked_mul(2) {
                Some(p) => p,
                None => return self.to_string(),
            };
        }
        while den % 5 == 0 {
            den /= 5;
            pow10 = match pow10.checked_mul(5) {
                Some(p) => p,
                None => return self.to_string(),
            };
        }
        if den != 1 {
            return self.to_string();
        }
        // self = numer / denom with denom = pow10 / (extra powers); scale so the
        // denominator becomes exactly a power of ten.
        let mut scale = 1i64;
        let mut d = self.denom();
        let mut ten = 1i64;
        while d % 2 == 0 {
            d /= 2;
            scale *= 5;
            ten *= 10;
        }
        while d % 5 == 0 {
            d /= 5;
            scale *= 2;
            ten *= 10;
        }
        let scaled = match self.numer().checked_mul(scale) {
            Some(s) => s,
            None => return self.to_string(),
        };
        if ten == 1 {
            return scaled.to_string();
        }
        let whole = scaled / ten;
        let mut frac = (scaled % ten).to_string();
        let width = ten.to_string().len() - 1;
        while frac.len() < width {
            frac.insert(0, '0');
        }
        while frac.ends_with('0') {
            frac.pop();
        }
        if frac.is_empty() {
            whole.to_string()
        } else {
            format!("{whole}.{frac}")
        }
    }
}

impl From<u32> for Rat {
    fn from(n: u32) -> Self {
        Rat(Ratio::from_integer(i64::from(n)))
    }
}

impl Add for Rat {
    type Output = Rat;
    fn add(self, rhs: Rat) -> Rat {
        Rat(self.0 + rhs.0)
    }
}

impl AddAssign for Rat {
    fn add_assign(&mut self, rhs: Rat) {
        self.0 += rhs.0;
    }
}

impl Mul for Rat {
    type Output = Rat;
    fn mul(self, rhs: Rat) -> Rat {
        Rat(self.0 * rhs.0)
    }
}

impl fmt::Display for Rat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Debug for Rat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl FromStr for Rat {
    type Err = RatError;

    /// Accepts integers ("3"), fractions ("3/2"), and decimals ("0.25").
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let bad = || RatError::Parse(s.to_string());
        if s.is_empty() || s.starts_with('-') {
            return Err(if s.starts_with('-') {
                RatError::Negative
            } else {
                bad()
            });
        }
        if let Some((n, d)) = s.split_once('/') {
            let num: i64 = n.trim().parse().map_err(|_| bad())?;
            let den: i64 = d.trim().parse().map_err(|_| bad())?;
            return Rat::new(num, den);
        }
        if let Some((whole, frac)) = s.split_once('.') {
            let whole: i64 = if whole.is_empty() {
                0
            } else {
                whole.parse().map_err(|_| bad())?
            };
            if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
                return Err(bad());
            }
            let frac_num: i64 = frac.parse().map_err(|_| bad())?;
            let den = 10i64.checked_pow(frac.len() as u32).ok_or_else(bad)?;
            let num = whole.checked_mul(den).and_then(|w| w.checked_add(frac_num));
            return Rat::new(num.ok_or_else(bad)?, den);
        }
        let num: i64 = s.parse().map_err(|_| bad())?;
        Rat::new(num, 1)
    }
}
