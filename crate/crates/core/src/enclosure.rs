//! Rational enclosures of algebraic reals.
//!
//! Several quantities in this crate are irrational: square-root expressions
//! in the optimal ratio curve, the golden-ratio and square-root breakpoints
//! between its pieces, and two polynomial roots that govern item counting
//! and adversary validity. Rather than introducing floating point, each such
//! value is represented by a [`RatioValue`]: a pair of exact rationals
//! `lo <= hi` certified to bracket the real number. All interval arithmetic
//! here is exact (no outward rounding is ever needed), and comparisons
//! against exact rationals are decided whenever the rational falls outside
//! the bracket.
//!
//! A comparison whose operand lands inside the bracket is retried at finer
//! widths down to `10^-30` (see [`refine_cmp`]); if it still overlaps, the
//! caller reports precision exhaustion instead of guessing. Rationals with
//! denominators far below `10^30` can never tie with the quadratic surds
//! used here, so in practice every policy decision is exact.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Sub};

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::rational::pow10;
use crate::Rat;

/// Default target width exponent: enclosures are refined to width `10^-30`.
pub const DEFAULT_PREC: u32 = 30;

/// Precision ladder used when a comparison needs refinement.
const REFINE_STEPS: [u32; 3] = [12, 20, DEFAULT_PREC];

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EnclosureError {
    #[error("interval [{0}, {1}] spans zero; reciprocal undefined")]
    ZeroSpanningReciprocal(String, String),
    #[error("square root of a negative bound {0}")]
    NegativeSqrt(String),
    #[error("no sign change on bracket [{0}, {1}]")]
    NoSignChange(String, String),
}

/// A rational interval `[lo, hi]` certified to contain one real value.
#[derive(Clone, PartialEq, Eq)]
pub struct RatioValue {
    lo: Rat,
    hi: Rat,
}

impl fmt::Debug for RatioValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

impl fmt::Display for RatioValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_exact() {
            write!(f, "{}", self.lo)
        } else {
            write!(f, "[{}, {}]", self.lo, self.hi)
        }
    }
}

impl RatioValue {
    /// Exact value: `lo == hi`.
    pub fn exact(value: Rat) -> Self {
        Self {
            lo: value.clone(),
            hi: value,
        }
    }

    pub fn from_bounds(lo: Rat, hi: Rat) -> Self {
        assert!(lo <= hi, "inverted enclosure bounds");
        Self { lo, hi }
    }

    pub fn lo(&self) -> &Rat {
        &self.lo
    }

    pub fn hi(&self) -> &Rat {
        &self.hi
    }

    pub fn width(&self) -> Rat {
        &self.hi - &self.lo
    }

    pub fn midpoint(&self) -> Rat {
        (&self.lo + &self.hi) / Rat::from_integer(BigInt::from(2))
    }

    pub fn is_exact(&self) -> bool {
        self.lo == self.hi
    }

    pub fn contains(&self, x: &Rat) -> bool {
        &self.lo <= x && x <= &self.hi
    }

    pub fn intersects(&self, other: &Self) -> bool {
        self.lo <= other.hi && other.lo <= self.hi
    }

    pub fn straddles_zero(&self) -> bool {
        !self.lo.is_positive() && !self.hi.is_negative()
    }

    /// Where `x` stands relative to the enclosed value.
    ///
    /// `Less` means `x` is certainly below the value, `Greater` certainly
    /// above. `Equal` is only possible for exact enclosures. `None` means
    /// the bracket is too wide to decide.
    pub fn cmp_rat(&self, x: &Rat) -> Option<Ordering> {
        if x < &self.lo {
            Some(Ordering::Less)
        } else if x > &self.hi {
            Some(Ordering::Greater)
        } else if self.is_exact() {
            Some(Ordering::Equal)
        } else {
            None
        }
    }

    /// Ordering of two enclosed values, when their brackets decide it.
    pub fn cmp_enclosure(&self, other: &Self) -> Option<Ordering> {
        if self.hi < other.lo {
            Some(Ordering::Less)
        } else if self.lo > other.hi {
            Some(Ordering::Greater)
        } else if self.is_exact() && other.is_exact() && self.lo == other.lo {
            Some(Ordering::Equal)
        } else {
            None
        }
    }

    pub fn neg(&self) -> Self {
        Self {
            lo: -self.hi.clone(),
            hi: -self.lo.clone(),
        }
    }

    pub fn recip(&self) -> Result<Self, EnclosureError> {
        if self.straddles_zero() {
            return Err(EnclosureError::ZeroSpanningReciprocal(
                self.lo.to_string(),
                self.hi.to_string(),
            ));
        }
        Ok(Self {
            lo: self.hi.recip(),
            hi: self.lo.recip(),
        })
    }

    pub fn div(&self, other: &Self) -> Result<Self, EnclosureError> {
        Ok(self * &other.recip()?)
    }

    /// Smallest interval containing both enclosures.
    pub fn hull(&self, other: &Self) -> Self {
        Self {
            lo: self.lo.clone().min(other.lo.clone()),
            hi: self.hi.clone().max(other.hi.clone()),
        }
    }
}

impl Add for &RatioValue {
    type Output = RatioValue;
    fn add(self, rhs: &RatioValue) -> RatioValue {
        RatioValue {
            lo: &self.lo + &rhs.lo,
            hi: &self.hi + &rhs.hi,
        }
    }
}

impl Sub for &RatioValue {
    type Output = RatioValue;
    fn sub(self, rhs: &RatioValue) -> RatioValue {
        RatioValue {
            lo: &self.lo - &rhs.hi,
            hi: &self.hi - &rhs.lo,
        }
    }
}

impl Mul for &RatioValue {
    type Output = RatioValue;
    fn mul(self, rhs: &RatioValue) -> RatioValue {
        let products = [
            &self.lo * &rhs.lo,
            &self.lo * &rhs.hi,
            &self.hi * &rhs.lo,
            &self.hi * &rhs.hi,
        ];
        let lo = products.iter().min().unwrap().clone();
        let hi = products.iter().max().unwrap().clone();
        RatioValue { lo, hi }
    }
}

fn target_width(prec: u32) -> Rat {
    pow10(prec).recip()
}

fn exact_sqrt(x: &Rat) -> Option<Rat> {
    let num_root = x.numer().sqrt();
    let den_root = x.denom().sqrt();
    if &(&num_root * &num_root) == x.numer() && &(&den_root * &den_root) == x.denom() {
        Some(Rat::new(num_root, den_root))
    } else {
        None
    }
}

/// Enclosure of `sqrt(x)` with width at most `10^-prec`.
///
/// Perfect squares come back exact; everything else is bisected, which keeps
/// the bound denominators small (powers of two times the bracket scale).
pub fn sqrt_enclosure(x: &Rat, prec: u32) -> Result<RatioValue, EnclosureError> {
    if x.is_negative() {
        return Err(EnclosureError::NegativeSqrt(x.to_string()));
    }
    if x.is_zero() {
        return Ok(RatioValue::exact(Rat::zero()));
    }
    if let Some(root) = exact_sqrt(x) {
        return Ok(RatioValue::exact(root));
    }
    let one = Rat::one();
    let (mut lo, mut hi) = if *x >= one {
        (Rat::one(), x.clone())
    } else {
        (x.clone(), Rat::one())
    };
    let width = target_width(prec);
    let two = Rat::from_integer(BigInt::from(2));
    while &hi - &lo > width {
        let mid = (&lo + &hi) / &two;
        if &(&mid * &mid) <= x {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(RatioValue::from_bounds(lo, hi))
}

/// Evaluates a polynomial (coefficients in ascending degree) at a rational.
pub fn poly_eval(coeffs: &[Rat], x: &Rat) -> Rat {
    coeffs
        .iter()
        .rev()
        .fold(Rat::zero(), |acc, c| acc * x.clone() + c.clone())
}

/// Interval evaluation of a polynomial over an enclosure.
pub fn poly_eval_interval(coeffs: &[Rat], x: &RatioValue) -> RatioValue {
    coeffs.iter().rev().fold(
        RatioValue::exact(Rat::zero()),
        |acc, c| &(&acc * x) + &RatioValue::exact(c.clone()),
    )
}

/// Isolates the root of a polynomial on a sign-changing bracket by bisection.
pub fn isolate_root(
    coeffs: &[Rat],
    bracket_lo: Rat,
    bracket_hi: Rat,
    prec: u32,
) -> Result<RatioValue, EnclosureError> {
    let mut lo = bracket_lo;
    let mut hi = bracket_hi;
    let f_lo = poly_eval(coeffs, &lo);
    let f_hi = poly_eval(coeffs, &hi);
    if f_lo.is_zero() {
        return Ok(RatioValue::exact(lo));
    }
    if f_hi.is_zero() {
        return Ok(RatioValue::exact(hi));
    }
    if f_lo.is_positive() == f_hi.is_positive() {
        return Err(EnclosureError::NoSignChange(lo.to_string(), hi.to_string()));
    }
    let lo_positive = f_lo.is_positive();
    let width = target_width(prec);
    let two = Rat::from_integer(BigInt::from(2));
    while &hi - &lo > width {
        let mid = (&lo + &hi) / &two;
        let f_mid = poly_eval(coeffs, &mid);
        if f_mid.is_zero() {
            return Ok(RatioValue::exact(mid));
        }
        if f_mid.is_positive() == lo_positive {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(RatioValue::from_bounds(lo, hi))
}

/// Enclosure of `sqrt(2) - 1`, the boundary between the rejection-capable
/// regime and the linear `2 + alpha` regime.
pub fn sqrt_two_minus_one(prec: u32) -> RatioValue {
    let s = sqrt_enclosure(&Rat::from_integer(BigInt::from(2)), prec).expect("sqrt(2)");
    &s - &RatioValue::exact(Rat::one())
}

/// Enclosure of `phi - 1 = (sqrt(5) - 1) / 2`, the boundary beyond which the
/// ratio curve diverges as `1 / (1 - alpha)`.
pub fn golden_ratio_minus_one(prec: u32) -> RatioValue {
    let s = sqrt_enclosure(&Rat::from_integer(BigInt::from(5)), prec + 1).expect("sqrt(5)");
    let half = RatioValue::exact(Rat::new(BigInt::one(), BigInt::from(2)));
    &(&s - &RatioValue::exact(Rat::one())) * &half
}

/// Enclosure of the unique positive root of `1 - 2x - x^2 + x^3` (~0.445).
///
/// Below this value a low-threshold reservation run can hold at most one
/// large item before it triggers; between it and 1/2, at most two.
pub fn large_count_breakpoint(prec: u32) -> RatioValue {
    let coeffs = [
        Rat::one(),
        Rat::from_integer(BigInt::from(-2)),
        -Rat::one(),
        Rat::one(),
    ];
    isolate_root(
        &coeffs,
        Rat::new(BigInt::from(2), BigInt::from(5)),
        Rat::new(BigInt::from(1), BigInt::from(2)),
        prec,
    )
    .expect("cubic breakpoint bracket")
}

/// Enclosure of the unique positive root of `x^4 + 2x^3 - 2x^2 + 5x - 1`.
///
/// This is the analytic floor below which the four-item strategy's
/// third-item branches stop dominating its target bound; the public
/// validity floor of that strategy is the slightly larger 0.225.
pub fn four_item_validity_floor(prec: u32) -> RatioValue {
    let coeffs = [
        -Rat::one(),
        Rat::from_integer(BigInt::from(5)),
        Rat::from_integer(BigInt::from(-2)),
        Rat::from_integer(BigInt::from(2)),
        Rat::one(),
    ];
    isolate_root(&coeffs, Rat::zero(), Rat::new(BigInt::one(), BigInt::from(4)), prec)
        .expect("quartic floor bracket")
}

/// Compares `x` with a refinable enclosure, tightening down to `10^-30`.
///
/// Returns `None` only when the value still cannot be separated from `x` at
/// the finest width; callers translate that into a precision-exhausted
/// error.
pub fn refine_cmp(x: &Rat, build: impl Fn(u32) -> RatioValue) -> Option<Ordering> {
    for prec in REFINE_STEPS {
        if let Some(ord) = build(prec).cmp_rat(x) {
            return Some(ord);
        }
    }
    None
}
