//! Scalar abstraction for the game arithmetic.
//!
//! The game semantics and the offline oracle only need an exactly ordered
//! field: addition, subtraction, multiplication, division, and a total
//! order. Any `num_traits` numeric type with a total `Ord` qualifies, e.g.
//! `num_rational::BigRational` or `num_rational::Rational64`. Floating-point
//! types are deliberately excluded: the bound checks in this crate are exact
//! comparisons, which `f32`/`f64` cannot provide.

use std::fmt;

use num_traits::{Num, Signed};

/// An exact, totally ordered scalar.
pub trait Scalar: Num + Signed + Ord + Clone + fmt::Debug + fmt::Display + 'static {}

impl<T> Scalar for T where T: Num + Signed + Ord + Clone + fmt::Debug + fmt::Display + 'static {}

/// Sum of a sequence of scalars.
pub fn total<'a, S: Scalar>(items: impl IntoIterator<Item = &'a S>) -> S {
    items
        .into_iter()
        .fold(S::zero(), |acc, x| acc + x.clone())
}
