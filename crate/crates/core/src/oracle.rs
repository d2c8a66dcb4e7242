//! Exact offline optimum for the simple knapsack: the largest-total
//! sub-multiset of a given item set that fits the capacity.
//!
//! [`popt`] is the workhorse (depth-first branch and bound over items sorted
//! descending, exact rational comparisons); [`brute_force_popt`] is the
//! independent cross-check used by the tests, a plain subset enumeration
//! with no pruning. Ties between equal-total selections are broken toward
//! the lexicographically smallest ascending-sorted selection so outputs are
//! stable.

use thiserror::Error;

use crate::model::{Instance, Size};
use crate::scalar::{total, Scalar};

/// Instances beyond this length are refused by [`popt`].
pub const POPT_EXHAUSTIVE_LIMIT: usize = 30;

/// Instances beyond this length are refused by [`brute_force_popt`].
pub const BRUTE_FORCE_LIMIT: usize = 20;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OracleError {
    #[error("{len} items exceed the exhaustive limit of {limit}")]
    InputTooLarge { len: usize, limit: usize },
}

/// A feasible packing: a sub-multiset of the input and its total.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Packing<S: Scalar> {
    /// Selected items, sorted ascending.
    pub selection: Vec<Size<S>>,
    pub total: S,
}

impl<S: Scalar> Packing<S> {
    fn empty() -> Self {
        Self {
            selection: Vec::new(),
            total: S::zero(),
        }
    }

    fn from_selection(mut selection: Vec<Size<S>>) -> Self {
        selection.sort();
        let total = total(selection.iter().map(Size::value));
        Self { selection, total }
    }

    /// `(total desc, selection lexicographically asc)` preference.
    fn beats(&self, other: &Self) -> bool {
        match self.total.cmp(&other.total) {
            std::cmp::Ordering::Greater => true,
            std::cmp::Ordering::Less => false,
            std::cmp::Ordering::Equal => self.selection < other.selection,
        }
    }
}

/// Maximum-total packing within capacity 1.
pub fn popt<S: Scalar>(items: &[Size<S>]) -> Result<Packing<S>, OracleError> {
    popt_within(items, &S::one())
}

/// Maximum-total packing within an arbitrary capacity.
pub fn popt_within<S: Scalar>(items: &[Size<S>], capacity: &S) -> Result<Packing<S>, OracleError> {
    if items.len() > POPT_EXHAUSTIVE_LIMIT {
        return Err(OracleError::InputTooLarge {
            len: items.len(),
            limit: POPT_EXHAUSTIVE_LIMIT,
        });
    }
    if capacity.is_negative() {
        return Ok(Packing::empty());
    }
    let grand_total = total(items.iter().map(Size::value));
    if &grand_total <= capacity {
        return Ok(Packing::from_selection(items.to_vec()));
    }
    let mut sorted: Vec<Size<S>> = items.to_vec();
    sorted.sort_by(|a, b| b.cmp(a));
    // suffix_sum[i] = total of sorted[i..]
    let mut suffix_sum = vec![S::zero(); sorted.len() + 1];
    for i in (0..sorted.len()).rev() {
        suffix_sum[i] = suffix_sum[i + 1].clone() + sorted[i].value().clone();
    }
    let mut best = Packing::empty();
    let mut chosen: Vec<Size<S>> = Vec::new();
    descend(
        &sorted,
        &suffix_sum,
        capacity,
        0,
        &S::zero(),
        &mut chosen,
        &mut best,
    );
    Ok(best)
}

fn descend<S: Scalar>(
    sorted: &[Size<S>],
    suffix_sum: &[S],
    capacity: &S,
    index: usize,
    current: &S,
    chosen: &mut Vec<Size<S>>,
    best: &mut Packing<S>,
) {
    // optimistic bound: everything remaining fits
    if current.clone() + suffix_sum[index].clone() < best.total {
        return;
    }
    if index == sorted.len() {
        let candidate = Packing::from_selection(chosen.clone());
        if candidate.beats(best) {
            *best = candidate;
        }
        return;
    }
    let item = &sorted[index];
    let with_item = current.clone() + item.value().clone();
    if &with_item <= capacity {
        chosen.push(item.clone());
        descend(sorted, suffix_sum, capacity, index + 1, &with_item, chosen, best);
        chosen.pop();
    }
    descend(sorted, suffix_sum, capacity, index + 1, current, chosen, best);
}

/// Full subset enumeration with no pruning; test oracle for [`popt`].
///
/// Visits all `2^n` subsets in Gray-code order so each step adjusts the
/// running total by a single item; only candidate subsets that match or
/// beat the incumbent total are materialized for the tie comparison.
pub fn brute_force_popt<S: Scalar>(items: &[Size<S>]) -> Result<Packing<S>, OracleError> {
    if items.len() > BRUTE_FORCE_LIMIT {
        return Err(OracleError::InputTooLarge {
            len: items.len(),
            limit: BRUTE_FORCE_LIMIT,
        });
    }
    let one = S::one();
    let mut best = Packing::empty();
    let mut included = vec![false; items.len()];
    let mut running = S::zero();
    for counter in 1u64..(1u64 << items.len()) {
        let flip = counter.trailing_zeros() as usize;
        if included[flip] {
            running = running - items[flip].value().clone();
        } else {
            running = running + items[flip].value().clone();
        }
        included[flip] = !included[flip];
        if running > one || running < best.total {
            continue;
        }
        let subset: Vec<Size<S>> = items
            .iter()
            .zip(&included)
            .filter(|(_, &take)| take)
            .map(|(item, _)| item.clone())
            .collect();
        let candidate = Packing::from_selection(subset);
        if candidate.beats(&best) {
            best = candidate;
        }
    }
    Ok(best)
}

/// Offline optimum of an instance: the reservation-free best packing total.
pub fn opt_gain<S: Scalar>(instance: &Instance<S>) -> Result<S, OracleError> {
    popt(instance.items()).map(|p| p.total)
}
