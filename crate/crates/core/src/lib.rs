//! A verification laboratory for the online simple knapsack problem with
//! reservation costs.
//!
//! Items of size at most 1 arrive one at a time. An online policy may pack an
//! item, reject it, or reserve it for a fee of `alpha` times its size and
//! decide later; at the end of the sequence the reserved items may be packed
//! as far as they fit. The gain of a run is the packed total minus `alpha`
//! times everything ever reserved.
//!
//! The crate provides
//!
//! * the game semantics itself ([`model`]), generic over an exact scalar type,
//! * an exact offline knapsack optimum used as the comparison baseline
//!   ([`oracle`]),
//! * the threshold and rejection-capable online policies together with the
//!   optimal competitive-ratio curve ([`policy`]),
//! * adaptive adversaries that realize the matching lower bounds and a duel
//!   engine that plays policies against them ([`adversary`]),
//! * an experiment harness for grid sweeps, CSV emission, and trace
//!   verification ([`harness`], [`verify`]).
//!
//! All core arithmetic is exact: sizes, reservation factors, gains, and
//! ratios are arbitrary-precision rationals, and irrational constants are
//! handled as rational enclosures ([`enclosure`]), so every bound check in
//! the test suite is an exact comparison rather than a floating-point one.

pub mod adversary;
pub mod enclosure;
pub mod harness;
pub mod model;
pub mod oracle;
pub mod policy;
pub mod rational;
pub mod scalar;
pub mod verify;

/// The exact scalar used by policies, adversaries, and the harness.
pub type Rat = num_rational::BigRational;

/// Item size over [`Rat`].
pub type Size = model::Size<Rat>;
/// Reservation factor over [`Rat`].
pub type Alpha = model::Alpha<Rat>;
/// Request sequence over [`Rat`].
pub type Instance = model::Instance<Rat>;
/// Per-item decision over [`Rat`].
pub type StepAction = model::StepAction<Rat>;
/// Online game state over [`Rat`].
pub type RunState = model::RunState<Rat>;
/// Recorded run over [`Rat`].
pub type Trace = model::Trace<Rat>;
/// Final accounting of a run over [`Rat`].
pub type Outcome = model::Outcome<Rat>;
/// Offline packing over [`Rat`].
pub type Packing = oracle::Packing<Rat>;
/// Competitive ratio of a finished run over [`Rat`].
pub type CompetitiveRatio = model::CompetitiveRatio<Rat>;

pub use rational::{decimal_15, parse_rational, rat};
