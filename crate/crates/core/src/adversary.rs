//! Adaptive adversaries realizing the lower bounds, and the duel engine.
//!
//! An adversary chooses the next item as a deterministic function of the
//! policy's visible decisions so far. Three strategies are implemented:
//!
//! * `chain`: baits with items slightly above half capacity (`1/2 + d^i`),
//!   punishes a pack with a full-size item, punishes a late reject with a
//!   complementary item that fits with nothing the policy holds, and stops
//!   baiting once the accumulated reservation fees alone force a ratio of 2.
//! * `four-item`: a tree of at most three escalating items `s < t < u` with
//!   `s + t > 1`, followed by a full-size punish item after any pack. Its
//!   parameters depend on the regime of `alpha`; above `phi - 1` only `s`
//!   remains.
//! * `nonrejecting`: first `1/(2+alpha)`, then `(1+alpha)/(2+alpha) + e`
//!   repeated while the policy keeps reserving, full-size punish after a
//!   pack. Ends the sequence on a reject (and the duel flags that), since
//!   its guarantee targets policies that never reject.
//!
//! The duel engine feeds adversary items to a policy step by step, keeps
//! revealing items after the policy has stopped (they still count toward
//! the offline optimum), and reports the realized competitive ratio.

use std::cmp::Ordering;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::enclosure::{
    golden_ratio_minus_one, refine_cmp, sqrt_enclosure, sqrt_two_minus_one, RatioValue,
    DEFAULT_PREC,
};
use crate::model::{GameRun, OnlinePolicy, PolicyFault, StepAction};
use crate::oracle::{opt_gain, OracleError};
use crate::rational::{rat, round_to_denominator};
use crate::{Alpha, CompetitiveRatio, Instance, Outcome, Rat, Size, Trace};

#[derive(Debug, Error)]
pub enum AdversaryError {
    #[error("delta {0} outside (0, 1/100]")]
    DeltaOutOfRange(String),
    #[error("epsilon {0} outside (0, 1/1000)")]
    EpsilonOutOfRange(String),
    #[error("alpha {alpha} outside the validity range of `{adversary}`")]
    AlphaOutOfRange { adversary: String, alpha: String },
    #[error("comparison undecidable at enclosure width 10^-30 near {0}")]
    Undecidable(String),
    #[error("parameters violate {predicate} after rounding: {details}")]
    BrokenParameters { predicate: String, details: String },
    #[error("unknown adversary `{0}`")]
    UnknownAdversary(String),
}

#[derive(Debug, Error)]
pub enum DuelError {
    #[error(transparent)]
    Policy(#[from] PolicyFault),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error("adversary `{0}` exceeded the duel round limit")]
    RunawayAdversary(String),
}

/// What an adversary can observe about one step.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Response {
    Packed,
    Rejected,
    Reserved,
    Finalized,
    /// Revealed after the run had already stopped.
    Ignored,
}

impl Response {
    fn from_action(action: &StepAction<Rat>) -> Self {
        match action {
            StepAction::Pack => Response::Packed,
            StepAction::Reject => Response::Rejected,
            StepAction::Reserve => Response::Reserved,
            StepAction::Finalize(_) => Response::Finalized,
        }
    }
}

/// One observed step of the duel: the item presented and how it was met.
#[derive(Clone, Debug)]
pub struct ObservedStep {
    pub item: Size,
    pub response: Response,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AdversaryMove {
    Present(Size),
    End,
}

/// Parameters of a lower-bound strategy.
#[derive(Clone, Debug)]
pub struct AdversaryParams {
    pub alpha: Alpha,
    pub delta: Rat,
    pub epsilon: Rat,
    pub s: Option<Rat>,
    pub t: Option<Rat>,
    pub u: Option<Rat>,
}

/// An adaptive item source: deterministic in the observed history.
pub trait Adversary {
    fn name(&self) -> &str;

    fn params(&self) -> &AdversaryParams;

    /// The next move, recomputed from the whole history (pure function).
    fn next(&self, history: &[ObservedStep]) -> AdversaryMove;
}

fn size_of(value: Rat) -> Size {
    Size::new(value).expect("adversary item within (0, 1]")
}

fn check_delta(delta: &Rat) -> Result<(), AdversaryError> {
    if !delta.is_positive() || delta > &rat(1, 100) {
        return Err(AdversaryError::DeltaOutOfRange(delta.to_string()));
    }
    Ok(())
}

fn check_epsilon(epsilon: &Rat) -> Result<(), AdversaryError> {
    if !epsilon.is_positive() || epsilon >= &rat(1, 1000) {
        return Err(AdversaryError::EpsilonOutOfRange(epsilon.to_string()));
    }
    Ok(())
}

// ---------------------------------------------------------------- chain --

/// The half-plus-powers bait chain; valid for every positive alpha.
pub struct ChainAdversary {
    params: AdversaryParams,
}

/// Builds the chain strategy. Requires `0 < delta < 1/100` and a positive
/// alpha (the stop rule never fires at alpha = 0).
pub fn chain_adversary(alpha: &Alpha, delta: &Rat) -> Result<ChainAdversary, AdversaryError> {
    check_delta(delta)?;
    if !alpha.value().is_positive() {
        return Err(AdversaryError::AlphaOutOfRange {
            adversary: "chain".to_string(),
            alpha: alpha.value().to_string(),
        });
    }
    Ok(ChainAdversary {
        params: AdversaryParams {
            alpha: alpha.clone(),
            delta: delta.clone(),
            epsilon: Rat::zero(),
            s: None,
            t: None,
            u: None,
        },
    })
}

enum ChainPhase {
    Bait { round: u32, bait_sum: Rat },
    PunishFull,
    PunishMisfit,
    Done,
}

impl ChainAdversary {
    fn bait(&self, round: u32) -> Rat {
        let mut power = self.params.delta.clone();
        for _ in 1..round {
            power *= self.params.delta.clone();
        }
        rat(1, 2) + power
    }

    /// Stop once the fees alone pin the ratio: `alpha * sum >= 1/2`.
    fn fees_suffice(&self, bait_sum: &Rat) -> bool {
        self.params.alpha.value().clone() * bait_sum.clone() >= rat(1, 2)
    }
}

impl Adversary for ChainAdversary {
    fn name(&self) -> &str {
        "chain"
    }

    fn params(&self) -> &AdversaryParams {
        &self.params
    }

    fn next(&self, history: &[ObservedStep]) -> AdversaryMove {
        let mut phase = ChainPhase::Bait {
            round: 1,
            bait_sum: Rat::zero(),
        };
        for step in history {
            phase = match phase {
                ChainPhase::Bait { round, bait_sum } => match step.response {
                    Response::Packed | Response::Finalized => ChainPhase::PunishFull,
                    Response::Rejected => {
                        if round == 1 {
                            ChainPhase::Done
                        } else {
                            ChainPhase::PunishMisfit
                        }
                    }
                    Response::Reserved => {
                        let bait_sum = bait_sum + self.bait(round);
                        if self.fees_suffice(&bait_sum) {
                            ChainPhase::Done
                        } else {
                            ChainPhase::Bait {
                                round: round + 1,
                                bait_sum,
                            }
                        }
                    }
                    Response::Ignored => ChainPhase::Done,
                },
                ChainPhase::PunishFull | ChainPhase::PunishMisfit => ChainPhase::Done,
                ChainPhase::Done => ChainPhase::Done,
            };
        }
        match phase {
            ChainPhase::Bait { round, .. } => AdversaryMove::Present(size_of(self.bait(round))),
            ChainPhase::PunishFull => AdversaryMove::Present(size_of(Rat::one())),
            ChainPhase::PunishMisfit => {
                let delta_sq = self.params.delta.clone() * self.params.delta.clone();
                AdversaryMove::Present(size_of(rat(1, 2) - delta_sq))
            }
            ChainPhase::Done => AdversaryMove::End,
        }
    }
}

// ------------------------------------------------------------ four-item --

/// The escalating three-item tree strategy; valid for `0.225 < alpha < 1`.
pub struct FourItemAdversary {
    params: AdversaryParams,
}

const ROUNDING_DENOMINATOR_EXP: u32 = 30;

fn rounded(value: &RatioValue) -> Rat {
    let denom = BigInt::from(10u32).pow(ROUNDING_DENOMINATOR_EXP);
    round_to_denominator(&value.midpoint(), &denom)
}

/// Builds the four-item strategy. Parameters depend on the regime:
/// below `sqrt(2) - 1` the full `s, t, u` tree (with the epsilon added to
/// `s` only), between `sqrt(2) - 1` and `phi - 1` just `s = 1/(2+alpha)`
/// and `t = 1 - s + epsilon`, above `phi - 1` the single item `s = 1 - alpha`.
pub fn four_item_adversary(
    alpha: &Alpha,
    epsilon: &Rat,
) -> Result<FourItemAdversary, AdversaryError> {
    check_epsilon(epsilon)?;
    let a = alpha.value();
    let invalid = || AdversaryError::AlphaOutOfRange {
        adversary: "four-item".to_string(),
        alpha: a.to_string(),
    };
    if a <= &rat(225, 1000) || a >= &Rat::one() {
        return Err(invalid());
    }
    let undecidable =
        |what: &str| AdversaryError::Undecidable(format!("alpha against {what}"));
    let below_sqrt = match refine_cmp(a, sqrt_two_minus_one) {
        Some(Ordering::Greater) => false,
        Some(_) => true,
        None => return Err(undecidable("sqrt(2) - 1")),
    };
    let (s, t, u) = if below_sqrt {
        let prec = DEFAULT_PREC + 4;
        let q = sqrt_enclosure(&(rat(5, 1) - rat(4, 1) * a.clone()), prec)
            .expect("radicand positive");
        let s0 = (&RatioValue::exact(rat(3, 1)) + &q)
            .recip()
            .expect("3 + q positive");
        let s0 = &s0 * &RatioValue::exact(rat(2, 1));
        let t_iv = &(&q - &RatioValue::exact(Rat::one() - rat(2, 1) * a.clone()))
            * &RatioValue::exact((rat(2, 1) * (Rat::one() + a.clone())).recip());
        let radicand = &(&(&t_iv - &RatioValue::exact(a.clone()))
            * &RatioValue::exact(rat(4, 1)))
            + &RatioValue::exact(a.clone() * a.clone());
        let root_lo = sqrt_enclosure(radicand.lo(), prec).expect("radicand positive");
        let root_hi = sqrt_enclosure(radicand.hi(), prec).expect("radicand positive");
        let root = RatioValue::from_bounds(root_lo.lo().clone(), root_hi.hi().clone());
        let u_iv = &(&root + &RatioValue::exact(a.clone()))
            * &RatioValue::exact(rat(1, 2));
        let s = rounded(&s0) + epsilon.clone();
        (s, Some(rounded(&t_iv)), Some(rounded(&u_iv)))
    } else {
        let below_phi = match refine_cmp(a, golden_ratio_minus_one) {
            Some(Ordering::Less) => true,
            Some(_) => false,
            None => return Err(undecidable("phi - 1")),
        };
        if below_phi {
            let s = (rat(2, 1) + a.clone()).recip();
            let t = Rat::one() - s.clone() + epsilon.clone();
            (s, Some(t), None)
        } else {
            (Rat::one() - a.clone(), None, None)
        }
    };
    let params = AdversaryParams {
        alpha: alpha.clone(),
        delta: Rat::zero(),
        epsilon: epsilon.clone(),
        s: Some(s),
        t,
        u,
    };
    verify_tree_predicates(&params)?;
    Ok(FourItemAdversary { params })
}

/// Re-verifies `s < t < u < 1` and `s + t > 1` on the rounded rationals.
fn verify_tree_predicates(params: &AdversaryParams) -> Result<(), AdversaryError> {
    let broken = |predicate: &str, details: String| AdversaryError::BrokenParameters {
        predicate: predicate.to_string(),
        details,
    };
    let s = params.s.as_ref().expect("s present");
    if !s.is_positive() || s >= &Rat::one() {
        return Err(broken("0 < s < 1", format!("s = {s}")));
    }
    if let Some(t) = &params.t {
        if s >= t {
            return Err(broken("s < t", format!("s = {s}, t = {t}")));
        }
        if t >= &Rat::one() {
            return Err(broken("t < 1", format!("t = {t}")));
        }
        if s.clone() + t.clone() <= Rat::one() {
            return Err(broken("s + t > 1", format!("s = {s}, t = {t}")));
        }
        if let Some(u) = &params.u {
            if t >= u {
                return Err(broken("t < u", format!("t = {t}, u = {u}")));
            }
            if u >= &Rat::one() {
                return Err(broken("u < 1", format!("u = {u}")));
            }
        }
    } else if params.u.is_some() {
        return Err(broken("u requires t", "t absent".to_string()));
    }
    Ok(())
}

enum TreePhase {
    Offer(usize),
    PunishFull,
    Done,
}

impl FourItemAdversary {
    /// The escalating items actually offered, in order.
    pub fn tree_items(&self) -> Vec<Rat> {
        [&self.params.s, &self.params.t, &self.params.u]
            .into_iter()
            .flatten()
            .cloned()
            .collect()
    }

    /// The bound this strategy certifies: the minimum realized ratio over
    /// every policy behavior, as an exact rational (infinite leaves are
    /// skipped). For alpha at least 1/4 this equals the optimal curve up to
    /// terms in epsilon; below 1/4 it stays at the surd expression, which
    /// the bait chain then dominates.
    pub fn guaranteed_bound(&self) -> Rat {
        let alpha = self.params.alpha.value();
        let items = self.tree_items();
        let mut gains_and_opts: Vec<(Rat, Rat)> = Vec::new();
        // take the i-th item: pack it alone, pay fees on the reserve so far
        let mut fees = Rat::zero();
        for (i, item) in items.iter().enumerate() {
            let gain = item.clone() - alpha.clone() * fees.clone();
            gains_and_opts.push((gain, Rat::one()));
            if i + 1 < items.len() {
                // reject the next item instead: sequence ends, pack the best
                // reserved item (the current one), optimum is the rejected one
                let next = &items[i + 1];
                let reserved_fees = fees.clone() + item.clone();
                gains_and_opts.push((
                    item.clone() - alpha.clone() * reserved_fees.clone(),
                    next.clone(),
                ));
            }
            fees += item.clone();
        }
        // reserve everything: pack the largest, optimum is the largest
        let largest = items.last().expect("tree nonempty").clone();
        gains_and_opts.push((largest.clone() - alpha.clone() * fees, largest));
        gains_and_opts
            .into_iter()
            .filter(|(gain, _)| gain.is_positive())
            .map(|(gain, opt)| opt / gain)
            .min()
            .expect("taking the first item always yields a finite ratio")
    }
}

impl Adversary for FourItemAdversary {
    fn name(&self) -> &str {
        "four-item"
    }

    fn params(&self) -> &AdversaryParams {
        &self.params
    }

    fn next(&self, history: &[ObservedStep]) -> AdversaryMove {
        let items = self.tree_items();
        let mut phase = TreePhase::Offer(0);
        for step in history {
            phase = match phase {
                TreePhase::Offer(i) => match step.response {
                    Response::Packed | Response::Finalized => TreePhase::PunishFull,
                    Response::Rejected | Response::Ignored => TreePhase::Done,
                    Response::Reserved => {
                        if i + 1 < items.len() {
                            TreePhase::Offer(i + 1)
                        } else {
                            TreePhase::Done
                        }
                    }
                },
                TreePhase::PunishFull | TreePhase::Done => TreePhase::Done,
            };
        }
        match phase {
            TreePhase::Offer(i) => AdversaryMove::Present(size_of(items[i].clone())),
            TreePhase::PunishFull => AdversaryMove::Present(size_of(Rat::one())),
            TreePhase::Done => AdversaryMove::End,
        }
    }
}

// --------------------------------------------------------- nonrejecting --

/// The repeated-bait strategy against policies that never reject.
pub struct NonrejectingAdversary {
    params: AdversaryParams,
}

/// Builds the nonrejecting strategy; valid for `0 < alpha <= 1`.
pub fn nonrejecting_adversary(
    alpha: &Alpha,
    epsilon: &Rat,
) -> Result<NonrejectingAdversary, AdversaryError> {
    check_epsilon(epsilon)?;
    if !alpha.value().is_positive() {
        return Err(AdversaryError::AlphaOutOfRange {
            adversary: "nonrejecting".to_string(),
            alpha: alpha.value().to_string(),
        });
    }
    Ok(NonrejectingAdversary {
        params: AdversaryParams {
            alpha: alpha.clone(),
            delta: Rat::zero(),
            epsilon: epsilon.clone(),
            s: None,
            t: None,
            u: None,
        },
    })
}

enum PilePhase {
    Offer { reserved: u32 },
    PunishFull,
    Done,
}

impl NonrejectingAdversary {
    fn first_item(&self) -> Rat {
        (rat(2, 1) + self.params.alpha.value().clone()).recip()
    }

    fn repeat_item(&self) -> Rat {
        let a = self.params.alpha.value();
        (Rat::one() + a.clone()) / (rat(2, 1) + a.clone()) + self.params.epsilon.clone()
    }

    /// After `reserved` all-reserve rounds, would ending now already force a
    /// ratio of `2 + alpha - 10 epsilon`? The fees grow with every round, so
    /// this caps the horizon.
    fn end_now(&self, reserved: u32) -> bool {
        let a = self.params.alpha.value();
        let first = self.first_item();
        let repeat = self.repeat_item();
        let best = if reserved >= 2 {
            repeat.clone()
        } else {
            first.clone()
        };
        let fees = first + repeat * Rat::from_integer(BigInt::from(reserved - 1));
        let gain = best.clone() - a.clone() * fees;
        let target = rat(2, 1) + a.clone() - rat(10, 1) * self.params.epsilon.clone();
        if !gain.is_positive() {
            return true;
        }
        best / gain >= target
    }
}

impl Adversary for NonrejectingAdversary {
    fn name(&self) -> &str {
        "nonrejecting"
    }

    fn params(&self) -> &AdversaryParams {
        &self.params
    }

    fn next(&self, history: &[ObservedStep]) -> AdversaryMove {
        let mut phase = PilePhase::Offer { reserved: 0 };
        for step in history {
            phase = match phase {
                PilePhase::Offer { reserved } => match step.response {
                    Response::Packed | Response::Finalized => PilePhase::PunishFull,
                    Response::Rejected | Response::Ignored => PilePhase::Done,
                    Response::Reserved => {
                        let reserved = reserved + 1;
                        if self.end_now(reserved) {
                            PilePhase::Done
                        } else {
                            PilePhase::Offer { reserved }
                        }
                    }
                },
                PilePhase::PunishFull | PilePhase::Done => PilePhase::Done,
            };
        }
        match phase {
            PilePhase::Offer { reserved } => {
                if reserved == 0 {
                    AdversaryMove::Present(size_of(self.first_item()))
                } else {
                    AdversaryMove::Present(size_of(self.repeat_item()))
                }
            }
            PilePhase::PunishFull => AdversaryMove::Present(size_of(Rat::one())),
            PilePhase::Done => AdversaryMove::End,
        }
    }
}

// ----------------------------------------------------------------- duel --

/// Hard cap on duel rounds; every shipped adversary ends far earlier.
const DUEL_ROUND_LIMIT: usize = 100_000;

/// Result of playing one policy against one adversary.
#[derive(Clone, Debug)]
pub struct DuelResult {
    /// Every item the adversary revealed, in order, including items shown
    /// after the policy stopped.
    pub instance: Instance,
    pub trace: Trace,
    pub outcome: Outcome,
    pub opt: Rat,
    pub ratio: CompetitiveRatio,
    /// The sequence ended right after a reject; meaningful for the
    /// nonrejecting strategy, whose guarantee assumes no rejects.
    pub ended_on_reject: bool,
}

/// Plays the policy against the adversary until the sequence ends.
///
/// The optimum is computed over the whole realized instance, items revealed
/// after a finalize included.
pub fn duel(
    policy: &dyn OnlinePolicy<Rat>,
    adversary: &dyn Adversary,
    alpha: &Alpha,
) -> Result<DuelResult, DuelError> {
    let instance_id = format!("{}@{}", adversary.name(), alpha.value());
    let mut run = GameRun::new(alpha.clone(), instance_id.clone(), policy.name());
    let mut observed: Vec<ObservedStep> = Vec::new();
    let mut realized: Vec<Size> = Vec::new();
    loop {
        if observed.len() > DUEL_ROUND_LIMIT {
            return Err(DuelError::RunawayAdversary(adversary.name().to_string()));
        }
        match adversary.next(&observed) {
            AdversaryMove::End => break,
            AdversaryMove::Present(item) => {
                realized.push(item.clone());
                let response = if run.stopped() {
                    Response::Ignored
                } else {
                    let action = run.step(policy, &item)?;
                    Response::from_action(&action)
                };
                observed.push(ObservedStep { item, response });
            }
        }
    }
    let ended_on_reject = matches!(
        observed.last(),
        Some(step) if step.response == Response::Rejected
    );
    let (trace, outcome) = run.finish(policy)?;
    let instance = Instance::new(instance_id, realized);
    let opt = opt_gain(&instance)?;
    let ratio = CompetitiveRatio::from_parts(&opt, &outcome.gain, instance.is_empty());
    Ok(DuelResult {
        instance,
        trace,
        outcome,
        opt,
        ratio,
        ended_on_reject,
    })
}

/// The adversary roster exposed on the command line.
pub const ADVERSARIES: [&str; 3] = ["chain", "four-item", "nonrejecting"];

/// Builds an adversary by its public name.
pub fn adversary_by_name(
    name: &str,
    alpha: &Alpha,
    delta: &Rat,
    epsilon: &Rat,
) -> Result<Box<dyn Adversary>, AdversaryError> {
    match name {
        "chain" => Ok(Box::new(chain_adversary(alpha, delta)?)),
        "four-item" => Ok(Box::new(four_item_adversary(alpha, epsilon)?)),
        "nonrejecting" => Ok(Box::new(nonrejecting_adversary(alpha, epsilon)?)),
        other => Err(AdversaryError::UnknownAdversary(other.to_string())),
    }
}
