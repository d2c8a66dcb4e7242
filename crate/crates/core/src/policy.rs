//! The online policies and the optimal competitive-ratio curve.
//!
//! Three families matter here:
//!
//! * `alg1`: a rejection-capable policy for small reservation factors. It
//!   reserves while the prospective gain stays below its target `1/rho`,
//!   stops as soon as a good packing is certain, and otherwise rejects.
//! * threshold policies (`threshold-2a`, `threshold-1a`): reserve every item
//!   until `x + (1 - alpha) R` reaches a trigger threshold (`1/(2+alpha)`
//!   resp. `1-alpha`), then pack the seen items optimally and stop. They
//!   never reject before stopping.
//! * foils (`take-first-fit`, `reject-all`): dominated baselines used by the
//!   harness to exercise every adversary branch.
//!
//! [`rho_star`] is the optimal ratio curve: 2 up to 1/4, then
//! `(1 + sqrt(5 - 4a)) / (2 (1 - a))` up to `sqrt(2) - 1`, then `2 + a` up
//! to `phi - 1`, then `1 / (1 - a)`. Irrational values come back as
//! enclosures; piecewise membership at the irrational breakpoints is decided
//! by enclosure comparison.

use std::cmp::Ordering;

use num_traits::{One, Signed};
use thiserror::Error;

use crate::enclosure::{
    golden_ratio_minus_one, refine_cmp, sqrt_enclosure, sqrt_two_minus_one, RatioValue,
    DEFAULT_PREC,
};
use crate::model::{OnlinePolicy, PolicyFailure, RunState, StepAction};
use crate::oracle::{popt_within, OracleError};
use crate::rational::{pow10, rat};
use crate::{Alpha, Rat, Size};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PolicyError {
    #[error("alpha {alpha} outside the domain of {what}")]
    OutOfDomain { what: String, alpha: String },
    #[error("comparison undecidable at enclosure width 10^-30 near {context}")]
    PrecisionExhausted { context: String },
    #[error("unknown policy `{0}`")]
    UnknownPolicy(String),
}

/// Families of packaged decision rules.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PolicyKind {
    Alg1,
    ThresholdPolicy,
    TakeFirstFit,
    RejectAll,
}

/// Parameters of a packaged policy.
///
/// `rho` is the target competitive ratio where one is proven, `mu` the
/// reserve cap `1/(rho (1 - alpha))` used by `alg1`, and `threshold` the
/// stop trigger (for `alg1` this is `1/rho`). Foils carry none of them.
#[derive(Clone, Debug)]
pub struct PolicyConfig {
    pub alpha: Alpha,
    pub kind: PolicyKind,
    pub rho: Option<RatioValue>,
    pub mu: Option<RatioValue>,
    pub threshold: Option<RatioValue>,
}

/// A named online decision rule; decisions are pure in `(state, item)`.
#[derive(Clone, Debug)]
pub struct Policy {
    name: String,
    pub config: PolicyConfig,
}

impl Policy {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> PolicyKind {
        self.config.kind
    }

    pub fn alpha(&self) -> &Alpha {
        &self.config.alpha
    }

    /// The exact trigger threshold of a threshold policy, when rational.
    pub fn exact_threshold(&self) -> Option<&Rat> {
        match (&self.config.kind, &self.config.threshold) {
            (PolicyKind::ThresholdPolicy, Some(t)) if t.is_exact() => Some(t.lo()),
            _ => None,
        }
    }
}

fn undecidable(context: &str) -> PolicyFailure {
    PolicyFailure::PrecisionExhausted(context.to_string())
}

fn oracle_failure(e: OracleError) -> PolicyFailure {
    PolicyFailure::Other(e.to_string())
}

/// Best packing of the reserve plus the current item within what still fits.
fn finalize_best(
    state: &RunState<Rat>,
    item: Option<&Size>,
) -> Result<StepAction<Rat>, PolicyFailure> {
    let mut pool = state.reserved.clone();
    if let Some(x) = item {
        pool.push(x.clone());
    }
    let packing = popt_within(&pool, &state.remaining_capacity()).map_err(oracle_failure)?;
    Ok(StepAction::Finalize(packing.selection))
}

impl OnlinePolicy<Rat> for Policy {
    fn name(&self) -> &str {
        &self.name
    }

    fn decide(&self, state: &RunState<Rat>, item: &Size) -> Result<StepAction<Rat>, PolicyFailure> {
        let alpha = &self.config.alpha;
        let x = item.value();
        match self.config.kind {
            PolicyKind::RejectAll => Ok(StepAction::Reject),
            PolicyKind::TakeFirstFit => {
                if state.packed_total.clone() + x.clone() <= Rat::one() {
                    Ok(StepAction::Pack)
                } else {
                    Ok(StepAction::Reject)
                }
            }
            PolicyKind::ThresholdPolicy => {
                let threshold = self.config.threshold.as_ref().expect("threshold present");
                let prospective = x.clone() + alpha.complement() * state.reserved_total.clone();
                match threshold.cmp_rat(&prospective) {
                    Some(Ordering::Less) => Ok(StepAction::Reserve),
                    Some(_) => finalize_best(state, Some(item)),
                    None => Err(undecidable("threshold trigger")),
                }
            }
            PolicyKind::Alg1 => {
                let inv_rho = self.config.threshold.as_ref().expect("1/rho present");
                let mu = self.config.mu.as_ref().expect("mu present");
                // reserve while the prospective gain stays below 1/rho
                let prospective =
                    x.clone() + state.reserved_total.clone() * alpha.complement();
                match inv_rho.cmp_rat(&prospective) {
                    Some(Ordering::Less) => return Ok(StepAction::Reserve),
                    Some(_) => {}
                    None => return Err(undecidable("reserve trigger")),
                }
                // everything seen fits: pack it all and stop
                if x.clone() + state.reserved_total.clone() <= Rat::one() {
                    return finalize_best(state, Some(item));
                }
                // only small reserved items: enough of them survive packing
                let cap = &RatioValue::exact(Rat::one()) - mu;
                let mut all_small = true;
                for reserved in &state.reserved {
                    match cap.cmp_rat(reserved.value()) {
                        Some(Ordering::Greater) => {
                            all_small = false;
                            break;
                        }
                        Some(_) => {}
                        None => return Err(undecidable("reserve size against 1 - mu")),
                    }
                }
                if all_small {
                    return finalize_best(state, Some(item));
                }
                // last chance: the best packing already meets the target
                let mut pool = state.reserved.clone();
                pool.push(item.clone());
                let packing =
                    popt_within(&pool, &state.remaining_capacity()).map_err(oracle_failure)?;
                let achieved =
                    packing.total.clone() - alpha.value().clone() * state.reserved_total.clone();
                match inv_rho.cmp_rat(&achieved) {
                    Some(Ordering::Less) => Ok(StepAction::Reject),
                    Some(_) => Ok(StepAction::Finalize(packing.selection)),
                    None => Err(undecidable("packing gain against 1/rho")),
                }
            }
        }
    }

    fn final_selection(&self, state: &RunState<Rat>) -> Result<Vec<Size>, PolicyFailure> {
        match self.config.kind {
            PolicyKind::RejectAll | PolicyKind::TakeFirstFit => Ok(Vec::new()),
            PolicyKind::ThresholdPolicy | PolicyKind::Alg1 => {
                match finalize_best(state, None)? {
                    StepAction::Finalize(selection) => Ok(selection),
                    _ => unreachable!("finalize_best always finalizes"),
                }
            }
        }
    }
}

fn out_of_domain(what: &str, alpha: &Alpha) -> PolicyError {
    PolicyError::OutOfDomain {
        what: what.to_string(),
        alpha: alpha.value().to_string(),
    }
}

fn open_unit_interval(what: &str, alpha: &Alpha) -> Result<(), PolicyError> {
    let a = alpha.value();
    if !a.is_positive() || a >= &Rat::one() {
        Err(out_of_domain(what, alpha))
    } else {
        Ok(())
    }
}

/// The surd piece `(1 + sqrt(5 - 4a)) / (2 (1 - a))` at a rational alpha.
fn surd_piece(alpha: &Rat, prec: u32) -> RatioValue {
    let radicand = rat(5, 1) - rat(4, 1) * alpha.clone();
    let scale = (rat(2, 1) * (Rat::one() - alpha.clone())).recip();
    let width = pow10(prec).recip();
    let mut sqrt_prec = prec;
    loop {
        let root = sqrt_enclosure(&radicand, sqrt_prec).expect("radicand positive");
        let value = &(&root + &RatioValue::exact(Rat::one())) * &RatioValue::exact(scale.clone());
        if value.width() <= width {
            return value;
        }
        sqrt_prec += 4;
    }
}

/// Same piece evaluated over an interval of alphas (for continuity checks).
pub fn surd_piece_on(alpha: &RatioValue, prec: u32) -> RatioValue {
    let width = pow10(prec).recip();
    let mut sqrt_prec = prec;
    loop {
        let radicand = &RatioValue::exact(rat(5, 1))
            - &(&RatioValue::exact(rat(4, 1)) * alpha);
        let root_lo = sqrt_enclosure(radicand.lo(), sqrt_prec).expect("radicand positive");
        let root_hi = sqrt_enclosure(radicand.hi(), sqrt_prec).expect("radicand positive");
        let root = RatioValue::from_bounds(root_lo.lo().clone(), root_hi.hi().clone());
        let numerator = &root + &RatioValue::exact(Rat::one());
        let denominator = &(&RatioValue::exact(Rat::one()) - alpha)
            * &RatioValue::exact(rat(2, 1));
        let value = numerator.div(&denominator).expect("denominator positive");
        if value.width() <= width {
            return value;
        }
        sqrt_prec += 4;
    }
}

/// The linear piece `2 + a` over an interval of alphas.
pub fn linear_piece_on(alpha: &RatioValue) -> RatioValue {
    &RatioValue::exact(rat(2, 1)) + alpha
}

/// The divergent piece `1 / (1 - a)` over an interval of alphas.
pub fn inverse_piece_on(alpha: &RatioValue) -> RatioValue {
    (&RatioValue::exact(Rat::one()) - alpha)
        .recip()
        .expect("1 - alpha positive")
}

/// Optimal competitive ratio at `alpha`, as an enclosure of width
/// at most `10^-prec`.
pub fn rho_star_prec(alpha: &Alpha, prec: u32) -> Result<RatioValue, PolicyError> {
    open_unit_interval("the ratio curve", alpha)?;
    let a = alpha.value();
    if a <= &rat(1, 4) {
        return Ok(RatioValue::exact(rat(2, 1)));
    }
    match refine_cmp(a, sqrt_two_minus_one) {
        Some(Ordering::Greater) => {}
        Some(_) => return Ok(surd_piece(a, prec)),
        None => {
            return Err(PolicyError::PrecisionExhausted {
                context: "alpha against sqrt(2) - 1".to_string(),
            })
        }
    }
    match refine_cmp(a, golden_ratio_minus_one) {
        Some(Ordering::Less) => Ok(RatioValue::exact(rat(2, 1) + a.clone())),
        Some(_) => Ok(RatioValue::exact((Rat::one() - a.clone()).recip())),
        None => Err(PolicyError::PrecisionExhausted {
            context: "alpha against phi - 1".to_string(),
        }),
    }
}

/// [`rho_star_prec`] at the default width `10^-30`.
pub fn rho_star(alpha: &Alpha) -> Result<RatioValue, PolicyError> {
    rho_star_prec(alpha, DEFAULT_PREC)
}

/// The rejection-capable policy for `0 < alpha <= sqrt(2) - 1`.
///
/// Its target ratio is `max(2, (1 + sqrt(5 - 4a)) / (2 (1 - a)))`; the
/// reserve trigger compares against `1/rho` and the reserve cap against
/// `1 - mu` with `mu = 1/(rho (1 - alpha))`.
pub fn make_policy_alg1(alpha: &Alpha) -> Result<Policy, PolicyError> {
    open_unit_interval("alg1", alpha)?;
    match refine_cmp(alpha.value(), sqrt_two_minus_one) {
        Some(Ordering::Greater) => return Err(out_of_domain("alg1", alpha)),
        Some(_) => {}
        None => {
            return Err(PolicyError::PrecisionExhausted {
                context: "alpha against sqrt(2) - 1".to_string(),
            })
        }
    }
    let rho = if alpha.value() <= &rat(1, 4) {
        RatioValue::exact(rat(2, 1))
    } else {
        surd_piece(alpha.value(), DEFAULT_PREC)
    };
    let inv_rho = rho.recip().expect("rho >= 2");
    let mu = (&rho * &RatioValue::exact(alpha.complement()))
        .recip()
        .expect("rho (1 - alpha) positive");
    Ok(Policy {
        name: "alg1".to_string(),
        config: PolicyConfig {
            alpha: alpha.clone(),
            kind: PolicyKind::Alg1,
            rho: Some(rho),
            mu: Some(mu),
            threshold: Some(inv_rho),
        },
    })
}

/// A nonrejecting policy that reserves until `x + (1 - alpha) R` reaches the
/// threshold, then packs the seen items optimally and stops.
///
/// Requires `0 < threshold <= 1`.
pub fn make_policy_threshold(alpha: &Alpha, threshold: RatioValue, name: &str) -> Policy {
    assert!(
        threshold.lo().is_positive() && threshold.hi() <= &Rat::one(),
        "threshold outside (0, 1]"
    );
    Policy {
        name: name.to_string(),
        config: PolicyConfig {
            alpha: alpha.clone(),
            kind: PolicyKind::ThresholdPolicy,
            rho: None,
            mu: None,
            threshold: Some(threshold),
        },
    }
}

fn threshold_two_plus_alpha(alpha: &Alpha) -> Policy {
    let trigger = (rat(2, 1) + alpha.value().clone()).recip();
    let mut policy = make_policy_threshold(alpha, RatioValue::exact(trigger), "threshold-2a");
    policy.config.rho = Some(RatioValue::exact(rat(2, 1) + alpha.value().clone()));
    policy
}

fn threshold_one_minus_alpha(alpha: &Alpha) -> Policy {
    let trigger = alpha.complement();
    let mut policy = make_policy_threshold(alpha, RatioValue::exact(trigger), "threshold-1a");
    policy.config.rho = Some(RatioValue::exact(alpha.complement().recip()));
    policy
}

fn take_first_fit(alpha: &Alpha) -> Policy {
    Policy {
        name: "take-first-fit".to_string(),
        config: PolicyConfig {
            alpha: alpha.clone(),
            kind: PolicyKind::TakeFirstFit,
            rho: None,
            mu: None,
            threshold: None,
        },
    }
}

fn reject_all(alpha: &Alpha) -> Policy {
    Policy {
        name: "reject-all".to_string(),
        config: PolicyConfig {
            alpha: alpha.clone(),
            kind: PolicyKind::RejectAll,
            rho: None,
            mu: None,
            threshold: None,
        },
    }
}

/// The ratio-optimal policy for each regime: `alg1` up to `sqrt(2) - 1`,
/// `threshold-2a` up to `phi - 1`, `threshold-1a` beyond.
pub fn select_policy(alpha: &Alpha) -> Result<Policy, PolicyError> {
    open_unit_interval("policy selection", alpha)?;
    match refine_cmp(alpha.value(), sqrt_two_minus_one) {
        Some(Ordering::Greater) => {}
        Some(_) => return make_policy_alg1(alpha),
        None => {
            return Err(PolicyError::PrecisionExhausted {
                context: "alpha against sqrt(2) - 1".to_string(),
            })
        }
    }
    match refine_cmp(alpha.value(), golden_ratio_minus_one) {
        Some(Ordering::Less) => Ok(threshold_two_plus_alpha(alpha)),
        Some(_) => Ok(threshold_one_minus_alpha(alpha)),
        None => Err(PolicyError::PrecisionExhausted {
            context: "alpha against phi - 1".to_string(),
        }),
    }
}

/// The policy catalog exposed on the command line (besides `auto`).
pub const CATALOG: [&str; 5] = [
    "alg1",
    "reject-all",
    "take-first-fit",
    "threshold-1a",
    "threshold-2a",
];

/// Builds a catalog policy (or `auto`) by its public name.
pub fn policy_by_name(name: &str, alpha: &Alpha) -> Result<Policy, PolicyError> {
    match name {
        "alg1" => make_policy_alg1(alpha),
        "threshold-2a" => Ok(threshold_two_plus_alpha(alpha)),
        "threshold-1a" => Ok(threshold_one_minus_alpha(alpha)),
        "take-first-fit" => Ok(take_first_fit(alpha)),
        "reject-all" => Ok(reject_all(alpha)),
        "auto" => select_policy(alpha),
        other => Err(PolicyError::UnknownPolicy(other.to_string())),
    }
}

/// One scripted move: what to do with the n-th presented item.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScriptedMove {
    /// Finalize with the best packing of the reserve plus the item.
    Take,
    Reject,
    Reserve,
}

/// A policy that plays a fixed decision sequence; positions beyond the
/// script reject. Used to enumerate every behavior against an adversary.
#[derive(Clone, Debug)]
pub struct ScriptedPolicy {
    name: String,
    script: Vec<ScriptedMove>,
}

impl ScriptedPolicy {
    pub fn new(script: Vec<ScriptedMove>) -> Self {
        let name = format!(
            "scripted-{}",
            script
                .iter()
                .map(|m| match m {
                    ScriptedMove::Take => 't',
                    ScriptedMove::Reject => 'x',
                    ScriptedMove::Reserve => 'r',
                })
                .collect::<String>()
        );
        Self { name, script }
    }
}

impl OnlinePolicy<Rat> for ScriptedPolicy {
    fn name(&self) -> &str {
        &self.name
    }

    fn decide(&self, state: &RunState<Rat>, item: &Size) -> Result<StepAction<Rat>, PolicyFailure> {
        match self.script.get(state.step).copied() {
            Some(ScriptedMove::Take) => finalize_best(state, Some(item)),
            Some(ScriptedMove::Reserve) => Ok(StepAction::Reserve),
            Some(ScriptedMove::Reject) | None => Ok(StepAction::Reject),
        }
    }

    fn final_selection(&self, state: &RunState<Rat>) -> Result<Vec<Size>, PolicyFailure> {
        match finalize_best(state, None)? {
            StepAction::Finalize(selection) => Ok(selection),
            _ => unreachable!("finalize_best always finalizes"),
        }
    }
}

/// Item classes for reserve counting under a low-threshold policy.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ItemClass {
    Small,
    Large,
}

/// The small/large boundary `(1 - a - a^2) / ((2 + a)(1 - a))`.
///
/// Only defined up to `phi - 1`, where the numerator reaches zero.
pub fn small_item_bound(alpha: &Alpha) -> Result<Rat, PolicyError> {
    let a = alpha.value();
    if !a.is_positive() {
        return Err(out_of_domain("item classification", alpha));
    }
    match refine_cmp(a, golden_ratio_minus_one) {
        Some(Ordering::Greater) => return Err(out_of_domain("item classification", alpha)),
        Some(_) => {}
        None => {
            return Err(PolicyError::PrecisionExhausted {
                context: "alpha against phi - 1".to_string(),
            })
        }
    }
    let numerator = Rat::one() - a.clone() - a.clone() * a.clone();
    let denominator = (rat(2, 1) + a.clone()) * (Rat::one() - a.clone());
    Ok(numerator / denominator)
}

/// Small means strictly below the bound; everything else is large.
pub fn classify_item(size: &Size, alpha: &Alpha) -> Result<ItemClass, PolicyError> {
    let bound = small_item_bound(alpha)?;
    if size.value() < &bound {
        Ok(ItemClass::Small)
    } else {
        Ok(ItemClass::Large)
    }
}
