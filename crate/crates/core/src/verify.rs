//! Trace verifiers for the structural bounds the threshold policies obey.
//!
//! Each check takes finished traces tagged with the policy that produced
//! them and reports pass/fail with a concrete witness on failure. The
//! checks:
//!
//! * `nonrejection`: a threshold policy never rejects before stopping.
//! * `reserve-cap-low`: under the `1/(2+alpha)` trigger, the reserve total
//!   stays strictly below `1/((2+alpha)(1-alpha))` at every step.
//! * `reserve-cap-high`: under the `1-alpha` trigger, the reserve total
//!   never exceeds 1.
//! * `large-count`: under the `1/(2+alpha)` trigger, the reserve holds at
//!   most one large item up to the cubic breakpoint (~0.445) and at most
//!   two up to 1/2.
//! * [`sorted_prefix_check`]: sorting the items before the trigger in
//!   decreasing order leaves the trigger index and the gain unchanged.

use std::cmp::Ordering;

use num_traits::One;
use thiserror::Error;

use crate::enclosure::{large_count_breakpoint, refine_cmp};
use crate::model::{run_on_instance, PolicyFault, RunState};
use crate::policy::{classify_item, ItemClass, Policy, PolicyKind};
use crate::rational::rat;
use crate::{Alpha, Instance, Rat, Trace};

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error("no trigger occurred on this instance")]
    NotApplicable,
    #[error("policy `{0}` is not a threshold policy")]
    NotThresholdPolicy(String),
    #[error(transparent)]
    Fault(#[from] PolicyFault),
}

/// Concrete violating values carried by a failed report.
#[derive(Clone, Debug)]
pub struct Witness {
    pub step: usize,
    pub packed_total: Rat,
    pub reserved_total: Rat,
    pub alpha: Rat,
    pub detail: String,
}

/// Outcome of one check on one trace.
#[derive(Clone, Debug)]
pub struct VerificationReport {
    pub check: String,
    pub subject: String,
    pub pass: bool,
    pub witness: Option<Witness>,
}

impl VerificationReport {
    fn pass(check: &str, subject: String) -> Self {
        Self {
            check: check.to_string(),
            subject,
            pass: true,
            witness: None,
        }
    }

    fn fail(check: &str, subject: String, witness: Witness) -> Self {
        Self {
            check: check.to_string(),
            subject,
            pass: false,
            witness: Some(witness),
        }
    }
}

fn subject_of(policy: &Policy, trace: &Trace) -> String {
    format!("{} on {}", policy.name(), trace.instance_id)
}

fn witness_at(state: &RunState<Rat>, alpha: &Alpha, detail: String) -> Witness {
    Witness {
        step: state.step,
        packed_total: state.packed_total.clone(),
        reserved_total: state.reserved_total.clone(),
        alpha: alpha.value().clone(),
        detail,
    }
}

fn states_of(trace: &Trace) -> impl Iterator<Item = &RunState<Rat>> {
    trace
        .steps
        .iter()
        .map(|s| &s.state)
        .chain(std::iter::once(&trace.final_state))
}

fn check_reserve_cap(
    policy: &Policy,
    trace: &Trace,
    alpha: &Alpha,
    check: &str,
    cap: &Rat,
    strict: bool,
) -> VerificationReport {
    let subject = subject_of(policy, trace);
    for state in states_of(trace) {
        let violated = if strict {
            &state.reserved_total >= cap
        } else {
            &state.reserved_total > cap
        };
        if violated {
            let relation = if strict { "<" } else { "<=" };
            let detail = format!(
                "reserve total {} breaks {} {cap}",
                state.reserved_total, relation
            );
            return VerificationReport::fail(check, subject, witness_at(state, alpha, detail));
        }
    }
    VerificationReport::pass(check, subject)
}

fn check_nonrejection(policy: &Policy, trace: &Trace, alpha: &Alpha) -> VerificationReport {
    let subject = subject_of(policy, trace);
    for step in &trace.steps {
        if matches!(step.action, crate::model::StepAction::Reject) {
            let detail = format!("rejected item {}", step.item);
            return VerificationReport::fail(
                "nonrejection",
                subject,
                witness_at(&step.state, alpha, detail),
            );
        }
    }
    VerificationReport::pass("nonrejection", subject)
}

fn check_large_count(policy: &Policy, trace: &Trace, alpha: &Alpha) -> Option<VerificationReport> {
    // the counting argument covers alpha up to 1/2
    if alpha.value() > &rat(1, 2) {
        return None;
    }
    let subject = subject_of(policy, trace);
    let limit = match refine_cmp(alpha.value(), large_count_breakpoint) {
        Some(Ordering::Greater) => 2usize,
        Some(_) => 1usize,
        None => {
            let detail = "alpha undecidable against the cubic breakpoint".to_string();
            return Some(VerificationReport::fail(
                "large-count",
                subject,
                witness_at(&trace.final_state, alpha, detail),
            ));
        }
    };
    let mut larges = 0usize;
    for item in &trace.final_state.reserved {
        match classify_item(item, alpha) {
            Ok(ItemClass::Large) => larges += 1,
            Ok(ItemClass::Small) => {}
            Err(e) => {
                let detail = format!("classification failed: {e}");
                return Some(VerificationReport::fail(
                    "large-count",
                    subject,
                    witness_at(&trace.final_state, alpha, detail),
                ));
            }
        }
    }
    if larges > limit {
        let detail = format!("{larges} large items reserved, limit {limit}");
        return Some(VerificationReport::fail(
            "large-count",
            subject,
            witness_at(&trace.final_state, alpha, detail),
        ));
    }
    Some(VerificationReport::pass("large-count", subject))
}

/// Runs every applicable bound check over the tagged traces.
///
/// Failures are reports, not errors; checks that do not apply to a trace's
/// policy are simply omitted.
pub fn verify_traces<'a>(
    runs: impl IntoIterator<Item = (&'a Policy, &'a Trace)>,
    alpha: &Alpha,
) -> Vec<VerificationReport> {
    let mut reports = Vec::new();
    let low_trigger = (rat(2, 1) + alpha.value().clone()).recip();
    let high_trigger = alpha.complement();
    for (policy, trace) in runs {
        if policy.kind() != PolicyKind::ThresholdPolicy {
            continue;
        }
        reports.push(check_nonrejection(policy, trace, alpha));
        match policy.exact_threshold() {
            Some(t) if t == &low_trigger => {
                let cap = ((rat(2, 1) + alpha.value().clone()) * alpha.complement()).recip();
                reports.push(check_reserve_cap(
                    policy,
                    trace,
                    alpha,
                    "reserve-cap-low",
                    &cap,
                    true,
                ));
                if let Some(report) = check_large_count(policy, trace, alpha) {
                    reports.push(report);
                }
            }
            Some(t) if t == &high_trigger => {
                reports.push(check_reserve_cap(
                    policy,
                    trace,
                    alpha,
                    "reserve-cap-high",
                    &Rat::one(),
                    false,
                ));
            }
            _ => {}
        }
    }
    reports
}

/// Metamorphic check: sorting the pre-trigger items in decreasing order
/// must trigger at the same index with the identical gain.
pub fn sorted_prefix_check(
    policy: &Policy,
    instance: &Instance,
    alpha: &Alpha,
) -> Result<VerificationReport, VerifyError> {
    if policy.kind() != PolicyKind::ThresholdPolicy {
        return Err(VerifyError::NotThresholdPolicy(policy.name().to_string()));
    }
    let (trace, outcome) = run_on_instance(policy, instance, alpha)?;
    let trigger = trace.trigger_index().ok_or(VerifyError::NotApplicable)?;
    let mut items = instance.items().to_vec();
    items[..trigger - 1].sort_by(|a, b| b.cmp(a));
    let sorted_instance = Instance::new(format!("{}-sorted", instance.id()), items);
    let (sorted_trace, sorted_outcome) = run_on_instance(policy, &sorted_instance, alpha)?;
    let subject = format!("{} on {}", policy.name(), instance.id());
    let sorted_trigger = sorted_trace.trigger_index();
    if sorted_trigger != Some(trigger) || sorted_outcome.gain != outcome.gain {
        let detail = format!(
            "trigger {:?} -> {:?}, gain {} -> {}",
            trigger, sorted_trigger, outcome.gain, sorted_outcome.gain
        );
        return Ok(VerificationReport::fail(
            "sorted-prefix",
            subject,
            witness_at(&sorted_trace.final_state, alpha, detail),
        ));
    }
    Ok(VerificationReport::pass("sorted-prefix", subject))
}
