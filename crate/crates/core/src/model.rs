//! The online game: items arrive one at a time, each is packed, rejected,
//! or reserved at a fee, with a final packing over the reserve at the end.
//!
//! A run owns a [`RunState`] holding the packed total `t`, the reserved
//! multiset with total `R`, and a stopped flag. The gain of a finished run
//! is `t - alpha * R`; reservation fees are charged for every reserved item
//! whether or not it is packed in the end. Finalizing mid-run stops the run
//! and later items are ignored (they still count toward the offline
//! optimum).
//!
//! Everything here is generic over an exact [`Scalar`]; the policies and
//! adversaries elsewhere in the crate instantiate it with arbitrary-precision
//! rationals.

use std::fmt;
use std::path::Path;

use thiserror::Error;

use crate::scalar::{total, Scalar};
use crate::Rat;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ModelError {
    #[error("size at index {index} outside (0, 1]")]
    SizeOutOfRange { index: usize },
    #[error("alpha outside [0, 1]")]
    AlphaOutOfRange,
    #[error("packing would exceed the knapsack capacity")]
    CapacityExceeded,
    #[error("run already stopped")]
    AlreadyStopped,
    #[error("finalize selection is not available from the reserve")]
    InvalidSelection,
    #[error("replayed state diverges from the recorded state at step {step}")]
    ReplayMismatch { step: usize },
}

/// A policy decision that could not be made.
#[derive(Debug, Error)]
pub enum PolicyFailure {
    #[error("comparison undecidable at enclosure width 10^-30: {0}")]
    PrecisionExhausted(String),
    #[error("{0}")]
    Other(String),
}

/// A run aborted by a defective policy (not an input error).
#[derive(Debug, Error)]
#[error("policy `{policy}` fault at step {step}: {message}")]
pub struct PolicyFault {
    pub policy: String,
    pub step: usize,
    pub message: String,
}

/// An item size: a fraction of the unit knapsack capacity in (0, 1].
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Size<S: Scalar>(S);

impl<S: Scalar> Size<S> {
    pub fn new(value: S) -> Option<Self> {
        if value.is_positive() && value <= S::one() {
            Some(Self(value))
        } else {
            None
        }
    }

    pub fn value(&self) -> &S {
        &self.0
    }

    pub fn into_value(self) -> S {
        self.0
    }
}

impl<S: Scalar> fmt::Debug for Size<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl<S: Scalar> fmt::Display for Size<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// The reservation factor: the fee per unit of reserved size, in [0, 1].
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Alpha<S: Scalar>(S);

impl<S: Scalar> Alpha<S> {
    pub fn new(value: S) -> Result<Self, ModelError> {
        if value.is_negative() || value > S::one() {
            Err(ModelError::AlphaOutOfRange)
        } else {
            Ok(Self(value))
        }
    }

    pub fn value(&self) -> &S {
        &self.0
    }

    /// `1 - alpha`, the retained fraction of a reserved-then-packed item.
    pub fn complement(&self) -> S {
        S::one() - self.0.clone()
    }
}

impl<S: Scalar> fmt::Display for Alpha<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A request sequence. Order is semantically meaningful; empty is legal.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Instance<S: Scalar> {
    id: String,
    items: Vec<Size<S>>,
}

impl<S: Scalar> Instance<S> {
    pub fn new(id: impl Into<String>, items: Vec<Size<S>>) -> Self {
        Self {
            id: id.into(),
            items,
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn items(&self) -> &[Size<S>] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }
}

/// Checks every size for membership in (0, 1] and keeps the order.
pub fn validate_instance<S: Scalar>(
    id: impl Into<String>,
    sizes: &[S],
) -> Result<Instance<S>, ModelError> {
    let mut items = Vec::with_capacity(sizes.len());
    for (index, value) in sizes.iter().enumerate() {
        let size = Size::new(value.clone()).ok_or(ModelError::SizeOutOfRange { index })?;
        items.push(size);
    }
    Ok(Instance::new(id, items))
}

/// One online decision.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StepAction<S: Scalar> {
    /// Pack the current item into the knapsack and keep running.
    Pack,
    /// Discard the current item irrevocably.
    Reject,
    /// Reserve the current item at cost `alpha * size`.
    Reserve,
    /// Pack the selection (a sub-multiset of the reserve plus the current
    /// item), then stop; later items are ignored.
    Finalize(Vec<Size<S>>),
}

impl<S: Scalar> StepAction<S> {
    pub fn is_finalize(&self) -> bool {
        matches!(self, StepAction::Finalize(_))
    }
}

/// State of a run after some prefix of the sequence.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunState<S: Scalar> {
    pub step: usize,
    pub packed_total: S,
    /// Reserved multiset, kept sorted ascending. Items stay here even after
    /// being packed by a finalize: the reservation fee is already owed.
    pub reserved: Vec<Size<S>>,
    pub reserved_total: S,
    pub stopped: bool,
}

impl<S: Scalar> RunState<S> {
    pub fn initial() -> Self {
        Self {
            step: 0,
            packed_total: S::zero(),
            reserved: Vec::new(),
            reserved_total: S::zero(),
            stopped: false,
        }
    }

    pub fn remaining_capacity(&self) -> S {
        S::one() - self.packed_total.clone()
    }
}

fn take_from_pool<S: Scalar>(pool: &mut Vec<Size<S>>, wanted: &Size<S>) -> bool {
    match pool.iter().position(|x| x == wanted) {
        Some(pos) => {
            pool.remove(pos);
            true
        }
        None => false,
    }
}

/// Applies one decision about the current item to the state.
pub fn apply_action<S: Scalar>(
    state: &RunState<S>,
    item: &Size<S>,
    action: &StepAction<S>,
) -> Result<RunState<S>, ModelError> {
    if state.stopped {
        return Err(ModelError::AlreadyStopped);
    }
    let mut next = state.clone();
    next.step += 1;
    match action {
        StepAction::Pack => {
            let packed = next.packed_total + item.value().clone();
            if packed > S::one() {
                return Err(ModelError::CapacityExceeded);
            }
            next.packed_total = packed;
        }
        StepAction::Reject => {}
        StepAction::Reserve => {
            let pos = next
                .reserved
                .binary_search(item)
                .unwrap_or_else(|insert_at| insert_at);
            next.reserved.insert(pos, item.clone());
            next.reserved_total = next.reserved_total + item.value().clone();
        }
        StepAction::Finalize(selection) => {
            let mut pool = next.reserved.clone();
            pool.push(item.clone());
            for chosen in selection {
                if !take_from_pool(&mut pool, chosen) {
                    return Err(ModelError::InvalidSelection);
                }
            }
            let packed = next.packed_total + total(selection.iter().map(Size::value));
            if packed > S::one() {
                return Err(ModelError::CapacityExceeded);
            }
            next.packed_total = packed;
            next.stopped = true;
        }
    }
    Ok(next)
}

/// Packs a sub-multiset of the reserve once the sequence has ended.
pub fn apply_final_selection<S: Scalar>(
    state: &RunState<S>,
    selection: &[Size<S>],
) -> Result<RunState<S>, ModelError> {
    if state.stopped {
        return Err(ModelError::AlreadyStopped);
    }
    let mut next = state.clone();
    let mut pool = next.reserved.clone();
    for chosen in selection {
        if !take_from_pool(&mut pool, chosen) {
            return Err(ModelError::InvalidSelection);
        }
    }
    let packed = next.packed_total + total(selection.iter().map(Size::value));
    if packed > S::one() {
        return Err(ModelError::CapacityExceeded);
    }
    next.packed_total = packed;
    next.stopped = true;
    Ok(next)
}

/// `packed - alpha * reserved`: may be negative.
pub fn final_gain<S: Scalar>(packed_total: &S, reserved_total: &S, alpha: &Alpha<S>) -> S {
    packed_total.clone() - alpha.value().clone() * reserved_total.clone()
}

/// Final accounting of a run.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Outcome<S: Scalar> {
    pub packed_total: S,
    pub reserved_total: S,
    pub gain: S,
}

/// Ratio of the offline optimum to a run's gain.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CompetitiveRatio<S: Scalar> {
    Finite(S),
    /// Nonpositive gain against a positive optimum.
    Infinite,
}

impl<S: Scalar> CompetitiveRatio<S> {
    /// The ratio convention: an empty instance scores 1, a nonpositive gain
    /// scores infinity, everything else is `opt / gain`.
    pub fn from_parts(opt: &S, gain: &S, empty_instance: bool) -> Self {
        if empty_instance {
            CompetitiveRatio::Finite(S::one())
        } else if gain.is_positive() {
            CompetitiveRatio::Finite(opt.clone() / gain.clone())
        } else {
            CompetitiveRatio::Infinite
        }
    }

    pub fn as_finite(&self) -> Option<&S> {
        match self {
            CompetitiveRatio::Finite(v) => Some(v),
            CompetitiveRatio::Infinite => None,
        }
    }

    /// True when the ratio is certainly at least `bound` (infinity always is).
    pub fn at_least(&self, bound: &S) -> bool {
        match self {
            CompetitiveRatio::Finite(v) => v >= bound,
            CompetitiveRatio::Infinite => true,
        }
    }

    /// True when the ratio is certainly at most `bound` (infinity never is).
    pub fn at_most(&self, bound: &S) -> bool {
        match self {
            CompetitiveRatio::Finite(v) => v <= bound,
            CompetitiveRatio::Infinite => false,
        }
    }
}

impl<S: Scalar> fmt::Display for CompetitiveRatio<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CompetitiveRatio::Finite(v) => write!(f, "{v}"),
            CompetitiveRatio::Infinite => write!(f, "inf"),
        }
    }
}

/// One recorded step: the item, the decision, and the state after it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceStep<S: Scalar> {
    pub item: Size<S>,
    pub action: StepAction<S>,
    pub state: RunState<S>,
}

/// Full record of a run; replaying the actions reproduces the states.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Trace<S: Scalar> {
    pub instance_id: String,
    pub policy_name: String,
    pub steps: Vec<TraceStep<S>>,
    /// Selection packed at sequence end when no mid-run finalize happened.
    pub end_selection: Option<Vec<Size<S>>>,
    pub final_state: RunState<S>,
}

impl<S: Scalar> Trace<S> {
    /// Replays every recorded action from the initial state and checks each
    /// recorded post-state, returning the reproduced final state.
    pub fn replay(&self) -> Result<RunState<S>, ModelError> {
        let mut state = RunState::initial();
        for step in &self.steps {
            state = apply_action(&state, &step.item, &step.action)?;
            if state != step.state {
                return Err(ModelError::ReplayMismatch { step: state.step });
            }
        }
        if let Some(selection) = &self.end_selection {
            state = apply_final_selection(&state, selection)?;
        }
        Ok(state)
    }

    pub fn contains_reject(&self) -> bool {
        self.steps
            .iter()
            .any(|s| matches!(s.action, StepAction::Reject))
    }

    /// 1-based index of the step that finalized mid-run, if any.
    pub fn trigger_index(&self) -> Option<usize> {
        self.steps
            .iter()
            .position(|s| s.action.is_finalize())
            .map(|i| i + 1)
    }
}

/// An online decision rule: deterministic and total on valid inputs.
pub trait OnlinePolicy<S: Scalar> {
    fn name(&self) -> &str;

    /// Decision for the current item given the run state.
    fn decide(&self, state: &RunState<S>, item: &Size<S>) -> Result<StepAction<S>, PolicyFailure>;

    /// Selection from the reserve once the sequence has ended, fitting the
    /// remaining capacity.
    fn final_selection(&self, state: &RunState<S>) -> Result<Vec<Size<S>>, PolicyFailure>;
}

/// Step-by-step executor for one policy on one (possibly adaptive) sequence.
pub struct GameRun<S: Scalar> {
    alpha: Alpha<S>,
    instance_id: String,
    policy_name: String,
    state: RunState<S>,
    steps: Vec<TraceStep<S>>,
}

impl<S: Scalar> GameRun<S> {
    pub fn new(alpha: Alpha<S>, instance_id: impl Into<String>, policy_name: impl Into<String>) -> Self {
        Self {
            alpha,
            instance_id: instance_id.into(),
            policy_name: policy_name.into(),
            state: RunState::initial(),
            steps: Vec::new(),
        }
    }

    pub fn state(&self) -> &RunState<S> {
        &self.state
    }

    pub fn stopped(&self) -> bool {
        self.state.stopped
    }

    fn fault(&self, message: impl fmt::Display) -> PolicyFault {
        PolicyFault {
            policy: self.policy_name.clone(),
            step: self.state.step + 1,
            message: message.to_string(),
        }
    }

    /// Feeds one item to the policy and applies its decision.
    pub fn step(
        &mut self,
        policy: &dyn OnlinePolicy<S>,
        item: &Size<S>,
    ) -> Result<StepAction<S>, PolicyFault> {
        if self.state.stopped {
            return Err(self.fault(ModelError::AlreadyStopped));
        }
        let action = policy
            .decide(&self.state, item)
            .map_err(|e| self.fault(e))?;
        let next = apply_action(&self.state, item, &action).map_err(|e| self.fault(e))?;
        self.state = next;
        self.steps.push(TraceStep {
            item: item.clone(),
            action: action.clone(),
            state: self.state.clone(),
        });
        Ok(action)
    }

    /// Ends the sequence: asks for a final selection if the run is still
    /// live, then settles the accounting.
    pub fn finish(
        mut self,
        policy: &dyn OnlinePolicy<S>,
    ) -> Result<(Trace<S>, Outcome<S>), PolicyFault> {
        let end_selection = if self.state.stopped {
            None
        } else {
            let selection = policy
                .final_selection(&self.state)
                .map_err(|e| self.fault(e))?;
            self.state =
                apply_final_selection(&self.state, &selection).map_err(|e| self.fault(e))?;
            Some(selection)
        };
        let gain = final_gain(&self.state.packed_total, &self.state.reserved_total, &self.alpha);
        let outcome = Outcome {
            packed_total: self.state.packed_total.clone(),
            reserved_total: self.state.reserved_total.clone(),
            gain,
        };
        let trace = Trace {
            instance_id: self.instance_id,
            policy_name: self.policy_name,
            steps: self.steps,
            end_selection,
            final_state: self.state,
        };
        Ok((trace, outcome))
    }
}

/// Runs a policy over a fixed instance, honoring a mid-run finalize.
pub fn run_on_instance<S: Scalar>(
    policy: &dyn OnlinePolicy<S>,
    instance: &Instance<S>,
    alpha: &Alpha<S>,
) -> Result<(Trace<S>, Outcome<S>), PolicyFault> {
    let mut run = GameRun::new(alpha.clone(), instance.id(), policy.name());
    for item in instance.items() {
        if run.stopped() {
            break;
        }
        run.step(policy, item)?;
    }
    run.finish(policy)
}

#[derive(Debug, Error)]
pub enum InstanceFileError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {source}")]
    Parse {
        line: usize,
        #[source]
        source: crate::rational::ParseRationalError,
    },
    #[error("line {line}: {source}")]
    Range {
        line: usize,
        #[source]
        source: ModelError,
    },
}

impl Instance<Rat> {
    /// Parses the instance text format: one size per line, `p/q` or a
    /// decimal literal; `#` starts a comment; blank lines are skipped.
    pub fn parse(id: impl Into<String>, text: &str) -> Result<Self, InstanceFileError> {
        let mut sizes = Vec::new();
        let mut lines = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = match raw.find('#') {
                Some(pos) => &raw[..pos],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let value = crate::rational::parse_rational(line).map_err(|source| {
                InstanceFileError::Parse {
                    line: lineno + 1,
                    source,
                }
            })?;
            sizes.push(value);
            lines.push(lineno + 1);
        }
        validate_instance(id, &sizes).map_err(|e| {
            let line = match e {
                ModelError::SizeOutOfRange { index } => lines[index],
                _ => 0,
            };
            InstanceFileError::Range { line, source: e }
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, InstanceFileError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        let id = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "instance".to_string());
        Self::parse(id, &text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;

    fn size(n: i64, d: i64) -> Size<Rat> {
        Size::new(rat(n, d)).unwrap()
    }

    fn alpha(n: i64, d: i64) -> Alpha<Rat> {
        Alpha::new(rat(n, d)).unwrap()
    }

    #[test]
    fn validate_accepts_in_range_sizes() {
        let inst = validate_instance("t", &[rat(1, 2), rat(3, 4)]).unwrap();
        assert_eq!(inst.len(), 2);
        assert_eq!(inst.items()[0], size(1, 2));
    }

    #[test]
    fn validate_rejects_oversized_and_nonpositive() {
        assert_eq!(
            validate_instance("t", &[rat(3, 2)]).unwrap_err(),
            ModelError::SizeOutOfRange { index: 0 }
        );
        assert_eq!(
            validate_instance("t", &[rat(1, 2), rat(0, 1)]).unwrap_err(),
            ModelError::SizeOutOfRange { index: 1 }
        );
    }

    #[test]
    fn empty_instance_is_legal() {
        let inst = validate_instance::<Rat>("t", &[]).unwrap();
        assert!(inst.is_empty());
    }

    #[test]
    fn reserve_accumulates_cost_basis() {
        let state = RunState::initial();
        let next = apply_action(&state, &size(2, 5), &StepAction::Reserve).unwrap();
        assert_eq!(next.packed_total, rat(0, 1));
        assert_eq!(next.reserved_total, rat(2, 5));
        assert_eq!(next.reserved, vec![size(2, 5)]);
        assert!(!next.stopped);
    }

    #[test]
    fn pack_checks_capacity() {
        let mut state = RunState::initial();
        state.packed_total = rat(4, 5);
        let err = apply_action(&state, &size(1, 2), &StepAction::Pack).unwrap_err();
        assert_eq!(err, ModelError::CapacityExceeded);
    }

    #[test]
    fn finalize_moves_selection_and_stops() {
        let mut state = RunState::initial();
        state.reserved = vec![size(3, 10)];
        state.reserved_total = rat(3, 10);
        let action = StepAction::Finalize(vec![size(3, 10), size(7, 20)]);
        let next = apply_action(&state, &size(7, 20), &action).unwrap();
        assert_eq!(next.packed_total, rat(13, 20));
        assert!(next.stopped);
        // the reserve keeps its cost basis
        assert_eq!(next.reserved_total, rat(3, 10));
    }

    #[test]
    fn finalize_rejects_unavailable_selection() {
        let state = RunState::initial();
        let action = StepAction::Finalize(vec![size(1, 2), size(1, 2)]);
        let err = apply_action(&state, &size(1, 2), &action).unwrap_err();
        assert_eq!(err, ModelError::InvalidSelection);
    }

    #[test]
    fn stopped_runs_accept_nothing() {
        let mut state = RunState::initial();
        state.stopped = true;
        let err = apply_action(&state, &size(1, 2), &StepAction::Reject).unwrap_err();
        assert_eq!(err, ModelError::AlreadyStopped);
    }

    #[test]
    fn gain_accounting_matches_definition() {
        assert_eq!(final_gain(&rat(13, 20), &rat(3, 10), &alpha(1, 2)), rat(1, 2));
        assert_eq!(final_gain(&rat(7, 10), &rat(0, 1), &alpha(1, 2)), rat(7, 10));
        assert_eq!(final_gain(&rat(0, 1), &rat(2, 5), &alpha(1, 2)), rat(-1, 5));
    }

    #[test]
    fn ratio_conventions() {
        let one = rat(1, 1);
        assert_eq!(
            CompetitiveRatio::from_parts(&rat(0, 1), &rat(0, 1), true),
            CompetitiveRatio::Finite(one)
        );
        assert_eq!(
            CompetitiveRatio::from_parts(&rat(1, 2), &rat(0, 1), false),
            CompetitiveRatio::Infinite
        );
        assert_eq!(
            CompetitiveRatio::from_parts(&rat(13, 20), &rat(1, 2), false),
            CompetitiveRatio::Finite(rat(13, 10))
        );
        assert!(CompetitiveRatio::<Rat>::Infinite.at_least(&rat(100, 1)));
        assert!(!CompetitiveRatio::<Rat>::Infinite.at_most(&rat(100, 1)));
    }

    struct RejectEverything;

    impl OnlinePolicy<Rat> for RejectEverything {
        fn name(&self) -> &str {
            "reject-everything"
        }
        fn decide(
            &self,
            _state: &RunState<Rat>,
            _item: &Size<Rat>,
        ) -> Result<StepAction<Rat>, PolicyFailure> {
            Ok(StepAction::Reject)
        }
        fn final_selection(&self, _state: &RunState<Rat>) -> Result<Vec<Size<Rat>>, PolicyFailure> {
            Ok(Vec::new())
        }
    }

    #[test]
    fn empty_instance_run_has_zero_gain() {
        let inst = validate_instance::<Rat>("empty", &[]).unwrap();
        let (trace, outcome) = run_on_instance(&RejectEverything, &inst, &alpha(1, 2)).unwrap();
        assert_eq!(outcome.gain, rat(0, 1));
        assert!(trace.steps.is_empty());
        assert_eq!(trace.end_selection, Some(Vec::new()));
    }

    #[test]
    fn trace_replay_reproduces_states() {
        let inst = validate_instance("r", &[rat(1, 2), rat(1, 3)]).unwrap();
        let (trace, _) = run_on_instance(&RejectEverything, &inst, &alpha(1, 4)).unwrap();
        let replayed = trace.replay().unwrap();
        assert_eq!(replayed, trace.final_state);
    }

    #[test]
    fn instance_text_format_round_trip() {
        let text = "# comment\n1/2\n0.35  # inline comment\n\n3/4\n";
        let inst = Instance::parse("file", text).unwrap();
        assert_eq!(
            inst.items(),
            &[size(1, 2), size(35, 100), size(3, 4)]
        );
        let bad = Instance::parse("file", "1/2\n5/4\n");
        assert!(matches!(
            bad.unwrap_err(),
            InstanceFileError::Range { line: 2, .. }
        ));
    }
}
