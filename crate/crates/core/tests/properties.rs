//! Property tests for the game semantics, the oracle pair, and the
//! structural bounds of the threshold policies.

use proptest::prelude::*;

use reservekp::model::{validate_instance, StepAction};
use reservekp::oracle::{brute_force_popt, popt};
use reservekp::policy::{policy_by_name, rho_star, select_policy};
use reservekp::rational::rat;
use reservekp::verify::verify_traces;
use reservekp::{Alpha, Rat, Size};

fn alpha_choices() -> impl Strategy<Value = Rat> {
    prop::sample::select(vec![
        rat(1, 10),
        rat(1, 4),
        rat(3, 10),
        rat(2, 5),
        rat(9, 20),
        rat(1, 2),
        rat(3, 5),
        rat(7, 10),
        rat(9, 10),
    ])
}

fn size_values(max_len: usize) -> impl Strategy<Value = Vec<Rat>> {
    prop::collection::vec((1u64..=1000).prop_map(|n| rat(n as i64, 1000)), 0..=max_len)
}

fn policy_names() -> impl Strategy<Value = &'static str> {
    prop::sample::select(vec![
        "auto",
        "threshold-2a",
        "threshold-1a",
        "take-first-fit",
        "reject-all",
    ])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// The branch-and-bound optimum agrees exactly with plain enumeration.
    #[test]
    fn oracle_pair_agrees(values in size_values(12)) {
        let items: Vec<Size> = values
            .iter()
            .map(|v| Size::new(v.clone()).unwrap())
            .collect();
        let fast = popt(&items).unwrap();
        let slow = brute_force_popt(&items).unwrap();
        prop_assert_eq!(&fast.total, &slow.total);
        prop_assert_eq!(fast.selection, slow.selection);
    }

    /// Adding an item never decreases the optimum.
    #[test]
    fn oracle_is_monotone(values in size_values(10), extra in 1u64..=1000) {
        let items: Vec<Size> = values
            .iter()
            .map(|v| Size::new(v.clone()).unwrap())
            .collect();
        let base = popt(&items).unwrap().total;
        let mut grown = items;
        grown.push(Size::new(rat(extra as i64, 1000)).unwrap());
        let grown_total = popt(&grown).unwrap().total;
        prop_assert!(grown_total >= base);
    }

    /// Replaying a trace reproduces every recorded state, and the final
    /// accounting matches the recorded totals.
    #[test]
    fn traces_replay_deterministically(
        values in size_values(12),
        a in alpha_choices(),
        name in policy_names(),
    ) {
        let alpha = Alpha::new(a).unwrap();
        let policy = policy_by_name(name, &alpha).unwrap();
        let instance = validate_instance("prop", &values).unwrap();
        let (trace, outcome) =
            reservekp::model::run_on_instance(&policy, &instance, &alpha).unwrap();
        let replayed = trace.replay().unwrap();
        prop_assert_eq!(&replayed, &trace.final_state);
        prop_assert_eq!(&outcome.packed_total, &replayed.packed_total);
        prop_assert_eq!(&outcome.reserved_total, &replayed.reserved_total);
        // accounting identity: the reserve total is the reserve's sum
        let reserve_sum = replayed
            .reserved
            .iter()
            .fold(rat(0, 1), |acc, s| acc + s.value().clone());
        prop_assert_eq!(&reserve_sum, &replayed.reserved_total);
        // gain identity, exact
        let gain = replayed.packed_total.clone()
            - alpha.value().clone() * replayed.reserved_total.clone();
        prop_assert_eq!(&gain, &outcome.gain);
    }

    /// Reserve totals never decrease over a run.
    #[test]
    fn reserve_totals_are_monotone(
        values in size_values(12),
        a in alpha_choices(),
        name in policy_names(),
    ) {
        let alpha = Alpha::new(a).unwrap();
        let policy = policy_by_name(name, &alpha).unwrap();
        let instance = validate_instance("prop", &values).unwrap();
        let (trace, _) =
            reservekp::model::run_on_instance(&policy, &instance, &alpha).unwrap();
        let mut previous = rat(0, 1);
        for step in &trace.steps {
            prop_assert!(step.state.reserved_total >= previous);
            previous = step.state.reserved_total.clone();
        }
    }

    /// A rejected item is gone: it never shows up in the reserve afterwards.
    #[test]
    fn rejects_are_irrevocable(
        values in size_values(12),
        a in alpha_choices(),
    ) {
        let alpha = Alpha::new(a).unwrap();
        let policy = policy_by_name("take-first-fit", &alpha).unwrap();
        let instance = validate_instance("prop", &values).unwrap();
        let (trace, _) =
            reservekp::model::run_on_instance(&policy, &instance, &alpha).unwrap();
        for (i, step) in trace.steps.iter().enumerate() {
            if matches!(step.action, StepAction::Reject) {
                // the reserve multiset never grows past this step's snapshot
                for later in &trace.steps[i..] {
                    prop_assert_eq!(&later.state.reserved, &step.state.reserved);
                }
            }
        }
    }

    /// Threshold runs satisfy their reserve caps and never reject.
    #[test]
    fn threshold_bounds_hold_on_random_runs(
        values in size_values(12),
        a in alpha_choices(),
        name in prop::sample::select(vec!["threshold-2a", "threshold-1a"]),
    ) {
        let alpha = Alpha::new(a).unwrap();
        let policy = policy_by_name(name, &alpha).unwrap();
        let instance = validate_instance("prop", &values).unwrap();
        let (trace, _) =
            reservekp::model::run_on_instance(&policy, &instance, &alpha).unwrap();
        let reports = verify_traces([(&policy, &trace)], &alpha);
        for report in reports {
            prop_assert!(report.pass, "{:?}", report);
        }
    }

    /// When a low-threshold run packs past `1/((2+a)(1-a))`, its measured
    /// ratio is at most `2 + a`.
    #[test]
    fn deep_packings_meet_the_linear_bound(
        values in size_values(12),
        a in alpha_choices(),
    ) {
        let alpha = Alpha::new(a).unwrap();
        let policy = policy_by_name("threshold-2a", &alpha).unwrap();
        let instance = validate_instance("prop", &values).unwrap();
        let record =
            reservekp::harness::measure_ratio(&policy, &instance, &alpha).unwrap();
        let (_, outcome) =
            reservekp::model::run_on_instance(&policy, &instance, &alpha).unwrap();
        let packed_enough = (rat(2, 1) + alpha.value().clone())
            * alpha.complement();
        if outcome.packed_total >= packed_enough.recip() {
            let bound = rat(2, 1) + alpha.value().clone();
            prop_assert!(record.ratio.at_most(&bound), "ratio {} above {}", record.ratio, bound);
        }
    }
}

/// The optimal curve never decreases along a fine grid.
#[test]
fn rho_star_is_monotone_on_a_fine_grid() {
    let step = rat(1, 1000);
    let mut previous: Option<reservekp::enclosure::RatioValue> = None;
    let mut a = step.clone();
    while a < rat(1, 1) {
        let alpha = Alpha::new(a.clone()).unwrap();
        let here = rho_star(&alpha).unwrap();
        if let Some(prev) = &previous {
            assert!(
                prev.lo() <= here.lo() && prev.hi() <= here.hi(),
                "curve decreased at alpha {a}"
            );
        }
        previous = Some(here);
        a += step.clone();
    }
}

/// The selected policy is defined on the whole open interval.
#[test]
fn selection_covers_the_grid() {
    for k in 1..100 {
        let alpha = Alpha::new(rat(k, 100)).unwrap();
        select_policy(&alpha).unwrap();
    }
}

/// The selected policy never exceeds the optimal curve against any of the
/// three adversaries, anywhere on the grid.
#[test]
fn selected_policy_stays_under_the_curve_in_every_duel() {
    use reservekp::adversary::adversary_by_name;
    let delta = rat(1, 1000);
    let epsilon = rat(1, 1_000_000);
    for k in 1..100 {
        let alpha = Alpha::new(rat(k, 100)).unwrap();
        let policy = select_policy(&alpha).unwrap();
        let ceiling = rho_star(&alpha).unwrap().hi().clone();
        for name in ["chain", "four-item", "nonrejecting"] {
            let Ok(adversary) = adversary_by_name(name, &alpha, &delta, &epsilon) else {
                continue;
            };
            let result =
                reservekp::adversary::duel(&policy, adversary.as_ref(), &alpha).unwrap();
            assert!(
                result.ratio.at_most(&ceiling),
                "alpha {k}/100 vs {name}: ratio {} above {ceiling}",
                result.ratio
            );
        }
    }
}

/// An always-reserving strategy is cut off by the horizon rules: the chain
/// stops once fees alone pin the ratio, the repeated bait once every
/// continuation is bad, and the realized ratio clears each floor.
#[test]
fn horizons_cut_off_endless_reservation() {
    use reservekp::adversary::{chain_adversary, nonrejecting_adversary, duel};
    use reservekp::policy::{ScriptedMove, ScriptedPolicy};
    let all_reserve = ScriptedPolicy::new(vec![ScriptedMove::Reserve; 16]);
    let alpha = Alpha::new(rat(1, 3)).unwrap();
    let chain = chain_adversary(&alpha, &rat(1, 1000)).unwrap();
    let result = duel(&all_reserve, &chain, &alpha).unwrap();
    // fees reach 1/2 after three baits of ~1/2 each
    assert_eq!(result.instance.len(), 3);
    assert!(result.ratio.at_least(&rat(2, 1)));

    let alpha = Alpha::new(rat(1, 2)).unwrap();
    let nonrej = nonrejecting_adversary(&alpha, &rat(1, 1_000_000)).unwrap();
    let result = duel(&all_reserve, &nonrej, &alpha).unwrap();
    assert_eq!(result.instance.len(), 2);
    assert!(result.ratio.at_least(&rat(5, 2)));
}

/// Measured ratios are never below 1: the offline optimum dominates.
#[test]
fn every_sweep_record_is_at_least_one() {
    let spec = reservekp::harness::SweepSpec {
        grid_start: rat(1, 10),
        grid_end: rat(9, 10),
        grid_step: rat(1, 5),
        policies: vec![
            "auto".to_string(),
            "take-first-fit".to_string(),
            "reject-all".to_string(),
        ],
        opponents: vec!["chain".to_string(), "nonrejecting".to_string()],
        seed: 17,
        instances_per_cell: 5,
        max_items: 10,
        max_denominator: 1000,
        epsilon: rat(1, 1_000_000),
        delta: rat(1, 1000),
    };
    let output = reservekp::harness::sweep(&spec).unwrap();
    assert!(!output.records.is_empty());
    for record in &output.records {
        assert!(
            record.ratio.at_least(&rat(1, 1)),
            "{} vs {} at {}: ratio {}",
            record.policy,
            record.opponent,
            record.alpha,
            record.ratio
        );
    }
}
