//! Experiment driver: ratio measurements, alpha-grid sweeps over policies
//! and adversaries, seeded random instances, and CSV emission.
//!
//! Sweeps are deterministic end to end: the grid is walked in order, cell
//! seeds are derived from the sweep seed with a fixed mixing function, and
//! records are emitted sorted by `(alpha, policy, opponent)` regardless of
//! how the cells were scheduled. Two runs of the same spec produce
//! byte-identical CSV files.

use std::io::Write;
use std::path::Path;

use num_traits::Signed;
use rand_core::{RngCore, SeedableRng};
use rayon::prelude::*;
use thiserror::Error;

use crate::adversary::{adversary_by_name, duel, DuelError};
use crate::model::{run_on_instance, validate_instance, PolicyFault};
use crate::oracle::{opt_gain, OracleError};
use crate::policy::{policy_by_name, Policy, PolicyError};
use crate::rational::decimal_15;
use crate::{Alpha, CompetitiveRatio, Instance, Rat, Trace};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid sweep spec: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error(transparent)]
    Fault(#[from] PolicyFault),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Duel(#[from] DuelError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// One measured data point of the ratio curve.
#[derive(Clone, Debug)]
pub struct RatioRecord {
    pub alpha: Rat,
    pub policy: String,
    /// Adversary name or instance id.
    pub opponent: String,
    pub gain: Rat,
    pub opt: Rat,
    pub ratio: CompetitiveRatio,
}

/// A run kept for later trace verification, tagged with its policy.
#[derive(Clone, Debug)]
pub struct TaggedRun {
    pub alpha: Alpha,
    pub policy: Policy,
    pub trace: Trace,
}

/// Runs a policy over a fixed instance and scores it against the offline
/// optimum. An empty instance scores 1; a nonpositive gain scores infinity.
pub fn measure_ratio(
    policy: &Policy,
    instance: &Instance,
    alpha: &Alpha,
) -> Result<RatioRecord, HarnessError> {
    let (record, _) = measure_ratio_with_trace(policy, instance, alpha)?;
    Ok(record)
}

/// [`measure_ratio`], also returning the trace for verification.
pub fn measure_ratio_with_trace(
    policy: &Policy,
    instance: &Instance,
    alpha: &Alpha,
) -> Result<(RatioRecord, Trace), HarnessError> {
    let (trace, outcome) = run_on_instance(policy, instance, alpha)?;
    let opt = opt_gain(instance)?;
    let ratio = CompetitiveRatio::from_parts(&opt, &outcome.gain, instance.is_empty());
    let record = RatioRecord {
        alpha: alpha.value().clone(),
        policy: policy.name().to_string(),
        opponent: instance.id().to_string(),
        gain: outcome.gain,
        opt,
        ratio,
    };
    Ok((record, trace))
}

/// Splitmix-style mixing of seed parts into one 64-bit stream seed.
pub fn mix_seed(parts: &[u64]) -> u64 {
    let mut state: u64 = 0x9E37_79B9_7F4A_7C15;
    for &part in parts {
        state = state.wrapping_add(part).wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        state = z ^ (z >> 31);
    }
    state
}

/// `n` sizes drawn uniformly from `{1/d, ..., d/d}`, deterministic in
/// `(n, seed, d)`.
pub fn random_sizes(n: usize, seed: u64, max_denominator: u64) -> Vec<Rat> {
    assert!(max_denominator >= 2, "max_denominator below 2");
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let d = max_denominator;
    // rejection sampling keeps the draw exactly uniform
    let usable = u64::MAX - u64::MAX % d;
    (0..n)
        .map(|_| {
            let numerator = loop {
                let raw = rng.next_u64();
                if raw < usable {
                    break raw % d + 1;
                }
            };
            crate::rational::rat(numerator as i64, d as i64)
        })
        .collect()
}

/// Random instance with a self-describing id.
pub fn random_instance(n: usize, seed: u64, max_denominator: u64) -> Instance {
    let sizes = random_sizes(n, seed, max_denominator);
    validate_instance(format!("rand-n{n}-s{seed}-d{max_denominator}"), &sizes)
        .expect("generated sizes are in range")
}

/// Grid experiment description.
#[derive(Clone, Debug)]
pub struct SweepSpec {
    pub grid_start: Rat,
    pub grid_end: Rat,
    pub grid_step: Rat,
    /// Policy names (`auto` and the catalog).
    pub policies: Vec<String>,
    /// Adversary names to duel in every cell.
    pub opponents: Vec<String>,
    pub seed: u64,
    /// Random instances measured per `(alpha, policy)` cell.
    pub instances_per_cell: usize,
    /// Random instance length is drawn from `0..=max_items`.
    pub max_items: usize,
    pub max_denominator: u64,
    pub epsilon: Rat,
    pub delta: Rat,
}

impl SweepSpec {
    fn validate(&self) -> Result<(), HarnessError> {
        use num_traits::One;
        if !self.grid_start.is_positive()
            || self.grid_start > self.grid_end
            || self.grid_end >= Rat::one()
        {
            return Err(HarnessError::InvalidSpec(
                "need 0 < start <= end < 1".to_string(),
            ));
        }
        if !self.grid_step.is_positive() {
            return Err(HarnessError::InvalidSpec("need step > 0".to_string()));
        }
        Ok(())
    }

    /// The alpha grid, ascending.
    pub fn grid(&self) -> Vec<Rat> {
        let mut grid = Vec::new();
        let mut a = self.grid_start.clone();
        while a <= self.grid_end {
            grid.push(a.clone());
            a += self.grid_step.clone();
        }
        grid
    }
}

/// A cell that was skipped rather than failed, with the reason.
#[derive(Clone, Debug)]
pub struct SkipNotice {
    pub alpha: Rat,
    pub policy: String,
    pub opponent: String,
    pub reason: String,
}

/// Everything a sweep produced.
#[derive(Debug, Default)]
pub struct SweepOutput {
    pub records: Vec<RatioRecord>,
    pub skips: Vec<SkipNotice>,
    pub runs: Vec<TaggedRun>,
}

#[derive(Default)]
struct CellOutput {
    records: Vec<RatioRecord>,
    skips: Vec<SkipNotice>,
    runs: Vec<TaggedRun>,
}

/// Runs the grid experiment. Cells execute in parallel; output order is
/// `(alpha asc, policy asc, opponent asc)` regardless of scheduling.
/// Adversaries or policies undefined at a grid alpha are recorded as skips.
pub fn sweep(spec: &SweepSpec) -> Result<SweepOutput, HarnessError> {
    spec.validate()?;
    let grid = spec.grid();
    let mut policies = spec.policies.clone();
    policies.sort();
    policies.dedup();
    let mut opponents = spec.opponents.clone();
    opponents.sort();
    opponents.dedup();

    let cells: Result<Vec<CellOutput>, HarnessError> = grid
        .par_iter()
        .enumerate()
        .map(|(alpha_index, a)| sweep_cell(spec, alpha_index, a, &policies, &opponents))
        .collect();

    let mut output = SweepOutput::default();
    for mut cell in cells? {
        cell.records
            .sort_by(|x, y| (&x.policy, &x.opponent).cmp(&(&y.policy, &y.opponent)));
        output.records.append(&mut cell.records);
        output.skips.append(&mut cell.skips);
        output.runs.append(&mut cell.runs);
    }
    Ok(output)
}

fn sweep_cell(
    spec: &SweepSpec,
    alpha_index: usize,
    a: &Rat,
    policies: &[String],
    opponents: &[String],
) -> Result<CellOutput, HarnessError> {
    let alpha = Alpha::new(a.clone())
        .map_err(|e| HarnessError::InvalidSpec(format!("grid alpha {a}: {e}")))?;
    let mut cell = CellOutput::default();
    for (policy_index, policy_name) in policies.iter().enumerate() {
        let policy = match policy_by_name(policy_name, &alpha) {
            Ok(policy) => policy,
            Err(reason) => {
                // the whole cell is out of this policy's domain
                for opponent in opponents {
                    cell.skips.push(SkipNotice {
                        alpha: a.clone(),
                        policy: policy_name.clone(),
                        opponent: opponent.clone(),
                        reason: reason.to_string(),
                    });
                }
                for i in 0..spec.instances_per_cell {
                    cell.skips.push(SkipNotice {
                        alpha: a.clone(),
                        policy: policy_name.clone(),
                        opponent: format!("rand-{i:03}"),
                        reason: reason.to_string(),
                    });
                }
                continue;
            }
        };
        for opponent in opponents {
            match adversary_by_name(opponent, &alpha, &spec.delta, &spec.epsilon) {
                Ok(adversary) => {
                    let result = duel(&policy, adversary.as_ref(), &alpha)?;
                    cell.records.push(RatioRecord {
                        alpha: a.clone(),
                        policy: policy_name.clone(),
                        opponent: opponent.clone(),
                        gain: result.outcome.gain.clone(),
                        opt: result.opt.clone(),
                        ratio: result.ratio.clone(),
                    });
                    cell.runs.push(TaggedRun {
                        alpha: alpha.clone(),
                        policy: policy.clone(),
                        trace: result.trace,
                    });
                }
                Err(reason) => cell.skips.push(SkipNotice {
                    alpha: a.clone(),
                    policy: policy_name.clone(),
                    opponent: opponent.clone(),
                    reason: reason.to_string(),
                }),
            }
        }
        for i in 0..spec.instances_per_cell {
            let len_seed = mix_seed(&[
                spec.seed,
                alpha_index as u64,
                policy_index as u64,
                i as u64,
                1,
            ]);
            let item_seed = mix_seed(&[
                spec.seed,
                alpha_index as u64,
                policy_index as u64,
                i as u64,
                2,
            ]);
            let n = (len_seed % (spec.max_items as u64 + 1)) as usize;
            let sizes = random_sizes(n, item_seed, spec.max_denominator);
            let instance = validate_instance(format!("rand-{i:03}"), &sizes)
                .expect("generated sizes are in range");
            let (mut record, trace) = measure_ratio_with_trace(&policy, &instance, &alpha)?;
            record.policy = policy_name.clone();
            cell.records.push(record);
            cell.runs.push(TaggedRun {
                alpha: alpha.clone(),
                policy: policy.clone(),
                trace,
            });
        }
    }
    Ok(cell)
}

/// CSV header written by [`write_curve`].
pub const CSV_HEADER: &str =
    "alpha,policy,opponent,gain,opt,ratio,alpha_dec,gain_dec,opt_dec,ratio_dec";

fn ratio_columns(ratio: &CompetitiveRatio) -> (String, String) {
    match ratio {
        CompetitiveRatio::Finite(v) => (v.to_string(), decimal_15(v)),
        CompetitiveRatio::Infinite => ("inf".to_string(), "inf".to_string()),
    }
}

/// Writes records as CSV: exact `p/q` columns first, then 15-significant-
/// digit decimal companions.
pub fn write_curve(records: &[RatioRecord], out: &mut impl Write) -> std::io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in records {
        let (ratio, ratio_dec) = ratio_columns(&r.ratio);
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            r.alpha,
            r.policy,
            r.opponent,
            r.gain,
            r.opt,
            ratio,
            decimal_15(&r.alpha),
            decimal_15(&r.gain),
            decimal_15(&r.opt),
            ratio_dec,
        )?;
    }
    Ok(())
}

/// Writes the curve CSV to a file.
pub fn emit_curve(records: &[RatioRecord], path: impl AsRef<Path>) -> std::io::Result<()> {
    let mut file = std::fs::File::create(path)?;
    write_curve(records, &mut file)?;
    file.flush()
}

/// Emits a small gnuplot script plotting ratio against alpha from the CSV.
pub fn emit_gnuplot_script(
    csv_path: &str,
    script_path: impl AsRef<Path>,
) -> std::io::Result<()> {
    let script = format!(
        "set datafile separator ','\n\
         set xlabel 'alpha'\n\
         set ylabel 'competitive ratio'\n\
         set key left top\n\
         set yrange [1:6]\n\
         plot '{csv_path}' every ::1 using 7:10 with linespoints title 'measured ratio'\n"
    );
    std::fs::write(script_path, script)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policy::select_policy;
    use crate::rational::rat;

    fn alpha(n: i64, d: i64) -> Alpha {
        Alpha::new(rat(n, d)).unwrap()
    }

    #[test]
    fn measured_ratio_matches_the_hand_simulation() {
        let a = alpha(1, 2);
        let policy = select_policy(&a).unwrap();
        let instance = validate_instance("two", &[rat(3, 10), rat(7, 20)]).unwrap();
        let record = measure_ratio(&policy, &instance, &a).unwrap();
        assert_eq!(record.gain, rat(1, 2));
        assert_eq!(record.opt, rat(13, 20));
        assert_eq!(record.ratio, CompetitiveRatio::Finite(rat(13, 10)));
    }

    #[test]
    fn single_full_item_scores_one() {
        let a = alpha(1, 2);
        let policy = select_policy(&a).unwrap();
        let instance = validate_instance("one", &[rat(1, 1)]).unwrap();
        let record = measure_ratio(&policy, &instance, &a).unwrap();
        assert_eq!(record.ratio, CompetitiveRatio::Finite(rat(1, 1)));
    }

    #[test]
    fn reject_all_scores_infinity() {
        let a = alpha(1, 2);
        let policy = crate::policy::policy_by_name("reject-all", &a).unwrap();
        let instance = validate_instance("half", &[rat(1, 2)]).unwrap();
        let record = measure_ratio(&policy, &instance, &a).unwrap();
        assert_eq!(record.ratio, CompetitiveRatio::Infinite);
    }

    #[test]
    fn empty_instance_scores_one_by_convention() {
        let a = alpha(1, 2);
        let policy = select_policy(&a).unwrap();
        let instance = validate_instance::<Rat>("empty", &[]).unwrap();
        let record = measure_ratio(&policy, &instance, &a).unwrap();
        assert_eq!(record.ratio, CompetitiveRatio::Finite(rat(1, 1)));
    }

    #[test]
    fn random_sizes_are_deterministic_and_in_range() {
        let a = random_sizes(50, 1234, 1000);
        let b = random_sizes(50, 1234, 1000);
        assert_eq!(a, b);
        assert!(a.iter().all(|x| x.is_positive() && x <= &rat(1, 1)));
        assert!(random_sizes(0, 7, 10).is_empty());
        let c = random_sizes(50, 1235, 1000);
        assert_ne!(a, c);
    }

    #[test]
    fn sweep_counts_skips_for_invalid_cells() {
        let spec = SweepSpec {
            grid_start: rat(1, 10),
            grid_end: rat(9, 10),
            grid_step: rat(1, 10),
            policies: vec!["auto".to_string()],
            opponents: vec!["four-item".to_string()],
            seed: 1,
            instances_per_cell: 0,
            max_items: 10,
            max_denominator: 1000,
            epsilon: rat(1, 1_000_000),
            delta: rat(1, 1000),
        };
        let output = sweep(&spec).unwrap();
        assert_eq!(output.records.len(), 7);
        assert_eq!(output.skips.len(), 2);
        assert_eq!(
            output.records.len() + output.skips.len(),
            spec.grid().len()
        );
    }

    #[test]
    fn csv_emission_handles_empty_and_single_records() {
        let mut empty = Vec::new();
        write_curve(&[], &mut empty).unwrap();
        assert_eq!(String::from_utf8(empty).unwrap(), format!("{CSV_HEADER}\n"));
        let record = RatioRecord {
            alpha: rat(1, 2),
            policy: "auto".to_string(),
            opponent: "chain".to_string(),
            gain: rat(1, 2),
            opt: rat(1, 1),
            ratio: CompetitiveRatio::Finite(rat(2, 1)),
        };
        let mut single = Vec::new();
        write_curve(&[record], &mut single).unwrap();
        assert_eq!(String::from_utf8(single).unwrap().lines().count(), 2);
    }

    #[test]
    fn skip_accounting_covers_out_of_domain_policies() {
        // alg1 is undefined on this whole grid, so every cell it owns is a
        // skip, random-instance cells included
        let spec = SweepSpec {
            grid_start: rat(1, 2),
            grid_end: rat(7, 10),
            grid_step: rat(1, 10),
            policies: vec!["alg1".to_string(), "threshold-1a".to_string()],
            opponents: vec!["chain".to_string(), "nonrejecting".to_string()],
            seed: 5,
            instances_per_cell: 2,
            max_items: 6,
            max_denominator: 100,
            epsilon: rat(1, 1_000_000),
            delta: rat(1, 1000),
        };
        let output = sweep(&spec).unwrap();
        let grid = spec.grid().len();
        let cells_per_policy = spec.opponents.len() + spec.instances_per_cell;
        assert_eq!(
            output.records.len() + output.skips.len(),
            grid * spec.policies.len() * cells_per_policy
        );
        assert_eq!(output.records.len(), grid * cells_per_policy);
        assert!(output.skips.iter().all(|s| s.policy == "alg1"));
    }

    #[test]
    fn sweep_output_is_byte_identical_across_runs() {
        let spec = SweepSpec {
            grid_start: rat(3, 10),
            grid_end: rat(1, 2),
            grid_step: rat(1, 10),
            policies: vec!["auto".to_string(), "take-first-fit".to_string()],
            opponents: vec!["nonrejecting".to_string(), "chain".to_string()],
            seed: 99,
            instances_per_cell: 3,
            max_items: 8,
            max_denominator: 100,
            epsilon: rat(1, 1_000_000),
            delta: rat(1, 1000),
        };
        let first = sweep(&spec).unwrap();
        let second = sweep(&spec).unwrap();
        let mut a = Vec::new();
        let mut b = Vec::new();
        write_curve(&first.records, &mut a).unwrap();
        write_curve(&second.records, &mut b).unwrap();
        assert!(!a.is_empty());
        assert_eq!(a, b);
        // order contract: alpha asc, then policy, then opponent
        let keys: Vec<(String, String, String)> = first
            .records
            .iter()
            .map(|r| (decimal_15(&r.alpha), r.policy.clone(), r.opponent.clone()))
            .collect();
        let mut sorted = keys.clone();
        sorted.sort();
        assert_eq!(keys, sorted);
    }
}
