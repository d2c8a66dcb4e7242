//! Command-line driver: run policies on instance files, duel them against
//! adversaries, sweep the alpha grid, verify trace bounds, and generate
//! random instances.
//!
//! Exit codes: 0 on success with all checks passing, 1 on verification
//! failure or runtime error, 2 on usage errors.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, Context, Result};
use clap::{Args, Parser, Subcommand};

use reservekp::adversary::{adversary_by_name, duel, ADVERSARIES};
use reservekp::harness::{
    emit_curve, emit_gnuplot_script, mix_seed, random_instance, sweep, SweepSpec,
};
use reservekp::policy::{policy_by_name, rho_star_prec, CATALOG};
use reservekp::verify::{sorted_prefix_check, verify_traces, VerifyError};
use reservekp::{decimal_15, parse_rational, Alpha, Instance, Rat};

#[derive(Parser)]
#[command(
    name = "reservekp",
    about = "Online simple knapsack with reservation costs: policies, adversaries, sweeps",
    version
)]
struct Cli {
    /// Enclosure width exponent: irrational values are bracketed to 10^-N
    #[arg(long, global = true, default_value_t = 30)]
    precision: u32,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct AlphaArg {
    /// Reservation factor, e.g. 1/2 or 0.35
    #[arg(long, value_parser = parse_rat)]
    alpha: Rat,
}

fn parse_rat(text: &str) -> Result<Rat, String> {
    parse_rational(text).map_err(|e| e.to_string())
}

#[derive(Subcommand)]
enum Command {
    /// Run a policy on an instance file and report gain, optimum, and ratio
    Run {
        #[command(flatten)]
        alpha: AlphaArg,
        /// Policy name: auto, alg1, threshold-2a, threshold-1a,
        /// take-first-fit, reject-all
        #[arg(long, default_value = "auto")]
        policy: String,
        /// Instance file: one size per line (p/q or decimal), '#' comments
        instance: PathBuf,
        /// Print the per-step trace
        #[arg(long)]
        trace: bool,
    },
    /// Play a policy against an adaptive adversary
    Duel {
        #[command(flatten)]
        alpha: AlphaArg,
        #[arg(long, default_value = "auto")]
        policy: String,
        /// Adversary name: chain, four-item, nonrejecting
        #[arg(long)]
        adversary: String,
        /// Chain bait offset
        #[arg(long, value_parser = parse_rat, default_value = "1/1000")]
        delta: Rat,
        /// Tree item offset
        #[arg(long, value_parser = parse_rat, default_value = "1/1000000")]
        epsilon: Rat,
        /// Print the realized instance and trace
        #[arg(long)]
        trace: bool,
    },
    /// Grid experiment over alphas, policies, and opponents; emits CSV
    Sweep {
        #[arg(long, value_parser = parse_rat, default_value = "1/100")]
        grid_start: Rat,
        #[arg(long, value_parser = parse_rat, default_value = "99/100")]
        grid_end: Rat,
        #[arg(long, value_parser = parse_rat, default_value = "1/100")]
        grid_step: Rat,
        /// Policy names (repeatable)
        #[arg(long = "policy", default_values = ["auto"])]
        policies: Vec<String>,
        /// Adversary names (repeatable)
        #[arg(long = "adversary", default_values = ["four-item"])]
        adversaries: Vec<String>,
        /// Random instances measured per cell
        #[arg(long, default_value_t = 0)]
        instances: usize,
        #[arg(long, default_value_t = 0x5eed)]
        seed: u64,
        #[arg(long, default_value_t = 15)]
        max_items: usize,
        #[arg(long, default_value_t = 1000)]
        max_denominator: u64,
        #[arg(long, value_parser = parse_rat, default_value = "1/1000")]
        delta: Rat,
        #[arg(long, value_parser = parse_rat, default_value = "1/1000000")]
        epsilon: Rat,
        /// CSV output path (stdout when omitted)
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also emit a gnuplot script next to the CSV
        #[arg(long)]
        plot_script: Option<PathBuf>,
    },
    /// Verify reserve bounds and trigger invariance over generated traces
    Verify {
        #[arg(long, value_parser = parse_rat, default_value = "1/10")]
        grid_start: Rat,
        #[arg(long, value_parser = parse_rat, default_value = "9/10")]
        grid_end: Rat,
        #[arg(long, value_parser = parse_rat, default_value = "1/10")]
        grid_step: Rat,
        /// Random instances per alpha and policy
        #[arg(long, default_value_t = 50)]
        instances: usize,
        #[arg(long, default_value_t = 0x5eed)]
        seed: u64,
        #[arg(long, default_value_t = 15)]
        max_items: usize,
        #[arg(long, default_value_t = 1000)]
        max_denominator: u64,
    },
    /// Generate a random instance file
    Gen {
        /// Number of items
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0x5eed)]
        seed: u64,
        #[arg(long, default_value_t = 1000)]
        max_denominator: u64,
        /// Output path (stdout when omitted)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the optimal competitive-ratio curve value at an alpha
    Rho {
        #[command(flatten)]
        alpha: AlphaArg,
    },
}

fn alpha_of(value: &Rat) -> Result<Alpha> {
    Alpha::new(value.clone()).map_err(|e| anyhow!("{e}"))
}

fn print_instance(instance: &Instance) {
    let items: Vec<String> = instance.items().iter().map(|s| s.to_string()).collect();
    println!("instance {} = [{}]", instance.id(), items.join(", "));
}

fn run_command(cmd: Command, precision: u32) -> Result<bool> {
    match cmd {
        Command::Run {
            alpha,
            policy,
            instance,
            trace,
        } => {
            let alpha = alpha_of(&alpha.alpha)?;
            let policy = policy_by_name(&policy, &alpha)?;
            let instance = Instance::load(&instance)
                .with_context(|| format!("reading {}", instance.display()))?;
            let (record, run_trace) =
                reservekp::harness::measure_ratio_with_trace(&policy, &instance, &alpha)?;
            if trace {
                for step in &run_trace.steps {
                    println!(
                        "step {:>3}: item {} -> {:?} (packed {}, reserved {})",
                        step.state.step,
                        step.item,
                        step.action,
                        step.state.packed_total,
                        step.state.reserved_total
                    );
                }
                if let Some(selection) = &run_trace.end_selection {
                    let sel: Vec<String> = selection.iter().map(|s| s.to_string()).collect();
                    println!("sequence end: packed [{}]", sel.join(", "));
                }
            }
            println!(
                "policy {} at alpha {}: gain {} ({}), opt {} ({}), ratio {}",
                record.policy,
                record.alpha,
                record.gain,
                decimal_15(&record.gain),
                record.opt,
                decimal_15(&record.opt),
                record.ratio
            );
            Ok(true)
        }
        Command::Duel {
            alpha,
            policy,
            adversary,
            delta,
            epsilon,
            trace,
        } => {
            let alpha = alpha_of(&alpha.alpha)?;
            let policy = policy_by_name(&policy, &alpha)?;
            let adversary = adversary_by_name(&adversary, &alpha, &delta, &epsilon)?;
            let result = duel(&policy, adversary.as_ref(), &alpha)?;
            if trace {
                print_instance(&result.instance);
                for step in &result.trace.steps {
                    println!(
                        "step {:>3}: item {} -> {:?}",
                        step.state.step, step.item, step.action
                    );
                }
            }
            println!(
                "duel {} vs {} at alpha {}: gain {} ({}), opt {} ({}), ratio {}{}",
                result.trace.policy_name,
                result.instance.id(),
                alpha.value(),
                result.outcome.gain,
                decimal_15(&result.outcome.gain),
                result.opt,
                decimal_15(&result.opt),
                result.ratio,
                if result.ended_on_reject {
                    " [sequence ended on a reject]"
                } else {
                    ""
                }
            );
            Ok(true)
        }
        Command::Sweep {
            grid_start,
            grid_end,
            grid_step,
            policies,
            adversaries,
            instances,
            seed,
            max_items,
            max_denominator,
            delta,
            epsilon,
            out,
            plot_script,
        } => {
            let spec = SweepSpec {
                grid_start,
                grid_end,
                grid_step,
                policies,
                opponents: adversaries,
                seed,
                instances_per_cell: instances,
                max_items,
                max_denominator,
                epsilon,
                delta,
            };
            let output = sweep(&spec)?;
            for skip in &output.skips {
                eprintln!(
                    "skip: alpha {} policy {} opponent {}: {}",
                    skip.alpha, skip.policy, skip.opponent, skip.reason
                );
            }
            match &out {
                Some(path) => {
                    emit_curve(&output.records, path)
                        .with_context(|| format!("writing {}", path.display()))?;
                    eprintln!(
                        "wrote {} records ({} skips) to {}",
                        output.records.len(),
                        output.skips.len(),
                        path.display()
                    );
                }
                None => {
                    let mut stdout = std::io::stdout().lock();
                    reservekp::harness::write_curve(&output.records, &mut stdout)?;
                    stdout.flush()?;
                }
            }
            if let Some(script) = plot_script {
                let csv_name = out
                    .as_ref()
                    .map(|p| p.display().to_string())
                    .unwrap_or_else(|| "curve.csv".to_string());
                emit_gnuplot_script(&csv_name, &script)
                    .with_context(|| format!("writing {}", script.display()))?;
            }
            Ok(true)
        }
        Command::Verify {
            grid_start,
            grid_end,
            grid_step,
            instances,
            seed,
            max_items,
            max_denominator,
        } => {
            let mut all_pass = true;
            let mut checked = 0usize;
            let mut alpha_value = grid_start.clone();
            let mut alpha_index = 0u64;
            while alpha_value <= grid_end {
                let alpha = alpha_of(&alpha_value)?;
                for policy_name in ["threshold-2a", "threshold-1a"] {
                    let policy = policy_by_name(policy_name, &alpha)?;
                    let mut runs = Vec::new();
                    for i in 0..instances {
                        let n = (mix_seed(&[seed, alpha_index, i as u64, 1])
                            % (max_items as u64 + 1)) as usize;
                        let item_seed = mix_seed(&[seed, alpha_index, i as u64, 2]);
                        let instance = random_instance(n, item_seed, max_denominator);
                        let (_, trace) = reservekp::harness::measure_ratio_with_trace(
                            &policy, &instance, &alpha,
                        )?;
                        runs.push(trace);
                        match sorted_prefix_check(&policy, &instance, &alpha) {
                            Ok(report) => {
                                checked += 1;
                                if !report.pass {
                                    all_pass = false;
                                    println!("FAIL {}: {}", report.check, report.subject);
                                }
                            }
                            Err(VerifyError::NotApplicable) => {}
                            Err(e) => return Err(e.into()),
                        }
                    }
                    let tagged: Vec<_> = runs.iter().map(|t| (&policy, t)).collect();
                    for report in verify_traces(tagged.iter().map(|(p, t)| (*p, *t)), &alpha) {
                        checked += 1;
                        if !report.pass {
                            all_pass = false;
                            let witness = report
                                .witness
                                .map(|w| format!(" ({})", w.detail))
                                .unwrap_or_default();
                            println!("FAIL {}: {}{}", report.check, report.subject, witness);
                        }
                    }
                }
                alpha_value += grid_step.clone();
                alpha_index += 1;
            }
            println!(
                "verify: {checked} checks, {}",
                if all_pass { "all passed" } else { "FAILURES" }
            );
            Ok(all_pass)
        }
        Command::Gen {
            n,
            seed,
            max_denominator,
            out,
        } => {
            let instance = random_instance(n, seed, max_denominator);
            let mut body = format!("# {}\n", instance.id());
            for item in instance.items() {
                body.push_str(&format!("{item}\n"));
            }
            match out {
                Some(path) => std::fs::write(&path, body)
                    .with_context(|| format!("writing {}", path.display()))?,
                None => print!("{body}"),
            }
            Ok(true)
        }
        Command::Rho { alpha } => {
            let alpha = alpha_of(&alpha.alpha)?;
            let value = rho_star_prec(&alpha, precision)?;
            println!(
                "rho*({}) in [{}, {}] ~ {}",
                alpha.value(),
                value.lo(),
                value.hi(),
                decimal_15(&value.midpoint())
            );
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    // keep the catalogs referenced so help text and code stay in sync
    debug_assert!(CATALOG.len() == 5 && ADVERSARIES.len() == 3);
    match run_command(cli.command, cli.precision) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
