//! End-to-end checks of the command-line surface: subcommands, file
//! formats, and exit codes.

use std::path::PathBuf;
use std::process::{Command, Output};

fn reservekp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_reservekp"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_of(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

fn temp_dir() -> PathBuf {
    let dir = std::env::temp_dir().join(format!("reservekp-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).expect("temp dir");
    dir
}

#[test]
fn run_reports_the_worked_example() {
    let dir = temp_dir();
    let instance = dir.join("two.txt");
    std::fs::write(&instance, "# two items\n3/10\n0.35\n").unwrap();
    let output = reservekp(&[
        "run",
        "--alpha",
        "1/2",
        "--policy",
        "auto",
        instance.to_str().unwrap(),
    ]);
    assert!(output.status.success());
    let text = stdout_of(&output);
    assert!(text.contains("gain 1/2"), "{text}");
    assert!(text.contains("opt 13/20"), "{text}");
    assert!(text.contains("ratio 13/10"), "{text}");
}

#[test]
fn run_rejects_out_of_range_sizes_with_exit_one() {
    let dir = temp_dir();
    let instance = dir.join("bad.txt");
    std::fs::write(&instance, "3/2\n").unwrap();
    let output = reservekp(&["run", "--alpha", "1/2", instance.to_str().unwrap()]);
    assert_eq!(output.status.code(), Some(1));
}

#[test]
fn duel_plays_the_tight_game() {
    let output = reservekp(&[
        "duel",
        "--alpha",
        "1/2",
        "--policy",
        "auto",
        "--adversary",
        "four-item",
        "--epsilon",
        "1/1000000",
    ]);
    assert!(output.status.success());
    let text = stdout_of(&output);
    assert!(text.contains("ratio 5/2"), "{text}");
}

#[test]
fn duel_flags_a_reject_ended_sequence() {
    let output = reservekp(&[
        "duel",
        "--alpha",
        "1/5",
        "--policy",
        "alg1",
        "--adversary",
        "nonrejecting",
    ]);
    assert!(output.status.success());
    let text = stdout_of(&output);
    assert!(text.contains("ended on a reject"), "{text}");
}

#[test]
fn sweep_writes_deterministic_csv() {
    let dir = temp_dir();
    let first = dir.join("a.csv");
    let second = dir.join("b.csv");
    for path in [&first, &second] {
        let output = reservekp(&[
            "sweep",
            "--grid-start",
            "3/10",
            "--grid-end",
            "1/2",
            "--grid-step",
            "1/10",
            "--policy",
            "auto",
            "--adversary",
            "four-item",
            "--instances",
            "2",
            "--seed",
            "42",
            "--out",
            path.to_str().unwrap(),
        ]);
        assert!(output.status.success());
    }
    let a = std::fs::read(&first).unwrap();
    let b = std::fs::read(&second).unwrap();
    assert_eq!(a, b);
    let text = String::from_utf8(a).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "alpha,policy,opponent,gain,opt,ratio,alpha_dec,gain_dec,opt_dec,ratio_dec"
    );
    // 3 alphas x (1 duel + 2 instances)
    assert_eq!(lines.count(), 9);
}

#[test]
fn gen_output_round_trips_through_run() {
    let dir = temp_dir();
    let instance = dir.join("gen.txt");
    let output = reservekp(&[
        "gen",
        "--n",
        "6",
        "--seed",
        "7",
        "--out",
        instance.to_str().unwrap(),
    ]);
    assert!(output.status.success());
    let output = reservekp(&[
        "run",
        "--alpha",
        "2/5",
        "--policy",
        "threshold-2a",
        instance.to_str().unwrap(),
    ]);
    assert!(output.status.success());
    assert!(stdout_of(&output).contains("ratio"));
}

#[test]
fn verify_passes_on_generated_traces() {
    let output = reservekp(&[
        "verify",
        "--grid-start",
        "3/10",
        "--grid-end",
        "7/10",
        "--grid-step",
        "1/5",
        "--instances",
        "10",
        "--seed",
        "11",
    ]);
    assert!(output.status.success());
    assert!(stdout_of(&output).contains("all passed"));
}

#[test]
fn rho_honors_the_precision_flag() {
    let output = reservekp(&["rho", "--alpha", "3/10", "--precision", "12"]);
    assert!(output.status.success());
    // the midpoint of a 10^-12 bracket carries at least 12 good digits
    assert!(stdout_of(&output).contains("2.1066849064"));
}

#[test]
fn usage_errors_exit_with_two() {
    let output = reservekp(&["duel", "--alpha", "1/2"]); // missing --adversary
    assert_eq!(output.status.code(), Some(2));
    let output = reservekp(&["frobnicate"]);
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn unknown_policy_is_a_runtime_error() {
    let output = reservekp(&[
        "duel",
        "--alpha",
        "1/2",
        "--policy",
        "mystery",
        "--adversary",
        "chain",
    ]);
    assert_eq!(output.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&output.stderr).contains("unknown policy"));
}
