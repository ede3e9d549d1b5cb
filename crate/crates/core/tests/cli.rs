mod common;

use std::fs;

use common::cli;

fn gen_args(seed: &str, out: &str) -> Vec<String> {
    ["gen", "--n", "200", "--seed", seed, "--out", out].map(String::from).to_vec()
}

fn run(dir: &std::path::Path, args: &[String]) -> common::CliOutput {
    let refs: Vec<&str> = args.iter().map(String::as_str).collect();
    cli(dir, &refs)
}

#[test]
fn gen_is_reproducible_and_seed_sensitive() {
    let dir = tempfile::tempdir().unwrap();
    for (seed, out) in [("5", "a.csv"), ("5", "b.csv"), ("6", "c.csv")] {
        assert_eq!(run(dir.path(), &gen_args(seed, out)).code, 0);
    }
    let read = |f: &str| fs::read(dir.path().join(f)).unwrap();
    assert_eq!(read("a.csv"), read("b.csv"));
    assert_ne!(read("a.csv"), read("c.csv"));
    let text = String::from_utf8(read("a.csv")).unwrap();
    assert_eq!(text.lines().next(), Some("IQ,SAT,S,Y"));
    assert_eq!(text.lines().count(), 201);
}

#[test]
fn exit_codes_follow_error_kind() {
    let dir = tempfile::tempdir().unwrap();
    // Usage errors.
    assert_eq!(cli(dir.path(), &["gen", "--out", "x.csv"]).code, 2);
    assert_eq!(cli(dir.path(), &["audit", "--data", "x.csv", "--seed", "1", "--learner", "svm", "--out", "y.csv"]).code, 2);
    // Missing input file names the path.
    let missing = cli(dir.path(), &["audit", "--data", "nowhere.csv", "--seed", "1", "--out", "y.csv"]);
    assert_eq!(missing.code, 3);
    assert!(missing.stderr.contains("nowhere.csv"), "{}", missing.stderr);
    // Quotas that cannot be met.
    let infeasible = cli(
        dir.path(),
        &["gen", "--n", "100", "--class-rate", "0.9", "--minority-share", "0.9", "--p-minority", "0.1", "--seed", "1", "--out", "z.csv"],
    );
    assert_eq!(infeasible.code, 4, "{}", infeasible.stderr);
}

#[test]
fn config_fills_flags_and_command_line_wins() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("run.toml"), "seed = 9\n\n[gen]\nn = 150\nout = \"from_config.csv\"\n").unwrap();

    assert_eq!(cli(dir.path(), &["--config", "run.toml", "gen"]).code, 0);
    assert_eq!(cli(dir.path(), &["gen", "--n", "150", "--seed", "9", "--out", "explicit.csv"]).code, 0);
    let read = |f: &str| fs::read(dir.path().join(f)).unwrap();
    assert_eq!(read("from_config.csv"), read("explicit.csv"));

    // A flag on the command line overrides the file.
    assert_eq!(cli(dir.path(), &["--config", "run.toml", "gen", "--seed", "10", "--out", "override.csv"]).code, 0);
    assert_eq!(cli(dir.path(), &["gen", "--n", "150", "--seed", "10", "--out", "explicit10.csv"]).code, 0);
    assert_eq!(read("override.csv"), read("explicit10.csv"));
}

#[test]
fn unknown_config_key_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.toml"), "[gen]\nseed = 1\nout = \"g.csv\"\nlearner = \"mlp\"\n").unwrap();
    let out = cli(dir.path(), &["--config", "bad.toml", "gen"]);
    assert_eq!(out.code, 2);
    assert!(out.stderr.contains("learner"), "{}", out.stderr);
}

#[test]
fn audit_writes_one_report_row() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(dir.path(), &gen_args("3", "data.csv")).code, 0);
    let out = cli(
        dir.path(),
        &["audit", "--data", "data.csv", "--learner", "tree", "--reg", "3", "--seed", "4", "--out", "audit.csv"],
    );
    assert_eq!(out.code, 0, "{}", out.stderr);
    let text = fs::read_to_string(dir.path().join("audit.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "learner,reg,n_train,n_test,us_s,di_s,balanced_accuracy,passes_di_rule");
    assert_eq!(lines.len(), 2);
    assert!(lines[1].starts_with("tree,3,140,60,"), "{}", lines[1]);
}

#[test]
fn repair_only_appends_rows() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(dir.path(), &gen_args("8", "data.csv")).code, 0);
    let out = cli(
        dir.path(),
        &["repair", "--data", "data.csv", "--strategy", "cf_f", "--amount", "1", "--seed", "2", "--out", "fixed.csv"],
    );
    assert_eq!(out.code, 0, "{}", out.stderr);
    let before = fs::read_to_string(dir.path().join("data.csv")).unwrap();
    let after = fs::read_to_string(dir.path().join("fixed.csv")).unwrap();
    assert!(after.starts_with(&before));
    assert!(after.lines().count() > before.lines().count());
}
