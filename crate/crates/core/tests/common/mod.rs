//! Oracles and helpers shared by the integration and acceptance targets.
#![allow(dead_code)]

use std::path::Path;
use std::process::Command;
use std::sync::Mutex;

use biasaudit::augment::RepairStrategy;
use biasaudit::tune::{tune_amount_with, TuneConfig};
use biasaudit::{Dataset, LearnerSpec, SynthConfig};

/// Brute-force `(US_S, DI_S, balanced accuracy)` by counting; `None` where
/// a denominator is zero.
pub fn oracle_metrics(y: &[u8], yhat: &[u8], s: &[u8]) -> (Option<f64>, Option<f64>, Option<f64>) {
    let count = |f: &dyn Fn(usize) -> bool| (0..y.len()).filter(|&i| f(i)).count() as f64;
    let ratio = |a: f64, b: f64| (b > 0.0).then(|| a / b);

    let pred_pos_s0 = count(&|i| s[i] == 0 && yhat[i] == 1);
    let true_pos_s0 = count(&|i| s[i] == 0 && y[i] == 1);
    let us = ratio(pred_pos_s0, true_pos_s0);

    let n_s0 = count(&|i| s[i] == 0);
    let n_s1 = count(&|i| s[i] == 1);
    let pred_pos_s1 = count(&|i| s[i] == 1 && yhat[i] == 1);
    let di = match (ratio(pred_pos_s0, n_s0), ratio(pred_pos_s1, n_s1)) {
        (Some(a), Some(b)) => ratio(a, b),
        _ => None,
    };

    let tp = count(&|i| y[i] == 1 && yhat[i] == 1);
    let pos = count(&|i| y[i] == 1);
    let tn = count(&|i| y[i] == 0 && yhat[i] == 0);
    let neg = count(&|i| y[i] == 0);
    let ba = match (ratio(tp, pos), ratio(tn, neg)) {
        (Some(tpr), Some(tnr)) => Some((tpr + tnr) / 2.0),
        _ => None,
    };
    (us, di, ba)
}

/// Spearman correlation from average ranks found by pairwise counting.
pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    let rank = |v: &[f64]| -> Vec<f64> {
        v.iter()
            .map(|&a| {
                let below = v.iter().filter(|&&b| b < a).count() as f64;
                let ties = v.iter().filter(|&&b| b == a).count() as f64;
                below + (ties + 1.0) / 2.0
            })
            .collect()
    };
    let (rx, ry) = (rank(x), rank(y));
    let n = x.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    (vx > 0.0 && vy > 0.0).then(|| cov / (vx * vy).sqrt())
}

const MARKER_IQ: f64 = 1.0e6;

/// Plants one row with an impossible IQ in a small synthetic set, tunes an
/// amount with the strategy picked by `seed`, and checks every fold the
/// tuner evaluated: validation rows are untouched originals, the marker
/// shows up in validation only as itself, and when it is held out no copy
/// or interpolation of it reaches the training portion.
pub fn leakage_canary(seed: u64) -> Result<(), String> {
    let strategy = [
        RepairStrategy::CounterfactualF,
        RepairStrategy::CounterfactualL,
        RepairStrategy::SmoteF,
    ][(seed % 3) as usize];
    // The marker sits in the pool the strategy samples from.
    let (ms, my) = match strategy {
        RepairStrategy::CounterfactualF => (1u8, 1u8),
        RepairStrategy::CounterfactualL => (0, 0),
        _ => (0, 1),
    };
    let base = biasaudit::synth::generate(&SynthConfig {
        n: 200,
        ..SynthConfig::new(0.3, 0.3, seed)
    })
    .map_err(|e| e.to_string())?;
    let marker = base.n();
    let mut features = base.features().to_vec();
    features.extend([MARKER_IQ + seed as f64, 1000.0]);
    let mut target = base.target().to_vec();
    target.push(my);
    let mut sensitive = base.sensitive().to_vec();
    sensitive.push(ms);
    let d = Dataset::from_flat(base.feature_names().to_vec(), features, target, sensitive).map_err(|e| e.to_string())?;

    let problems = Mutex::new(Vec::new());
    let seen = Mutex::new(0usize);
    let cfg = TuneConfig::new(5, seed);
    tune_amount_with(&d, strategy, &LearnerSpec::gaussian_nb(1e-9), &cfg, &|view| {
        *seen.lock().unwrap() += 1;
        let mut bad = Vec::new();
        if view.valid.n() != view.valid_idx.len() {
            bad.push(format!("validation has {} rows for {} indices", view.valid.n(), view.valid_idx.len()));
        }
        for (k, &i) in view.valid_idx.iter().enumerate().take(view.valid.n()) {
            if view.valid.row(k) != d.row(i)
                || view.valid.target()[k] != d.target()[i]
                || view.valid.sensitive()[k] != d.sensitive()[i]
            {
                bad.push(format!("validation row {k} differs from source row {i}"));
            }
        }
        let marked = |data: &Dataset, rows: std::ops::Range<usize>| rows.filter(|&r| data.row(r)[0] > 150.0).count();
        let held_out = view.valid_idx.contains(&marker);
        let in_valid = marked(view.valid, 0..view.valid.n());
        if in_valid != usize::from(held_out) {
            bad.push(format!("marker appears {in_valid} time(s) in validation"));
        }
        let train = &view.train.data;
        if held_out && marked(train, 0..train.n()) > 0 {
            bad.push("held-out marker leaked into the training portion".into());
        }
        if !bad.is_empty() {
            problems
                .lock()
                .unwrap()
                .push(format!("amount {} fold {}: {}", view.amount, view.fold, bad.join("; ")));
        }
    })
    .map_err(|e| e.to_string())?;
    let problems = problems.into_inner().unwrap();
    let seen = seen.into_inner().unwrap();
    if seen != cfg.amounts.len() * cfg.folds {
        return Err(format!("observer saw {seen} evaluations"));
    }
    if problems.is_empty() {
        Ok(())
    } else {
        Err(problems.join(" | "))
    }
}

pub struct CliOutput {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

/// Runs the command-line binary in `dir`.
pub fn cli(dir: &Path, args: &[&str]) -> CliOutput {
    let out = Command::new(env!("CARGO_BIN_EXE_biasaudit"))
        .args(args)
        .current_dir(dir)
        .env("RUST_LOG", "error")
        .output()
        .expect("binary runs");
    CliOutput {
        code: out.status.code().unwrap_or(-1),
        stdout: String::from_utf8_lossy(&out.stdout).into_owned(),
        stderr: String::from_utf8_lossy(&out.stderr).into_owned(),
    }
}

/// Every small-grid command with its output files, relative to the run
/// directory. Each run writes into its own directory so reruns can be
/// compared byte for byte.
pub fn smoke_commands() -> Vec<(Vec<&'static str>, Vec<&'static str>)> {
    vec![
        (
            vec!["gen", "--n", "300", "--class-rate", "0.2", "--minority-share", "0.45", "--seed", "11", "--out", "gen.csv"],
            vec!["gen.csv"],
        ),
        (
            vec!["audit", "--data", "../input.csv", "--learner", "logreg", "--cv-folds", "3", "--seed", "12", "--out", "audit.csv"],
            vec!["audit.csv"],
        ),
        (
            vec![
                "sweep-noise", "--n", "300", "--repeats", "2", "--sigmas", "0,1", "--cv-folds", "3", "--seed", "13", "--out-dir", "noise",
            ],
            vec!["noise/runs.csv", "noise/runs_medians.csv", "noise/curve.svg"],
        ),
        (
            vec!["sweep-reg", "--n", "300", "--repeats", "2", "--learner", "tree", "--reg-grid", "1,4", "--seed", "14", "--out-dir", "reg"],
            vec!["reg/runs.csv", "reg/runs_medians.csv", "reg/curve.svg"],
        ),
        (
            vec![
                "sweep-imbalance", "--n", "300", "--repeats", "1", "--class-rates", "0.1,0.3", "--minority-shares", "0.2,0.5",
                "--reg", "0.001", "--seed", "15", "--out-dir", "imb",
            ],
            vec!["imb/runs.csv", "imb/runs_medians.csv", "imb/us_s.svg"],
        ),
        (
            vec!["repair", "--data", "../input.csv", "--strategy", "smote_f", "--amount", "0.5", "--seed", "16", "--out", "repaired.csv"],
            vec!["repaired.csv"],
        ),
        (
            vec![
                "tune", "--data", "../input.csv", "--strategy", "cf_l", "--learner", "nb", "--folds", "3", "--amounts", "0.2,0.6,1",
                "--seed", "17", "--out", "tune.csv",
            ],
            vec!["tune.csv"],
        ),
        (
            vec![
                "compare", "--synthetic", "--n", "300", "--learner", "logreg", "--strategies", "none,cf_f,cf_l", "--repeats", "2",
                "--folds", "3", "--amounts", "0.5,1", "--seed", "18", "--out-dir", "cmp",
            ],
            vec!["cmp/runs.csv", "cmp/runs_medians.csv", "cmp/curve.svg"],
        ),
    ]
}

/// Runs every smoke command twice in fresh directories under `root` and
/// returns the files whose bytes differ (or the first command failure).
pub fn determinism_check(root: &Path) -> Result<usize, String> {
    let input = root.join("input.csv");
    let d = biasaudit::synth::generate(&SynthConfig {
        n: 300,
        ..SynthConfig::new(0.25, 0.4, 99)
    })
    .map_err(|e| e.to_string())?;
    biasaudit::io::write_dataset_csv(&d, &input).map_err(|e| e.to_string())?;

    let mut compared = 0;
    for (i, (args, outputs)) in smoke_commands().into_iter().enumerate() {
        let mut bytes = Vec::new();
        for run in 0..2 {
            let dir = root.join(format!("cmd{i}_run{run}"));
            std::fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
            let out = cli(&dir, &args);
            if out.code != 0 {
                return Err(format!("`{}` exited {}: {}", args.join(" "), out.code, out.stderr.trim()));
            }
            let files: Vec<Vec<u8>> = outputs
                .iter()
                .map(|f| std::fs::read(dir.join(f)).map_err(|e| format!("{f}: {e}")))
                .collect::<Result<_, _>>()?;
            bytes.push((files, out.stdout));
        }
        if bytes[0] != bytes[1] {
            return Err(format!("`{}` is not reproducible", args[0]));
        }
        compared += outputs.len();
    }
    Ok(compared)
}
