//! Seeded sweep runners with the repeat-then-median protocol.
//!
//! Every (cell, repeat) run gets a child seed derived from the master seed,
//! the cell coordinates and the repeat index, so a sweep's content does not
//! depend on how rayon schedules the runs.

use rayon::prelude::*;

use crate::augment::{repair, RepairSpec, RepairStrategy};
use crate::dataset::{split, Dataset, SplitSpec};
use crate::error::{Error, Result};
use crate::learners::{fit, tune_balanced_accuracy, LearnerKind, LearnerSpec};
use crate::metrics::{audit, AuditReport, Metric};
use crate::seed;
use crate::stats::median;
use crate::synth::{generate, inject_noise, NoiseSpec, SynthConfig};
use crate::tune::{tune_amount_with, TuneConfig};

pub const DEFAULT_REPEATS: usize = 20;

pub fn default_sigmas() -> Vec<f64> {
    vec![0.0, 0.25, 0.5, 0.75, 1.0, 1.5, 2.0]
}

pub fn default_class_rates() -> Vec<f64> {
    vec![0.10, 0.15, 0.20, 0.25, 0.30]
}

pub fn default_minority_shares() -> Vec<f64> {
    vec![0.10, 0.20, 0.30, 0.40, 0.50]
}

/// Knob values swept on the x-axis of the regularization experiment.
pub fn default_reg_grid(kind: LearnerKind) -> Vec<f64> {
    match kind {
        LearnerKind::LogReg => (-3..=3).map(|e| 10f64.powi(e)).collect(),
        LearnerKind::NeuralNet => (-4..=2).map(|e| 10f64.powi(e)).collect(),
        LearnerKind::DecisionTree => (1..=10).map(f64::from).collect(),
        LearnerKind::Knn => vec![1.0, 5.0, 15.0, 45.0, 135.0],
        LearnerKind::GaussianNB => vec![1e-9, 1e-6, 1e-3, 1e-1, 1.0],
    }
}

/// Knob values tried when a learner is tuned on balanced accuracy.
pub fn default_cv_grid(kind: LearnerKind) -> Vec<f64> {
    match kind {
        LearnerKind::LogReg => vec![1e-4, 1e-3, 1e-2, 1e-1, 1.0],
        LearnerKind::NeuralNet => vec![1e-4, 1e-3, 1e-2, 1e-1],
        LearnerKind::DecisionTree => vec![2.0, 4.0, 6.0, 8.0, 10.0],
        LearnerKind::Knn => vec![5.0, 15.0, 25.0, 45.0],
        LearnerKind::GaussianNB => vec![1e-9, 1e-6, 1e-3],
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Level {
    Num(f64),
    Label(String),
}

impl Level {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Level::Num(v) => Some(*v),
            Level::Label(_) => None,
        }
    }
}

impl std::fmt::Display for Level {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Level::Num(v) => write!(f, "{v}"),
            Level::Label(s) => f.write_str(s),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    pub name: String,
    pub levels: Vec<Level>,
}

impl Axis {
    pub fn numeric(name: &str, values: &[f64]) -> Self {
        Self {
            name: name.into(),
            levels: values.iter().map(|&v| Level::Num(v)).collect(),
        }
    }

    pub fn labels(name: &str, values: &[&str]) -> Self {
        Self {
            name: name.into(),
            levels: values.iter().map(|v| Level::Label(v.to_string())).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Audited(AuditReport),
    Failed(String),
}

impl Outcome {
    pub fn report(&self) -> Option<&AuditReport> {
        match self {
            Outcome::Audited(r) => Some(r),
            Outcome::Failed(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Run {
    pub repeat: usize,
    pub seed: u64,
    pub outcome: Outcome,
    /// Augmentation amount picked by the tuner, for remediation runs.
    pub amount: Option<f64>,
}

/// Medians over the defined repeats of one cell.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Summary {
    pub us_s: Option<f64>,
    pub di_s: Option<f64>,
    pub balanced_accuracy: Option<f64>,
    pub undefined_us: usize,
    pub undefined_di: usize,
    pub undefined_ba: usize,
    pub failed: usize,
}

impl Summary {
    pub fn of(runs: &[Run]) -> Self {
        let reports: Vec<&AuditReport> = runs.iter().filter_map(|r| r.outcome.report()).collect();
        let pick = |f: fn(&AuditReport) -> Metric| -> (Option<f64>, usize) {
            let values: Vec<f64> = reports.iter().filter_map(|r| f(r).value()).collect();
            let skipped = reports.len() - values.len();
            (median(&values), skipped)
        };
        let (us_s, undefined_us) = pick(|r| r.us_s);
        let (di_s, undefined_di) = pick(|r| r.di_s);
        let (balanced_accuracy, undefined_ba) = pick(|r| r.balanced_accuracy);
        Self {
            us_s,
            di_s,
            balanced_accuracy,
            undefined_us,
            undefined_di,
            undefined_ba,
            failed: runs.len() - reports.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    /// One level index per axis.
    pub coords: Vec<usize>,
    pub runs: Vec<Run>,
    pub summary: Summary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepKind {
    Noise,
    Regularization,
    Imbalance,
    Remediation,
}

impl SweepKind {
    pub fn name(self) -> &'static str {
        match self {
            SweepKind::Noise => "noise",
            SweepKind::Regularization => "regularization",
            SweepKind::Imbalance => "imbalance",
            SweepKind::Remediation => "remediation",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub kind: SweepKind,
    pub learner: LearnerKind,
    pub master_seed: u64,
    pub repeats: usize,
    pub axes: Vec<Axis>,
    /// Row-major over the axes (last axis fastest).
    pub cells: Vec<Cell>,
}

impl SweepResult {
    pub fn cell(&self, coords: &[usize]) -> Option<&Cell> {
        self.cells.iter().find(|c| c.coords == coords)
    }

    /// Medians along a one-dimensional sweep.
    pub fn series(&self, pick: fn(&Summary) -> Option<f64>) -> Vec<Option<f64>> {
        self.cells.iter().map(|c| pick(&c.summary)).collect()
    }
}

/// Grid coordinates in row-major order.
fn grid(shape: &[usize]) -> Vec<Vec<usize>> {
    shape.iter().fold(vec![Vec::new()], |acc, &len| {
        acc.into_iter()
            .flat_map(|prefix| {
                (0..len).map(move |i| {
                    let mut c = prefix.clone();
                    c.push(i);
                    c
                })
            })
            .collect()
    })
}

/// Run `job(coords, repeat, seed)` for every cell and repeat, in parallel.
fn run_grid<F>(
    kind: SweepKind,
    learner: LearnerKind,
    master_seed: u64,
    repeats: usize,
    axes: Vec<Axis>,
    job: F,
) -> Result<SweepResult>
where
    F: Fn(&[usize], usize, u64) -> Result<(AuditReport, Option<f64>)> + Sync,
{
    if repeats == 0 {
        return Err(Error::InvalidArgument("repeats must be at least 1".into()));
    }
    let shape: Vec<usize> = axes.iter().map(|a| a.levels.len()).collect();
    let coords = grid(&shape);
    let jobs: Vec<(usize, usize)> = (0..coords.len()).flat_map(|c| (0..repeats).map(move |r| (c, r))).collect();
    let runs: Vec<Run> = jobs
        .par_iter()
        .map(|&(c, r)| {
            let mut path: Vec<u64> = coords[c].iter().map(|&i| i as u64).collect();
            path.push(r as u64);
            let run_seed = seed::derive(master_seed, &path);
            let (outcome, amount) = match job(&coords[c], r, run_seed) {
                Ok((report, amount)) => (Outcome::Audited(report), amount),
                Err(e) => {
                    log::warn!("{} cell {:?} repeat {r}: {e}", kind.name(), coords[c]);
                    (Outcome::Failed(e.to_string()), None)
                }
            };
            Run {
                repeat: r,
                seed: run_seed,
                outcome,
                amount,
            }
        })
        .collect();

    let cells = coords
        .into_iter()
        .zip(runs.chunks(repeats))
        .map(|(coords, runs)| Cell {
            coords,
            summary: Summary::of(runs),
            runs: runs.to_vec(),
        })
        .collect();
    Ok(SweepResult {
        kind,
        learner,
        master_seed,
        repeats,
        axes,
        cells,
    })
}

/// How learners are chosen inside a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepOptions {
    /// Tune the learner's knob on cross-validated balanced accuracy; when
    /// false the given spec is used as is.
    pub tune_learner: bool,
    pub cv_folds: usize,
    pub train_fraction: f64,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            tune_learner: true,
            cv_folds: 10,
            train_fraction: 0.7,
        }
    }
}

fn split_spec(seed: u64, opts: &SweepOptions) -> SplitSpec {
    SplitSpec {
        train_fraction: opts.train_fraction,
        ..SplitSpec::new(seed::derive(seed, &[seed::stream::SPLIT]))
    }
}

fn choose_and_audit(
    learner: &LearnerSpec,
    data: &Dataset,
    run_seed: u64,
    opts: &SweepOptions,
) -> Result<AuditReport> {
    let (train, test) = split(data, &split_spec(run_seed, opts))?;
    let learner = learner.clone().with_seed(seed::derive(run_seed, &[seed::stream::LEARNER]));
    let chosen = if opts.tune_learner {
        let grid: Vec<LearnerSpec> = default_cv_grid(learner.kind)
            .into_iter()
            .map(|v| learner.clone().with_reg(v))
            .collect();
        tune_balanced_accuracy(&grid, &train, opts.cv_folds, seed::derive(run_seed, &[seed::stream::FOLDS]))?
    } else {
        learner
    };
    audit(&fit(&chosen, &train)?, &test)
}

fn draw(base: &SynthConfig, run_seed: u64) -> Result<Dataset> {
    generate(&SynthConfig {
        seed: seed::derive(run_seed, &[seed::stream::DATA]),
        ..base.clone()
    })
}

/// Irreducible-error sweep: standardized Gaussian feature noise of each
/// `sigma`, learner tuned on balanced accuracy, audited on the test split.
/// The master seed is `base.seed`.
pub fn sweep_noise(
    learner: &LearnerSpec,
    base: &SynthConfig,
    sigmas: &[f64],
    repeats: usize,
    opts: &SweepOptions,
) -> Result<SweepResult> {
    let axes = vec![Axis::numeric("sigma", sigmas)];
    run_grid(SweepKind::Noise, learner.kind, base.seed, repeats, axes, |c, _, run_seed| {
        let clean = draw(base, run_seed)?;
        let noisy = inject_noise(
            &clean,
            &NoiseSpec {
                sigma: sigmas[c[0]],
                seed: seed::derive(run_seed, &[seed::stream::NOISE]),
            },
        )?;
        Ok((choose_and_audit(learner, &noisy, run_seed, opts)?, None))
    })
}

/// Regularization sweep: the knob is fixed at each grid value (never tuned).
pub fn sweep_regularization(
    learner: &LearnerSpec,
    base: &SynthConfig,
    reg_grid: &[f64],
    repeats: usize,
) -> Result<SweepResult> {
    if !matches!(
        learner.kind,
        LearnerKind::LogReg | LearnerKind::DecisionTree | LearnerKind::NeuralNet
    ) {
        return Err(Error::InvalidArgument(format!(
            "regularization sweeps support logreg, tree and mlp, not {}",
            learner.kind
        )));
    }
    let axes = vec![Axis::numeric(learner.kind.knob_name(), reg_grid)];
    let opts = SweepOptions {
        tune_learner: false,
        ..SweepOptions::default()
    };
    run_grid(SweepKind::Regularization, learner.kind, base.seed, repeats, axes, |c, _, run_seed| {
        let data = draw(base, run_seed)?;
        let spec = learner.clone().with_reg(reg_grid[c[0]]);
        Ok((choose_and_audit(&spec, &data, run_seed, &opts)?, None))
    })
}

/// Class-rate by minority-share grid. Infeasible cells are recorded as
/// failed runs.
pub fn sweep_imbalance(
    learner: &LearnerSpec,
    base: &SynthConfig,
    class_rates: &[f64],
    minority_shares: &[f64],
    repeats: usize,
    opts: &SweepOptions,
) -> Result<SweepResult> {
    let axes = vec![
        Axis::numeric("class_rate", class_rates),
        Axis::numeric("minority_share", minority_shares),
    ];
    run_grid(SweepKind::Imbalance, learner.kind, base.seed, repeats, axes, |c, _, run_seed| {
        let cfg = SynthConfig {
            class_rate: class_rates[c[0]],
            minority_share: minority_shares[c[1]],
            ..base.clone()
        };
        let data = draw(&cfg, run_seed)?;
        Ok((choose_and_audit(learner, &data, run_seed, opts)?, None))
    })
}

/// Where remediation data comes from.
#[derive(Debug, Clone)]
pub enum DataSource {
    /// A fresh synthetic draw per repeat.
    Synthetic(SynthConfig),
    /// A fixed dataset, re-split per repeat.
    Fixed(Dataset),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RemediationOptions {
    pub tune_folds: usize,
    pub amounts: Vec<f64>,
    pub train_fraction: f64,
}

impl Default for RemediationOptions {
    fn default() -> Self {
        Self {
            tune_folds: crate::tune::DEFAULT_FOLDS,
            amounts: crate::tune::default_amounts(),
            train_fraction: 0.7,
        }
    }
}

/// Per repeat: split, tune the amount on the training split, augment the
/// whole training split with it, fit and audit the test split. All arms of a
/// repeat share the data draw and split; each arm has its own repair seed.
pub fn compare_remediation(
    learner: &LearnerSpec,
    source: &DataSource,
    strategies: &[RepairStrategy],
    repeats: usize,
    master_seed: u64,
    opts: &RemediationOptions,
) -> Result<SweepResult> {
    let names: Vec<&str> = strategies.iter().map(|s| s.name()).collect();
    let axes = vec![Axis::labels("strategy", &names)];
    let split_opts = SweepOptions {
        train_fraction: opts.train_fraction,
        ..SweepOptions::default()
    };
    run_grid(SweepKind::Remediation, learner.kind, master_seed, repeats, axes, |c, r, run_seed| {
        let shared = seed::derive(master_seed, &[u64::MAX, r as u64]);
        let data = match source {
            DataSource::Synthetic(cfg) => draw(cfg, shared)?,
            DataSource::Fixed(d) => d.clone(),
        };
        let (train, test) = split(&data, &split_spec(shared, &split_opts))?;
        let learner = learner.clone().with_seed(seed::derive(shared, &[seed::stream::LEARNER]));
        let strategy = strategies[c[0]];
        let (repaired, amount) = if strategy == RepairStrategy::NoRepair {
            (train, None)
        } else {
            let tune_cfg = TuneConfig {
                folds: opts.tune_folds,
                seed: seed::derive(run_seed, &[seed::stream::TUNE]),
                amounts: opts.amounts.clone(),
            };
            let chosen = tune_amount_with(&train, strategy, &learner, &tune_cfg, &|_| {})?.chosen;
            let spec = RepairSpec {
                seed: seed::derive(run_seed, &[seed::stream::REPAIR]),
                ..chosen
            };
            (repair(&train, &spec)?.data, Some(chosen.amount))
        };
        Ok((audit(&fit(&learner, &repaired)?, &test)?, amount))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_base(seed: u64) -> SynthConfig {
        SynthConfig {
            n: 400,
            ..SynthConfig::new(0.3, 0.3, seed)
        }
    }

    #[test]
    fn grid_is_row_major() {
        assert_eq!(grid(&[2, 3]).len(), 6);
        assert_eq!(grid(&[2, 3])[4], vec![1, 1]);
        assert_eq!(grid(&[]), vec![Vec::<usize>::new()]);
    }

    #[test]
    fn summary_skips_undefined_and_failed() {
        let report = |us: Metric| AuditReport {
            us_s: us,
            di_s: Metric::Value(1.0),
            balanced_accuracy: Metric::Value(0.5),
            counts: Default::default(),
            n_test: 0,
        };
        let runs: Vec<Run> = [
            Outcome::Audited(report(Metric::Value(0.2))),
            Outcome::Audited(report(Metric::Undefined)),
            Outcome::Audited(report(Metric::Value(0.6))),
            Outcome::Failed("boom".into()),
        ]
        .into_iter()
        .enumerate()
        .map(|(i, outcome)| Run {
            repeat: i,
            seed: 0,
            outcome,
            amount: None,
        })
        .collect();
        let s = Summary::of(&runs);
        assert_eq!(s.us_s, Some(0.4));
        assert_eq!((s.undefined_us, s.failed), (1, 1));
        assert_eq!(s.di_s, Some(1.0));
    }

    #[test]
    fn noise_sweep_is_reproducible() {
        let learner = LearnerSpec::logreg(1e-2);
        let opts = SweepOptions {
            cv_folds: 3,
            ..SweepOptions::default()
        };
        let a = sweep_noise(&learner, &small_base(5), &[0.0, 1.0], 1, &opts).unwrap();
        let b = sweep_noise(&learner, &small_base(5), &[0.0, 1.0], 1, &opts).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.cells.len(), 2);
        assert!(a.cells.iter().all(|c| c.runs.len() == 1 && c.summary.failed == 0));
    }

    #[test]
    fn regularization_sweep_rejects_unsupported_learners() {
        assert!(sweep_regularization(&LearnerSpec::knn(3), &small_base(1), &[1.0], 1).is_err());
        assert!(sweep_regularization(&LearnerSpec::logreg(1.0), &small_base(1), &[1.0], 0).is_err());
    }

    #[test]
    fn infeasible_cells_are_marked() {
        let base = SynthConfig {
            p_minority: 0.2,
            ..small_base(2)
        };
        let opts = SweepOptions {
            tune_learner: false,
            ..SweepOptions::default()
        };
        let r = sweep_imbalance(&LearnerSpec::logreg(1e-2), &base, &[0.3], &[0.1, 0.9], 2, &opts).unwrap();
        assert_eq!(r.cells[0].summary.failed, 0);
        assert_eq!(r.cells[1].summary.failed, 2);
        assert!(matches!(&r.cells[1].runs[0].outcome, Outcome::Failed(m) if m.contains("S0Y0")));
    }

    #[test]
    fn huge_penalty_underestimates_completely() {
        let r = sweep_regularization(&LearnerSpec::logreg(1.0), &small_base(3), &[1e6], 2).unwrap();
        assert_eq!(r.cells[0].summary.us_s, Some(0.0));
    }
}
