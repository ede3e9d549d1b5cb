use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, CommandFactory, Parser, Subcommand};

use biasaudit::augment::{repair, Notice, RepairSpec, RepairStrategy, DEFAULT_K_NEIGHBORS};
use biasaudit::dataset::{split, SplitSpec};
use biasaudit::experiments::{self, DataSource, RemediationOptions, SweepOptions, SweepResult};
use biasaudit::io::{self, IngestSchema, SvgMetric};
use biasaudit::learners::{fit, tune_balanced_accuracy, LearnerKind};
use biasaudit::metrics::audit;
use biasaudit::tune::{tune_amount_with, TuneConfig, DEFAULT_FOLDS};
use biasaudit::{seed, synth, Dataset, Error, LearnerSpec, NoiseSpec, Result, SynthConfig};

/// Audit binary classifiers for underestimation of a minority group and
/// repair the training data.
#[derive(Parser)]
#[command(name = "biasaudit", version)]
struct Cli {
    /// TOML file of flag values; top-level keys apply to every command and
    /// a `[command-name]` table to one command. Flags given on the command
    /// line win.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic admissions dataset.
    Gen(GenArgs),
    /// Fit a learner on a 70/30 split and audit the held-out part.
    Audit(AuditArgs),
    /// Underestimation as feature noise grows.
    SweepNoise(SweepNoiseArgs),
    /// Underestimation across a regularization grid.
    SweepReg(SweepRegArgs),
    /// Underestimation across class-rate by minority-share cells.
    SweepImbalance(SweepImbalanceArgs),
    /// Augment a dataset with one repair strategy.
    Repair(RepairArgs),
    /// Pick an augmentation amount by cross-validation.
    Tune(TuneArgs),
    /// Compare repair strategies over repeated splits.
    Compare(CompareArgs),
}

#[derive(Args, Clone)]
struct SynthArgs {
    /// Number of rows per synthetic draw.
    #[arg(long)]
    n: Option<usize>,
    /// Target share of rows with Y = 1.
    #[arg(long)]
    class_rate: Option<f64>,
    /// Target share of positives that belong to the minority group.
    #[arg(long)]
    minority_share: Option<f64>,
    /// Share of rows in the minority group.
    #[arg(long)]
    p_minority: Option<f64>,
    /// Standard deviation of the SAT score noise, in points.
    #[arg(long)]
    sat_noise_sd: Option<f64>,
}

impl SynthArgs {
    fn config(&self, seed: u64, class_rate: f64, minority_share: f64) -> SynthConfig {
        let base = SynthConfig::default();
        SynthConfig {
            n: self.n.unwrap_or(base.n),
            p_minority: self.p_minority.unwrap_or(base.p_minority),
            class_rate: self.class_rate.unwrap_or(class_rate),
            minority_share: self.minority_share.unwrap_or(minority_share),
            sat_noise_sd: self.sat_noise_sd.unwrap_or(base.sat_noise_sd),
            seed,
            ..base
        }
    }
}

#[derive(Args, Clone)]
struct LearnerArgs {
    /// logreg, mlp, tree, knn or nb.
    #[arg(long, default_value = "logreg")]
    learner: LearnerKind,
    /// Fix the learner's knob (λ, α, depth, k or smoothing) instead of
    /// tuning it on balanced accuracy.
    #[arg(long)]
    reg: Option<f64>,
    /// Leave the sensitive attribute out of the features.
    #[arg(long)]
    exclude_sensitive: bool,
}

impl LearnerArgs {
    fn spec(&self) -> LearnerSpec {
        let spec = LearnerSpec::default_for(self.learner).with_sensitive(!self.exclude_sensitive);
        match self.reg {
            Some(r) => spec.with_reg(r),
            None => spec,
        }
    }
}

#[derive(Args)]
struct GenArgs {
    #[command(flatten)]
    synth: SynthArgs,
    /// Standardize and add Gaussian noise of this scale to the features.
    #[arg(long)]
    noise_sigma: Option<f64>,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct AuditArgs {
    #[arg(long)]
    data: PathBuf,
    /// Preset (adult, recidivism, synthetic) or TOML schema file.
    #[arg(long, default_value = "synthetic")]
    schema: String,
    #[command(flatten)]
    learner: LearnerArgs,
    #[arg(long, default_value_t = 10)]
    cv_folds: usize,
    #[arg(long, default_value_t = 0.7)]
    train_fraction: f64,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SweepCommon {
    #[command(flatten)]
    learner: LearnerArgs,
    #[arg(long, default_value_t = experiments::DEFAULT_REPEATS)]
    repeats: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out_dir: PathBuf,
    #[command(flatten)]
    synth: SynthArgs,
}

#[derive(Args)]
struct SweepNoiseArgs {
    #[command(flatten)]
    common: SweepCommon,
    /// Noise scales, comma separated.
    #[arg(long, value_delimiter = ',')]
    sigmas: Option<Vec<f64>>,
    #[arg(long, default_value_t = 10)]
    cv_folds: usize,
}

#[derive(Args)]
struct SweepRegArgs {
    #[command(flatten)]
    common: SweepCommon,
    /// Knob values, comma separated.
    #[arg(long, value_delimiter = ',')]
    reg_grid: Option<Vec<f64>>,
}

#[derive(Args)]
struct SweepImbalanceArgs {
    #[command(flatten)]
    common: SweepCommon,
    #[arg(long, value_delimiter = ',')]
    class_rates: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    minority_shares: Option<Vec<f64>>,
    #[arg(long, default_value_t = 10)]
    cv_folds: usize,
}

#[derive(Args)]
struct RepairArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value = "synthetic")]
    schema: String,
    /// smote_f, cf_f or cf_l.
    #[arg(long)]
    strategy: RepairStrategy,
    #[arg(long)]
    amount: f64,
    #[arg(long, default_value_t = DEFAULT_K_NEIGHBORS)]
    k_neighbors: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TuneArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value = "synthetic")]
    schema: String,
    #[arg(long)]
    strategy: RepairStrategy,
    #[command(flatten)]
    learner: LearnerArgs,
    #[arg(long, default_value_t = DEFAULT_FOLDS)]
    folds: usize,
    /// Candidate amounts, comma separated (default 0.05 to 1.00 by 0.05).
    #[arg(long, value_delimiter = ',')]
    amounts: Option<Vec<f64>>,
    #[arg(long)]
    seed: u64,
    /// Also write every candidate's fold medians here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    /// Dataset to re-split on every repeat.
    #[arg(long, conflicts_with = "synthetic", required_unless_present = "synthetic")]
    data: Option<PathBuf>,
    /// Draw a fresh synthetic dataset on every repeat.
    #[arg(long)]
    synthetic: bool,
    #[arg(long, default_value = "synthetic")]
    schema: String,
    #[arg(long, value_delimiter = ',', default_value = "none,smote_f,cf_f,cf_l")]
    strategies: Vec<RepairStrategy>,
    #[arg(long, default_value = "mlp")]
    learner: LearnerKind,
    #[arg(long)]
    reg: Option<f64>,
    #[arg(long)]
    exclude_sensitive: bool,
    #[arg(long, default_value_t = experiments::DEFAULT_REPEATS)]
    repeats: usize,
    #[arg(long, default_value_t = DEFAULT_FOLDS)]
    folds: usize,
    #[arg(long, value_delimiter = ',')]
    amounts: Option<Vec<f64>>,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out_dir: PathBuf,
    #[command(flatten)]
    synth: SynthArgs,
}

fn load(path: &Path, schema: &str) -> Result<Dataset> {
    let schema = IngestSchema::resolve(schema)?;
    let loaded = io::load_csv(path, &schema)?;
    let r = &loaded.report;
    if !r.dropped.is_empty() {
        log::warn!("{}: dropped {} of {} rows", path.display(), r.rows_dropped(), r.rows_read);
    }
    log::info!(
        "{}: {} rows, positive share {:.4}",
        path.display(),
        r.rows_kept,
        loaded.positive_share()
    );
    Ok(loaded.data)
}

fn write_outputs(r: &SweepResult, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    io::write_sweep_csv(r, dir.join("runs.csv"))?;
    if r.axes.len() == 2 {
        for m in SvgMetric::ALL {
            io::render_heatmap(r, m, dir.join(format!("{}.svg", m.name())))?;
        }
    } else {
        io::render_curve(r, dir.join("curve.svg"))?;
    }
    Ok(())
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Gen(a) => {
            let cfg = a.synth.config(a.seed, SynthConfig::default().class_rate, SynthConfig::default().minority_share);
            let mut d = synth::generate(&cfg)?;
            if let Some(sigma) = a.noise_sigma {
                let seed = seed::derive(a.seed, &[seed::stream::NOISE]);
                d = synth::inject_noise(&d, &NoiseSpec { sigma, seed })?;
            }
            io::write_dataset_csv(&d, &a.out)
        }
        Command::Audit(a) => {
            let d = load(&a.data, &a.schema)?;
            let split_spec = SplitSpec {
                train_fraction: a.train_fraction,
                ..SplitSpec::new(seed::derive(a.seed, &[seed::stream::SPLIT]))
            };
            let (train, test) = split(&d, &split_spec)?;
            let base = a.learner.spec().with_seed(seed::derive(a.seed, &[seed::stream::LEARNER]));
            let spec = if a.learner.reg.is_some() {
                base
            } else {
                let grid: Vec<LearnerSpec> = experiments::default_cv_grid(base.kind)
                    .into_iter()
                    .map(|v| base.clone().with_reg(v))
                    .collect();
                tune_balanced_accuracy(&grid, &train, a.cv_folds, seed::derive(a.seed, &[seed::stream::FOLDS]))?
            };
            let report = audit(&fit(&spec, &train)?, &test)?;
            let mut w = csv::Writer::from_path(&a.out)?;
            w.write_record([
                "learner",
                "reg",
                "n_train",
                "n_test",
                "us_s",
                "di_s",
                "balanced_accuracy",
                "passes_di_rule",
            ])?;
            let value = |m: biasaudit::Metric| m.value().map(|v| v.to_string()).unwrap_or_default();
            w.write_record([
                spec.kind.name().to_string(),
                spec.reg.to_string(),
                train.n().to_string(),
                report.n_test.to_string(),
                value(report.us_s),
                value(report.di_s),
                value(report.balanced_accuracy),
                report.passes_di_rule().map(|b| b.to_string()).unwrap_or_default(),
            ])?;
            w.flush()?;
            Ok(())
        }
        Command::SweepNoise(a) => {
            let c = &a.common;
            let base = c.synth.config(c.seed, 0.3, 0.3);
            let opts = SweepOptions {
                tune_learner: c.learner.reg.is_none(),
                cv_folds: a.cv_folds,
                ..SweepOptions::default()
            };
            let sigmas = a.sigmas.clone().unwrap_or_else(experiments::default_sigmas);
            let r = experiments::sweep_noise(&c.learner.spec(), &base, &sigmas, c.repeats, &opts)?;
            write_outputs(&r, &c.out_dir)
        }
        Command::SweepReg(a) => {
            let c = &a.common;
            let base = c.synth.config(c.seed, 0.3, 0.3);
            let grid = a.reg_grid.clone().unwrap_or_else(|| experiments::default_reg_grid(c.learner.learner));
            let r = experiments::sweep_regularization(&c.learner.spec(), &base, &grid, c.repeats)?;
            write_outputs(&r, &c.out_dir)
        }
        Command::SweepImbalance(a) => {
            let c = &a.common;
            let base = c.synth.config(c.seed, 0.3, 0.3);
            let opts = SweepOptions {
                tune_learner: c.learner.reg.is_none(),
                cv_folds: a.cv_folds,
                ..SweepOptions::default()
            };
            let rates = a.class_rates.clone().unwrap_or_else(experiments::default_class_rates);
            let shares = a.minority_shares.clone().unwrap_or_else(experiments::default_minority_shares);
            let r = experiments::sweep_imbalance(&c.learner.spec(), &base, &rates, &shares, c.repeats, &opts)?;
            write_outputs(&r, &c.out_dir)
        }
        Command::Repair(a) => {
            let d = load(&a.data, &a.schema)?;
            let spec = RepairSpec::new(a.strategy, a.amount, seed::derive(a.seed, &[seed::stream::REPAIR]));
            let out = if a.strategy == RepairStrategy::SmoteF {
                biasaudit::augment::smote_f(&d, &spec, a.k_neighbors)?
            } else {
                repair(&d, &spec)?
            };
            if out.notice == Some(Notice::NothingToAdd) {
                log::warn!("minority positives already match majority positives; nothing added");
            }
            log::info!("added {} rows to {}", out.added(), out.original_len());
            io::write_dataset_csv(&out.data, &a.out)
        }
        Command::Tune(a) => {
            let d = load(&a.data, &a.schema)?;
            let learner = a.learner.spec().with_seed(seed::derive(a.seed, &[seed::stream::LEARNER]));
            let cfg = TuneConfig {
                folds: a.folds,
                seed: seed::derive(a.seed, &[seed::stream::TUNE]),
                amounts: a.amounts.clone().unwrap_or_else(biasaudit::tune::default_amounts),
            };
            let report = tune_amount_with(&d, a.strategy, &learner, &cfg, &|_| {})?;
            if let Some(path) = &a.out {
                let mut w = csv::Writer::from_path(path)?;
                w.write_record(["amount", "median_us_s", "median_balanced_accuracy", "distance", "chosen"])?;
                for c in &report.candidates {
                    let opt = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
                    w.write_record([
                        c.amount.to_string(),
                        opt(c.median_us),
                        opt(c.median_balanced_accuracy),
                        opt(c.distance()),
                        (c.amount == report.chosen.amount).to_string(),
                    ])?;
                }
                w.flush()?;
            }
            let mut stdout = std::io::stdout().lock();
            writeln!(stdout, "{}", report.chosen.amount)?;
            Ok(())
        }
        Command::Compare(a) => {
            let source = match &a.data {
                Some(path) => DataSource::Fixed(load(path, &a.schema)?),
                None => DataSource::Synthetic(a.synth.config(a.seed, 0.2, 0.45)),
            };
            let learner = LearnerArgs {
                learner: a.learner,
                reg: a.reg,
                exclude_sensitive: a.exclude_sensitive,
            }
            .spec();
            let opts = RemediationOptions {
                tune_folds: a.folds,
                amounts: a.amounts.clone().unwrap_or_else(biasaudit::tune::default_amounts),
                ..RemediationOptions::default()
            };
            let r = experiments::compare_remediation(&learner, &source, &a.strategies, a.repeats, a.seed, &opts)?;
            write_outputs(&r, &a.out_dir)
        }
    }
}

/// Flags from the config file that the command line does not already set,
/// as extra arguments.
fn config_args(argv: &[String]) -> Result<Vec<String>> {
    let path = argv.iter().enumerate().find_map(|(i, a)| {
        a.strip_prefix("--config=")
            .map(PathBuf::from)
            .or_else(|| (a == "--config").then(|| argv.get(i + 1).map(PathBuf::from)).flatten())
    });
    let Some(path) = path else { return Ok(Vec::new()) };
    let bad = |reason: String| Error::Config {
        path: path.clone(),
        reason,
    };
    let text = std::fs::read_to_string(&path).map_err(|e| bad(e.to_string()))?;
    let table: toml::Table = text.parse().map_err(|e: toml::de::Error| bad(e.to_string()))?;

    let cli = Cli::command();
    let Some(sub) = argv.iter().skip(1).find_map(|a| cli.find_subcommand(a)) else {
        return Ok(Vec::new());
    };
    let accepted: Vec<&str> = sub.get_arguments().filter_map(|a| a.get_long()).collect();
    let given = |flag: &str| {
        argv.iter()
            .any(|a| a.strip_prefix("--").is_some_and(|rest| rest == flag || rest.starts_with(&format!("{flag}="))))
    };

    let mut entries: Vec<(String, &toml::Value)> = Vec::new();
    if let Some(section) = table.get(sub.get_name()) {
        let section = section
            .as_table()
            .ok_or_else(|| bad(format!("`{}` must be a table", sub.get_name())))?;
        entries.extend(section.iter().map(|(k, v)| (k.replace('_', "-"), v)));
    }
    for (k, v) in &table {
        if !v.is_table() {
            entries.push((k.replace('_', "-"), v));
        }
    }

    let mut extra = Vec::new();
    let mut seen: Vec<String> = Vec::new();
    for (key, value) in entries {
        if seen.contains(&key) || given(&key) {
            continue;
        }
        seen.push(key.clone());
        if !accepted.contains(&key.as_str()) {
            if table.get(sub.get_name()).and_then(|s| s.get(&key).or(s.get(key.replace('-', "_")))).is_some() {
                return Err(bad(format!("`{}` does not take --{key}", sub.get_name())));
            }
            continue;
        }
        let scalar = |v: &toml::Value| -> Result<String> {
            match v {
                toml::Value::String(s) => Ok(s.clone()),
                toml::Value::Integer(i) => Ok(i.to_string()),
                toml::Value::Float(f) => Ok(f.to_string()),
                other => Err(bad(format!("unsupported value for `{key}`: {other}"))),
            }
        };
        match value {
            toml::Value::Boolean(true) => extra.push(format!("--{key}")),
            toml::Value::Boolean(false) => {}
            toml::Value::Array(items) => {
                let parts: Vec<String> = items.iter().map(scalar).collect::<Result<_>>()?;
                extra.push(format!("--{key}={}", parts.join(",")));
            }
            v => extra.push(format!("--{key}={}", scalar(v)?)),
        }
    }
    Ok(extra)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let mut argv: Vec<String> = std::env::args().collect();
    match config_args(&argv) {
        Ok(extra) => argv.extend(extra),
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    }
    let cli = Cli::parse_from(argv);
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
