use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::experiments::{Outcome, SweepResult};
use crate::metrics::Metric;

/// Runs-file columns after one column per sweep axis.
pub const RUNS_HEADER_TAIL: [&str; 9] = [
    "repeat",
    "us_s",
    "di_s",
    "balanced_accuracy",
    "defined",
    "seed",
    "amount",
    "status",
    "message",
];

/// Medians-file columns after one column per sweep axis.
pub const MEDIANS_HEADER_TAIL: [&str; 9] = [
    "us_s_median",
    "di_s_median",
    "balanced_accuracy_median",
    "runs",
    "undefined_us_s",
    "undefined_di_s",
    "undefined_balanced_accuracy",
    "failed",
    "amount_median",
];

fn metric(m: Metric) -> String {
    m.value().map(|v| v.to_string()).unwrap_or_default()
}

fn opt(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

fn writer(path: &Path) -> Result<csv::Writer<std::io::BufWriter<File>>> {
    Ok(csv::Writer::from_writer(std::io::BufWriter::new(File::create(path)?)))
}

fn finish(w: csv::Writer<std::io::BufWriter<File>>) -> Result<()> {
    w.into_inner().map_err(|e| Error::Io(e.into_error()))?.flush()?;
    Ok(())
}

fn levels(r: &SweepResult, coords: &[usize]) -> Vec<String> {
    coords.iter().zip(&r.axes).map(|(&i, a)| a.levels[i].to_string()).collect()
}

/// One row per (cell, repeat). Undefined metrics are empty fields and
/// `defined` is `true` only when all three metrics are defined. Failed runs
/// carry `status = failed` and the error text.
pub fn write_runs_csv(r: &SweepResult, path: impl AsRef<Path>) -> Result<()> {
    let mut w = writer(path.as_ref())?;
    let header: Vec<&str> = r.axes.iter().map(|a| a.name.as_str()).chain(RUNS_HEADER_TAIL).collect();
    w.write_record(&header)?;
    for cell in &r.cells {
        let coords = levels(r, &cell.coords);
        for run in &cell.runs {
            let mut rec = coords.clone();
            rec.push(run.repeat.to_string());
            match &run.outcome {
                Outcome::Audited(rep) => {
                    let defined = rep.us_s.is_defined() && rep.di_s.is_defined() && rep.balanced_accuracy.is_defined();
                    rec.extend([
                        metric(rep.us_s),
                        metric(rep.di_s),
                        metric(rep.balanced_accuracy),
                        defined.to_string(),
                        run.seed.to_string(),
                        opt(run.amount),
                        "ok".into(),
                        String::new(),
                    ]);
                }
                Outcome::Failed(msg) => {
                    rec.extend([
                        String::new(),
                        String::new(),
                        String::new(),
                        "false".into(),
                        run.seed.to_string(),
                        opt(run.amount),
                        "failed".into(),
                        msg.clone(),
                    ]);
                }
            }
            w.write_record(&rec)?;
        }
    }
    finish(w)
}

/// One row per cell with the medians over defined repeats.
pub fn write_medians_csv(r: &SweepResult, path: impl AsRef<Path>) -> Result<()> {
    let mut w = writer(path.as_ref())?;
    let header: Vec<&str> = r.axes.iter().map(|a| a.name.as_str()).chain(MEDIANS_HEADER_TAIL).collect();
    w.write_record(&header)?;
    for cell in &r.cells {
        let s = &cell.summary;
        let amounts: Vec<f64> = cell.runs.iter().filter_map(|run| run.amount).collect();
        let mut rec = levels(r, &cell.coords);
        rec.extend([
            opt(s.us_s),
            opt(s.di_s),
            opt(s.balanced_accuracy),
            cell.runs.len().to_string(),
            s.undefined_us.to_string(),
            s.undefined_di.to_string(),
            s.undefined_ba.to_string(),
            s.failed.to_string(),
            opt(crate::stats::median(&amounts)),
        ]);
        w.write_record(&rec)?;
    }
    finish(w)
}

/// `runs.csv` → `runs_medians.csv`.
pub fn medians_path(runs: &Path) -> PathBuf {
    let stem = runs.file_stem().and_then(|s| s.to_str()).unwrap_or("sweep");
    runs.with_file_name(format!("{stem}_medians.csv"))
}

/// Writes the runs file at `path` and the medians file next to it.
pub fn write_sweep_csv(r: &SweepResult, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    write_runs_csv(r, path)?;
    write_medians_csv(r, medians_path(path))
}
