use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Which `(S, Y)` quota cell a synthetic configuration could not fill.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuotaCell {
    S0Y1,
    S0Y0,
    S1Y1,
    S1Y0,
}

impl std::fmt::Display for QuotaCell {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            QuotaCell::S0Y1 => "S0Y1",
            QuotaCell::S0Y0 => "S0Y0",
            QuotaCell::S1Y1 => "S1Y1",
            QuotaCell::S1Y0 => "S1Y0",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("stratum {stratum} has {size} sample(s); at least 2 are needed to place one on each side")]
    StratumTooSmall { stratum: String, size: usize },

    #[error("class {class} has {size} member(s), fewer than the {k} folds requested")]
    ClassTooSmall { class: String, size: usize, k: usize },

    #[error("infeasible quota: cell {cell} would need {count} samples")]
    InfeasibleQuota { cell: QuotaCell, count: f64 },

    #[error("training set contains a single class")]
    SingleClassTrainingSet,

    #[error("expected {expected} feature(s), got {got}")]
    ArityMismatch { expected: usize, got: usize },

    #[error("metric {0} is undefined (zero denominator)")]
    UndefinedMetric(&'static str),

    #[error("source pool {0} is empty")]
    EmptySourcePool(&'static str),

    #[error("SMOTE_F needs at least 2 minority positives, found {0}")]
    TooFewMinorityPositives(usize),

    #[error("every candidate amount produced an undefined underestimation score")]
    AllAmountsUndefined,

    #[error("column `{0}` is missing from the CSV header")]
    MissingColumn(String),

    #[error("line {line}: {reason}")]
    UnparseableRow { line: u64, reason: String },

    #[error("no rows left after filtering")]
    EmptyAfterFiltering,

    #[error("sweep result has {0} axis/axes; a heatmap needs exactly 2")]
    NotTwoDimensional(usize),

    #[error("config file {path}: {reason}")]
    Config { path: PathBuf, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidArgument(_) | Error::Config { .. } => 2,
            Error::InfeasibleQuota { .. }
            | Error::StratumTooSmall { .. }
            | Error::ClassTooSmall { .. }
            | Error::EmptySourcePool(_)
            | Error::TooFewMinorityPositives(_)
            | Error::AllAmountsUndefined
            | Error::NotTwoDimensional(_) => 4,
            _ => 3,
        }
    }
}
