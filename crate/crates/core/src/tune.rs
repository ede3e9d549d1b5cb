//! Cross-validated choice of the augmentation amount.
//!
//! For every candidate amount, each fold's training portion (and only that
//! portion) is augmented, a model is fitted on it and audited on the
//! untouched validation portion. A candidate's score is
//! `|median fold US_S - 1|`; ties go to the higher median balanced accuracy
//! and then to the smaller amount.

use rayon::prelude::*;

use crate::augment::{repair, Augmented, RepairSpec, RepairStrategy};
use crate::dataset::{kfold, Dataset, Stratify};
use crate::error::{Error, Result};
use crate::learners::{fit, LearnerSpec};
use crate::metrics::{audit, AuditReport, Metric};
use crate::seed;
use crate::stats::median;

pub const DEFAULT_FOLDS: usize = 5;

/// `0.05, 0.10, ..., 1.00`
pub fn default_amounts() -> Vec<f64> {
    (1..=20).map(|i| i as f64 * 0.05).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct TuneConfig {
    pub folds: usize,
    pub seed: u64,
    pub amounts: Vec<f64>,
}

impl TuneConfig {
    pub fn new(folds: usize, seed: u64) -> Self {
        Self {
            folds,
            seed,
            amounts: default_amounts(),
        }
    }
}

/// What a single (candidate, fold) evaluation trained and validated on.
pub struct FoldView<'a> {
    pub amount: f64,
    pub fold: usize,
    /// Indices into the tuning dataset that form the validation portion.
    pub valid_idx: &'a [usize],
    pub train: &'a Augmented,
    pub valid: &'a Dataset,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CandidateScore {
    pub amount: f64,
    pub fold_reports: Vec<AuditReport>,
    pub median_us: Option<f64>,
    pub median_balanced_accuracy: Option<f64>,
}

impl CandidateScore {
    pub fn distance(&self) -> Option<f64> {
        self.median_us.map(|u| (u - 1.0).abs())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TuneReport {
    pub chosen: RepairSpec,
    pub candidates: Vec<CandidateScore>,
}

pub fn tune_amount(
    d_train: &Dataset,
    strategy: RepairStrategy,
    learner: &LearnerSpec,
    k: usize,
    seed: u64,
) -> Result<RepairSpec> {
    Ok(tune_amount_with(d_train, strategy, learner, &TuneConfig::new(k, seed), &|_| {})?.chosen)
}

pub fn tune_amount_with(
    d_train: &Dataset,
    strategy: RepairStrategy,
    learner: &LearnerSpec,
    cfg: &TuneConfig,
    observer: &(dyn Fn(&FoldView) + Sync),
) -> Result<TuneReport> {
    if strategy == RepairStrategy::NoRepair {
        return Err(Error::InvalidArgument("nothing to tune for NoRepair".into()));
    }
    if let Some(a) = cfg.amounts.iter().find(|a| !(**a > 0.0 && **a <= 1.0)) {
        return Err(Error::InvalidArgument(format!("candidate amount {a} is outside (0, 1]")));
    }
    match cfg.amounts.as_slice() {
        [] => return Err(Error::InvalidArgument("no candidate amounts".into())),
        [only] => {
            return Ok(TuneReport {
                chosen: RepairSpec::new(strategy, *only, cfg.seed),
                candidates: Vec::new(),
            })
        }
        _ => {}
    }

    // Folds stratified on all four cells so every training portion keeps
    // each source pool populated.
    let folds = kfold(d_train, cfg.folds, cfg.seed, Stratify::ClassAndGroup)?;
    let jobs: Vec<(usize, usize)> = (0..cfg.amounts.len())
        .flat_map(|c| (0..folds.len()).map(move |f| (c, f)))
        .collect();
    let reports = jobs
        .par_iter()
        .map(|&(c, f)| {
            let fold = &folds[f];
            let train_part = d_train.subset(&fold.train);
            let valid = d_train.subset(&fold.valid);
            let repair_seed = seed::derive(cfg.seed, &[seed::stream::TUNE, c as u64, f as u64]);
            let augmented = repair(&train_part, &RepairSpec::new(strategy, cfg.amounts[c], repair_seed))?;
            observer(&FoldView {
                amount: cfg.amounts[c],
                fold: f,
                valid_idx: &fold.valid,
                train: &augmented,
                valid: &valid,
            });
            let model = fit(learner, &augmented.data)?;
            audit(&model, &valid)
        })
        .collect::<Result<Vec<AuditReport>>>()?;

    let candidates: Vec<CandidateScore> = reports
        .chunks(folds.len())
        .zip(&cfg.amounts)
        .map(|(fold_reports, &amount)| {
            let us: Vec<f64> = fold_reports.iter().filter_map(|r| r.us_s.value()).collect();
            let ba: Vec<f64> = fold_reports.iter().filter_map(|r| r.balanced_accuracy.value()).collect();
            CandidateScore {
                amount,
                fold_reports: fold_reports.to_vec(),
                median_us: median(&us),
                median_balanced_accuracy: median(&ba),
            }
        })
        .collect();

    let best = select(&candidates).ok_or(Error::AllAmountsUndefined)?;
    Ok(TuneReport {
        chosen: RepairSpec::new(strategy, candidates[best].amount, cfg.seed),
        candidates,
    })
}

fn select(candidates: &[CandidateScore]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, c) in candidates.iter().enumerate() {
        let Some(dist) = c.distance() else { continue };
        let Some(b) = best else {
            best = Some(i);
            continue;
        };
        let incumbent = &candidates[b];
        let bd = incumbent.distance().expect("incumbent is defined");
        let ba = c.median_balanced_accuracy.unwrap_or(f64::NEG_INFINITY);
        let bba = incumbent.median_balanced_accuracy.unwrap_or(f64::NEG_INFINITY);
        let better = if (dist - bd).abs() > 1e-12 {
            dist < bd
        } else if (ba - bba).abs() > 1e-12 {
            ba > bba
        } else {
            c.amount < incumbent.amount
        };
        if better {
            best = Some(i);
        }
    }
    best
}

/// Fold-level underestimation as reported, for callers that want the raw values.
pub fn fold_us(c: &CandidateScore) -> Vec<Metric> {
    c.fold_reports.iter().map(|r| r.us_s).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cand(amount: f64, us: Option<f64>, ba: Option<f64>) -> CandidateScore {
        CandidateScore {
            amount,
            fold_reports: Vec::new(),
            median_us: us,
            median_balanced_accuracy: ba,
        }
    }

    #[test]
    fn selection_rules() {
        let c = [cand(0.05, Some(0.7), Some(0.7)), cand(0.10, Some(0.98), Some(0.6))];
        assert_eq!(select(&c), Some(1));
        // Symmetric distance: 1.1 and 0.9 tie, higher balanced accuracy wins.
        let c = [cand(0.05, Some(1.1), Some(0.6)), cand(0.10, Some(0.9), Some(0.7))];
        assert_eq!(select(&c), Some(1));
        // Full tie: smaller amount.
        let c = [cand(0.20, Some(0.9), Some(0.7)), cand(0.10, Some(0.9), Some(0.7))];
        assert_eq!(select(&c), Some(1));
        let c = [cand(0.20, None, Some(0.7)), cand(0.10, Some(3.0), None)];
        assert_eq!(select(&c), Some(1));
        assert_eq!(select(&[cand(0.2, None, None)]), None);
    }

    #[test]
    fn rejects_bad_configs() {
        let d = crate::synth::generate(&crate::synth::SynthConfig {
            n: 200,
            ..crate::synth::SynthConfig::new(0.3, 0.4, 1)
        })
        .unwrap();
        let l = LearnerSpec::logreg(1e-2);
        assert!(tune_amount(&d, RepairStrategy::NoRepair, &l, 5, 1).is_err());
        let mut cfg = TuneConfig::new(5, 1);
        cfg.amounts = vec![0.0, 0.5];
        assert!(tune_amount_with(&d, RepairStrategy::CounterfactualF, &l, &cfg, &|_| {}).is_err());
        cfg.amounts = vec![0.35];
        let r = tune_amount_with(&d, RepairStrategy::CounterfactualF, &l, &cfg, &|_| {}).unwrap();
        assert_eq!(r.chosen.amount, 0.35);
    }
}
