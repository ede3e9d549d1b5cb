//! Fairness and accuracy measurements.
//!
//! - underestimation score `US_S = P[Ŷ=1 | S=0] / P[Y=1 | S=0]`
//! - disparate impact `DI_S = P[Ŷ=1 | S=0] / P[Ŷ=1 | S=1]`, flagged when below [`DI_THRESHOLD`]
//! - balanced accuracy `(TPR + TNR) / 2`
//!
//! Zero denominators are reported as [`Metric::Undefined`], never as 0 or
//! infinity, so sweep aggregation can skip them.

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::learners::TrainedModel;

/// The 80% rule.
pub const DI_THRESHOLD: f64 = 0.8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Metric {
    Value(f64),
    Undefined,
}

impl Metric {
    pub fn value(self) -> Option<f64> {
        match self {
            Metric::Value(v) => Some(v),
            Metric::Undefined => None,
        }
    }

    pub fn is_defined(self) -> bool {
        matches!(self, Metric::Value(_))
    }
}

impl From<Result<f64>> for Metric {
    fn from(r: Result<f64>) -> Self {
        r.map_or(Metric::Undefined, Metric::Value)
    }
}

impl std::fmt::Display for Metric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Metric::Value(v) => write!(f, "{v}"),
            Metric::Undefined => f.write_str("undefined"),
        }
    }
}

fn check_lengths(a: usize, b: usize, c: Option<usize>) -> Result<()> {
    if a != b || c.is_some_and(|c| c != a) {
        return Err(Error::InvalidArgument(format!(
            "label sequences differ in length ({a}, {b}{})",
            c.map(|c| format!(", {c}")).unwrap_or_default()
        )));
    }
    Ok(())
}

pub fn underestimation_score(y_true: &[u8], y_pred: &[u8], s: &[u8]) -> Result<f64> {
    check_lengths(y_true.len(), y_pred.len(), Some(s.len()))?;
    let (mut actual, mut predicted) = (0usize, 0usize);
    for ((&y, &yh), &g) in y_true.iter().zip(y_pred).zip(s) {
        if g == 0 {
            actual += (y == 1) as usize;
            predicted += (yh == 1) as usize;
        }
    }
    if actual == 0 {
        return Err(Error::UndefinedMetric("US_S"));
    }
    Ok(predicted as f64 / actual as f64)
}

pub fn disparate_impact(y_pred: &[u8], s: &[u8]) -> Result<f64> {
    check_lengths(y_pred.len(), s.len(), None)?;
    let mut members = [0usize; 2];
    let mut positives = [0usize; 2];
    for (&yh, &g) in y_pred.iter().zip(s) {
        let g = g.min(1) as usize;
        members[g] += 1;
        positives[g] += (yh == 1) as usize;
    }
    if members[0] == 0 || members[1] == 0 || positives[1] == 0 {
        return Err(Error::UndefinedMetric("DI_S"));
    }
    let minority = positives[0] as f64 / members[0] as f64;
    let majority = positives[1] as f64 / members[1] as f64;
    Ok(minority / majority)
}

pub fn balanced_accuracy(y_true: &[u8], y_pred: &[u8]) -> Result<f64> {
    check_lengths(y_true.len(), y_pred.len(), None)?;
    let mut hits = [0usize; 2];
    let mut totals = [0usize; 2];
    for (&y, &yh) in y_true.iter().zip(y_pred) {
        let y = y.min(1) as usize;
        totals[y] += 1;
        hits[y] += (yh as usize == y) as usize;
    }
    if totals[0] == 0 || totals[1] == 0 {
        return Err(Error::UndefinedMetric("balanced accuracy"));
    }
    Ok(0.5 * (hits[1] as f64 / totals[1] as f64 + hits[0] as f64 / totals[0] as f64))
}

/// Counts per `(S, Y, Ŷ)`, indexed `cells[s][y][ŷ]`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Contingency {
    pub cells: [[[usize; 2]; 2]; 2],
}

impl Contingency {
    pub fn tally(y_true: &[u8], y_pred: &[u8], s: &[u8]) -> Self {
        let mut c = Self::default();
        for ((&y, &yh), &g) in y_true.iter().zip(y_pred).zip(s) {
            c.cells[g.min(1) as usize][y.min(1) as usize][yh.min(1) as usize] += 1;
        }
        c
    }

    pub fn total(&self) -> usize {
        self.cells.iter().flatten().flatten().sum()
    }

    fn sum(&self, s: Option<usize>, y: Option<usize>, yh: Option<usize>) -> usize {
        let mut total = 0;
        for (si, by_y) in self.cells.iter().enumerate() {
            for (yi, by_pred) in by_y.iter().enumerate() {
                for (pi, &n) in by_pred.iter().enumerate() {
                    if s.is_none_or(|v| v == si) && y.is_none_or(|v| v == yi) && yh.is_none_or(|v| v == pi) {
                        total += n;
                    }
                }
            }
        }
        total
    }

    pub fn underestimation(&self) -> Metric {
        let actual = self.sum(Some(0), Some(1), None);
        if actual == 0 {
            return Metric::Undefined;
        }
        Metric::Value(self.sum(Some(0), None, Some(1)) as f64 / actual as f64)
    }

    pub fn disparate_impact(&self) -> Metric {
        let (m0, m1) = (self.sum(Some(0), None, None), self.sum(Some(1), None, None));
        let p1 = self.sum(Some(1), None, Some(1));
        if m0 == 0 || m1 == 0 || p1 == 0 {
            return Metric::Undefined;
        }
        let p0 = self.sum(Some(0), None, Some(1));
        Metric::Value((p0 as f64 / m0 as f64) / (p1 as f64 / m1 as f64))
    }

    pub fn balanced_accuracy(&self) -> Metric {
        let (pos, neg) = (self.sum(None, Some(1), None), self.sum(None, Some(0), None));
        if pos == 0 || neg == 0 {
            return Metric::Undefined;
        }
        let tpr = self.sum(None, Some(1), Some(1)) as f64 / pos as f64;
        let tnr = self.sum(None, Some(0), Some(0)) as f64 / neg as f64;
        Metric::Value(0.5 * (tpr + tnr))
    }
}

/// Metrics for one model on one held-out set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AuditReport {
    pub us_s: Metric,
    pub di_s: Metric,
    pub balanced_accuracy: Metric,
    pub counts: Contingency,
    pub n_test: usize,
}

impl AuditReport {
    pub fn from_predictions(y_true: &[u8], y_pred: &[u8], s: &[u8]) -> Self {
        Self {
            us_s: underestimation_score(y_true, y_pred, s).into(),
            di_s: disparate_impact(y_pred, s).into(),
            balanced_accuracy: balanced_accuracy(y_true, y_pred).into(),
            counts: Contingency::tally(y_true, y_pred, s),
            n_test: y_true.len(),
        }
    }

    /// Whether disparate impact passes the 80% rule; `None` when undefined.
    pub fn passes_di_rule(&self) -> Option<bool> {
        self.di_s.value().map(|v| v >= DI_THRESHOLD)
    }
}

/// Predict on `test` and score the predictions. The only failure is a
/// feature-arity mismatch between the model and the data.
pub fn audit(model: &TrainedModel, test: &Dataset) -> Result<AuditReport> {
    let pred = model.predict_dataset(test)?;
    Ok(AuditReport::from_predictions(test.target(), &pred, test.sensitive()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn perfect_predictions() {
        let y = [1, 0, 1, 1, 0, 0];
        let s = [0, 0, 1, 1, 0, 1];
        assert_eq!(underestimation_score(&y, &y, &s).unwrap(), 1.0);
        assert_eq!(balanced_accuracy(&y, &y).unwrap(), 1.0);
    }

    #[test]
    fn hand_enumerated_minority_rows() {
        let y = [1, 1, 0, 0];
        let p = [1, 0, 0, 0];
        let s = [0, 0, 0, 0];
        assert_eq!(underestimation_score(&y, &p, &s).unwrap(), 0.5);
        assert_eq!(balanced_accuracy(&y, &p).unwrap(), 0.75);
    }

    #[test]
    fn undefined_cases() {
        assert!(matches!(
            underestimation_score(&[0, 0, 1], &[1, 1, 1], &[0, 0, 1]),
            Err(Error::UndefinedMetric(_))
        ));
        assert!(matches!(disparate_impact(&[1, 0, 0], &[0, 1, 1]), Err(Error::UndefinedMetric(_))));
        assert!(matches!(balanced_accuracy(&[1, 1], &[1, 0]), Err(Error::UndefinedMetric(_))));
        assert!(matches!(underestimation_score(&[1], &[1, 0], &[0]), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn disparate_impact_ratio() {
        // Minority: 2 of 10 predicted positive; majority: 5 of 10.
        let mut pred = vec![0u8; 20];
        let mut s = vec![0u8; 20];
        s[10..].fill(1);
        pred[..2].fill(1);
        pred[10..15].fill(1);
        let di = disparate_impact(&pred, &s).unwrap();
        assert!((di - 0.4).abs() < 1e-15);
        assert!(di < DI_THRESHOLD);

        let equal = [1, 0, 1, 0];
        assert_eq!(disparate_impact(&equal, &[0, 0, 1, 1]).unwrap(), 1.0);
    }

    #[test]
    fn constant_predictor_balanced_accuracy() {
        let y: Vec<u8> = (0..100).map(|i| (i < 20) as u8).collect();
        assert_eq!(balanced_accuracy(&y, &[1; 100]).unwrap(), 0.5);
        assert_eq!(balanced_accuracy(&y, &[0; 100]).unwrap(), 0.5);
    }

    #[test]
    fn faithful_prediction_of_biased_truth() {
        // Truth already favors the majority; predicting it exactly gives no
        // underestimation yet still fails the 80% rule.
        let mut y = vec![0u8; 20];
        let mut s = vec![0u8; 20];
        s[10..].fill(1);
        y[..2].fill(1);
        y[10..16].fill(1);
        let r = AuditReport::from_predictions(&y, &y, &s);
        assert_eq!(r.us_s, Metric::Value(1.0));
        assert!(r.di_s.value().unwrap() < DI_THRESHOLD);
        assert_eq!(r.passes_di_rule(), Some(false));
    }

    fn triples() -> impl Strategy<Value = (Vec<u8>, Vec<u8>, Vec<u8>)> {
        (1usize..60).prop_flat_map(|n| {
            (
                prop::collection::vec(0u8..2, n),
                prop::collection::vec(0u8..2, n),
                prop::collection::vec(0u8..2, n),
            )
        })
    }

    proptest! {
        #[test]
        fn table_recomputes_report((y, p, s) in triples()) {
            let r = AuditReport::from_predictions(&y, &p, &s);
            prop_assert_eq!(r.counts.total(), r.n_test);
            for (a, b) in [
                (r.us_s, r.counts.underestimation()),
                (r.di_s, r.counts.disparate_impact()),
                (r.balanced_accuracy, r.counts.balanced_accuracy()),
            ] {
                match (a, b) {
                    (Metric::Value(x), Metric::Value(z)) => prop_assert!((x - z).abs() <= 1e-12),
                    (x, z) => prop_assert_eq!(x, z),
                }
            }
        }

        #[test]
        fn permutation_and_duplication_invariance((y, p, s) in triples(), rot in 0usize..60) {
            let n = y.len();
            let k = rot % n;
            let rotate = |v: &Vec<u8>| -> Vec<u8> { v[k..].iter().chain(&v[..k]).copied().collect() };
            let twice = |v: &Vec<u8>| -> Vec<u8> { v.iter().chain(v).copied().collect() };
            let base = (underestimation_score(&y, &p, &s).ok(), disparate_impact(&p, &s).ok());
            let rotated = (
                underestimation_score(&rotate(&y), &rotate(&p), &rotate(&s)).ok(),
                disparate_impact(&rotate(&p), &rotate(&s)).ok(),
            );
            let doubled = (
                underestimation_score(&twice(&y), &twice(&p), &twice(&s)).ok(),
                disparate_impact(&twice(&p), &twice(&s)).ok(),
            );
            prop_assert_eq!(base, rotated);
            prop_assert_eq!(base, doubled);
        }
    }
}
