//! Tabular data model shared by every other module.
//!
//! A [`Dataset`] holds a dense row-major feature matrix, a binary target `Y`
//! (1 = desirable outcome) and a binary sensitive attribute `S` (0 = the
//! minority/discriminated group, 1 = the majority/favored group). The
//! sensitive attribute is kept apart from the feature matrix; learners decide
//! whether to use it as an input.

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    feature_names: Vec<String>,
    features: Vec<f64>,
    target: Vec<u8>,
    sensitive: Vec<u8>,
}

impl Dataset {
    /// Build from a flat row-major feature buffer.
    pub fn from_flat(
        feature_names: Vec<String>,
        features: Vec<f64>,
        target: Vec<u8>,
        sensitive: Vec<u8>,
    ) -> Result<Self> {
        let n = target.len();
        let d = feature_names.len();
        if sensitive.len() != n {
            return Err(Error::InvalidDataset(format!(
                "target has {n} rows but sensitive has {}",
                sensitive.len()
            )));
        }
        if features.len() != n * d {
            return Err(Error::InvalidDataset(format!(
                "feature buffer has {} values, expected {n} rows x {d} columns",
                features.len()
            )));
        }
        if let Some(i) = target.iter().position(|&v| v > 1) {
            return Err(Error::InvalidDataset(format!("target[{i}] is not 0 or 1")));
        }
        if let Some(i) = sensitive.iter().position(|&v| v > 1) {
            return Err(Error::InvalidDataset(format!("sensitive[{i}] is not 0 or 1")));
        }
        if let Some(i) = features.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidDataset(format!(
                "non-finite feature at row {}, column {}",
                i / d.max(1),
                i % d.max(1)
            )));
        }
        Ok(Self {
            feature_names,
            features,
            target,
            sensitive,
        })
    }

    pub fn from_rows(
        feature_names: Vec<String>,
        rows: &[Vec<f64>],
        target: Vec<u8>,
        sensitive: Vec<u8>,
    ) -> Result<Self> {
        let d = feature_names.len();
        if let Some(i) = rows.iter().position(|r| r.len() != d) {
            return Err(Error::InvalidDataset(format!(
                "row {i} has {} values, expected {d}",
                rows[i].len()
            )));
        }
        let flat = rows.iter().flatten().copied().collect();
        Self::from_flat(feature_names, flat, target, sensitive)
    }

    pub fn n(&self) -> usize {
        self.target.len()
    }

    pub fn is_empty(&self) -> bool {
        self.target.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    /// Row-major feature buffer of length `n * n_features`.
    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let d = self.n_features();
        &self.features[i * d..(i + 1) * d]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        let d = self.n_features();
        self.features.iter().skip(j).step_by(d).copied().collect()
    }

    pub fn target(&self) -> &[u8] {
        &self.target
    }

    pub fn sensitive(&self) -> &[u8] {
        &self.sensitive
    }

    /// Rows selected by `idx`, in that order. Indices may repeat.
    pub fn subset(&self, idx: &[usize]) -> Dataset {
        let d = self.n_features();
        let mut features = Vec::with_capacity(idx.len() * d);
        for &i in idx {
            features.extend_from_slice(self.row(i));
        }
        Dataset {
            feature_names: self.feature_names.clone(),
            features,
            target: idx.iter().map(|&i| self.target[i]).collect(),
            sensitive: idx.iter().map(|&i| self.sensitive[i]).collect(),
        }
    }

    /// Copy with new rows appended after the existing ones.
    pub(crate) fn appended(&self, rows: Vec<f64>, target: Vec<u8>, sensitive: Vec<u8>) -> Dataset {
        debug_assert_eq!(rows.len(), target.len() * self.n_features());
        debug_assert_eq!(target.len(), sensitive.len());
        let mut out = self.clone();
        out.features.extend(rows);
        out.target.extend(target);
        out.sensitive.extend(sensitive);
        out
    }

    /// Copy with the feature matrix replaced; labels and groups are kept.
    pub(crate) fn with_features(&self, features: Vec<f64>) -> Dataset {
        debug_assert_eq!(features.len(), self.features.len());
        Dataset {
            feature_names: self.feature_names.clone(),
            features,
            target: self.target.clone(),
            sensitive: self.sensitive.clone(),
        }
    }

    /// Empirical `P(Y = 1)`.
    pub fn positive_rate(&self) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        self.target.iter().filter(|&&y| y == 1).count() as f64 / self.n() as f64
    }

    /// Empirical `P(Y = 1 | S = s)`, `None` when the group is empty.
    pub fn group_positive_rate(&self, s: u8) -> Option<f64> {
        let (mut members, mut positives) = (0usize, 0usize);
        for (&si, &yi) in self.sensitive.iter().zip(&self.target) {
            if si == s {
                members += 1;
                positives += yi as usize;
            }
        }
        (members > 0).then(|| positives as f64 / members as f64)
    }

    /// Fraction of rows with `S = 0`.
    pub fn minority_fraction(&self) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        self.sensitive.iter().filter(|&&s| s == 0).count() as f64 / self.n() as f64
    }
}

/// The four `(S, Y)` cells of a dataset, as row indices.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GroupPartition {
    pub s0y1: Vec<usize>,
    pub s0y0: Vec<usize>,
    pub s1y1: Vec<usize>,
    pub s1y0: Vec<usize>,
}

impl GroupPartition {
    pub fn cell(&self, s: u8, y: u8) -> &[usize] {
        match (s, y) {
            (0, 1) => &self.s0y1,
            (0, 0) => &self.s0y0,
            (1, 1) => &self.s1y1,
            _ => &self.s1y0,
        }
    }

    /// Sizes in the order `[s0y1, s0y0, s1y1, s1y0]`.
    pub fn sizes(&self) -> [usize; 4] {
        [self.s0y1.len(), self.s0y0.len(), self.s1y1.len(), self.s1y0.len()]
    }
}

pub fn partition_groups(d: &Dataset) -> GroupPartition {
    let mut p = GroupPartition::default();
    for (i, (&s, &y)) in d.sensitive().iter().zip(d.target()).enumerate() {
        match (s, y) {
            (0, 1) => p.s0y1.push(i),
            (0, _) => p.s0y0.push(i),
            (_, 1) => p.s1y1.push(i),
            _ => p.s1y0.push(i),
        }
    }
    p
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Stratify {
    /// Strata are the two classes.
    #[default]
    Class,
    /// Strata are the four `(S, Y)` cells.
    ClassAndGroup,
}

impl Stratify {
    fn key(self, s: u8, y: u8) -> usize {
        match self {
            Stratify::Class => y as usize,
            Stratify::ClassAndGroup => 2 * s as usize + y as usize,
        }
    }

    fn label(self, key: usize) -> String {
        match self {
            Stratify::Class => format!("Y={key}"),
            Stratify::ClassAndGroup => format!("S{}Y{}", key / 2, key % 2),
        }
    }

    fn strata(self, d: &Dataset) -> Vec<Vec<usize>> {
        let mut strata = vec![Vec::new(); 4];
        for (i, (&s, &y)) in d.sensitive().iter().zip(d.target()).enumerate() {
            strata[self.key(s, y)].push(i);
        }
        strata
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub seed: u64,
    pub stratify: Stratify,
}

impl SplitSpec {
    pub fn new(seed: u64) -> Self {
        Self {
            train_fraction: 0.7,
            seed,
            stratify: Stratify::Class,
        }
    }
}

/// Largest-remainder apportionment of `total` across `quotas`.
pub(crate) fn apportion(quotas: &[f64], total: usize) -> Vec<usize> {
    let mut counts: Vec<usize> = quotas.iter().map(|q| q.max(0.0).floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..quotas.len()).collect();
    // Stable sort keeps the lower index first on equal remainders.
    order.sort_by(|&a, &b| {
        let ra = quotas[a] - quotas[a].floor();
        let rb = quotas[b] - quotas[b].floor();
        rb.total_cmp(&ra)
    });
    for &i in order.iter().take(total.saturating_sub(assigned)) {
        counts[i] += 1;
    }
    counts
}

/// Train/test row indices, each sorted ascending.
pub fn split_indices(d: &Dataset, spec: &SplitSpec) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(spec.train_fraction > 0.0 && spec.train_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "train_fraction must lie in (0, 1), got {}",
            spec.train_fraction
        )));
    }
    let strata: Vec<(usize, Vec<usize>)> = spec
        .stratify
        .strata(d)
        .into_iter()
        .enumerate()
        .filter(|(_, s)| !s.is_empty())
        .collect();
    if let Some((key, s)) = strata.iter().find(|(_, s)| s.len() < 2) {
        return Err(Error::StratumTooSmall {
            stratum: spec.stratify.label(*key),
            size: s.len(),
        });
    }

    // 1e-9 absorbs representation error such as 0.7 * 5000 = 3499.999...
    let total = (spec.train_fraction * d.n() as f64 + 1e-9).floor() as usize;
    let quotas: Vec<f64> = strata
        .iter()
        .map(|(_, s)| spec.train_fraction * s.len() as f64)
        .collect();
    let mut counts = apportion(&quotas, total);

    // Every stratum keeps at least one row on each side.
    for (c, (_, s)) in counts.iter_mut().zip(&strata) {
        *c = (*c).clamp(1, s.len() - 1);
    }
    loop {
        let sum: usize = counts.iter().sum();
        if sum == total {
            break;
        }
        let pick = if sum > total {
            (0..counts.len())
                .filter(|&i| counts[i] > 1)
                .max_by(|&a, &b| (counts[a] as f64 - quotas[a]).total_cmp(&(counts[b] as f64 - quotas[b])))
        } else {
            (0..counts.len())
                .filter(|&i| counts[i] + 1 < strata[i].1.len())
                .max_by(|&a, &b| (quotas[a] - counts[a] as f64).total_cmp(&(quotas[b] - counts[b] as f64)))
        };
        match pick {
            Some(i) if sum > total => counts[i] -= 1,
            Some(i) => counts[i] += 1,
            None => break,
        }
    }

    let mut rng = seed::rng(seed::derive(spec.seed, &[seed::stream::SPLIT]));
    let mut train = Vec::with_capacity(total);
    let mut test = Vec::with_capacity(d.n() - total);
    for ((_, stratum), &take) in strata.iter().zip(&counts) {
        let mut idx = stratum.clone();
        idx.shuffle(&mut rng);
        train.extend_from_slice(&idx[..take]);
        test.extend_from_slice(&idx[take..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

pub fn split(d: &Dataset, spec: &SplitSpec) -> Result<(Dataset, Dataset)> {
    let (train, test) = split_indices(d, spec)?;
    Ok((d.subset(&train), d.subset(&test)))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fold {
    pub train: Vec<usize>,
    pub valid: Vec<usize>,
}

/// Class-stratified k-fold cross-validation.
pub fn stratified_kfold(d: &Dataset, k: usize, seed: u64) -> Result<Vec<Fold>> {
    kfold(d, k, seed, Stratify::Class)
}

/// k-fold cross-validation with a choice of strata. Each stratum is shuffled
/// and the concatenated strata are dealt round-robin, so fold sizes and
/// per-stratum counts each differ by at most one across folds.
pub fn kfold(d: &Dataset, k: usize, seed: u64, stratify: Stratify) -> Result<Vec<Fold>> {
    if k < 2 {
        return Err(Error::InvalidArgument(format!("k must be at least 2, got {k}")));
    }
    let strata = stratify.strata(d);
    let required: Vec<usize> = match stratify {
        Stratify::Class => vec![0, 1],
        Stratify::ClassAndGroup => (0..4).collect(),
    };
    for key in required {
        if strata[key].len() < k {
            return Err(Error::ClassTooSmall {
                class: stratify.label(key),
                size: strata[key].len(),
                k,
            });
        }
    }

    let mut rng = seed::rng(seed::derive(seed, &[seed::stream::FOLDS]));
    let mut assignment = vec![0usize; d.n()];
    let mut position = 0usize;
    for stratum in &strata {
        let mut idx = stratum.clone();
        idx.shuffle(&mut rng);
        for i in idx {
            assignment[i] = position % k;
            position += 1;
        }
    }

    Ok((0..k)
        .map(|f| {
            let (valid, train): (Vec<usize>, Vec<usize>) =
                (0..d.n()).partition(|&i| assignment[i] == f);
            Fold { train, valid }
        })
        .collect())
}
