//! Training-set repair by adding synthetic minority-positive (`S0Y1`) rows.
//!
//! - `CounterfactualF`: copy rows from `S1Y1` with the sensitive attribute
//!   flipped to 0.
//! - `CounterfactualL`: copy rows from `S0Y0` with the label flipped to 1.
//! - `SmoteF`: SMOTE interpolation restricted to `S0Y1` seeds and `S0Y1`
//!   neighbours, sized against the gap `|S1Y1| - |S0Y1|`.
//!
//! Original rows are never touched; synthetic rows are appended after them.

use rand::Rng;

use crate::dataset::{partition_groups, Dataset};
use crate::error::{Error, Result};
use crate::learners::{self, LearnerSpec, TrainedModel};
use crate::seed;

pub const DEFAULT_K_NEIGHBORS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RepairStrategy {
    NoRepair,
    SmoteF,
    CounterfactualF,
    CounterfactualL,
}

impl RepairStrategy {
    pub const ALL: [RepairStrategy; 4] = [
        RepairStrategy::NoRepair,
        RepairStrategy::SmoteF,
        RepairStrategy::CounterfactualF,
        RepairStrategy::CounterfactualL,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RepairStrategy::NoRepair => "none",
            RepairStrategy::SmoteF => "smote_f",
            RepairStrategy::CounterfactualF => "cf_f",
            RepairStrategy::CounterfactualL => "cf_l",
        }
    }
}

impl std::fmt::Display for RepairStrategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for RepairStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "none" | "no_repair" => Ok(RepairStrategy::NoRepair),
            "smote_f" | "smote" => Ok(RepairStrategy::SmoteF),
            "cf_f" | "counterfactual_f" => Ok(RepairStrategy::CounterfactualF),
            "cf_l" | "counterfactual_l" => Ok(RepairStrategy::CounterfactualL),
            other => Err(Error::InvalidArgument(format!("unknown repair strategy `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RepairSpec {
    pub strategy: RepairStrategy,
    /// Fraction of the strategy's source pool to add, in `(0, 1]`.
    pub amount: f64,
    pub seed: u64,
}

impl RepairSpec {
    pub fn new(strategy: RepairStrategy, amount: f64, seed: u64) -> Self {
        Self { strategy, amount, seed }
    }

    pub fn none() -> Self {
        Self::new(RepairStrategy::NoRepair, 1.0, 0)
    }

    fn check_amount(&self) -> Result<()> {
        if self.amount > 0.0 && self.amount <= 1.0 {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("amount must lie in (0, 1], got {}", self.amount)))
        }
    }
}

/// Where an appended row came from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Origin {
    /// Copy of an original row with one field flipped.
    Copy { source: usize },
    /// `seed + u * (neighbor - seed)`.
    Interpolated { seed: usize, neighbor: usize, u: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Notice {
    /// `|S1Y1| <= |S0Y1|`: SMOTE_F has no gap to close.
    NothingToAdd,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Augmented {
    pub data: Dataset,
    /// One entry per appended row, in order.
    pub origin: Vec<Origin>,
    pub notice: Option<Notice>,
}

impl Augmented {
    fn unchanged(d: &Dataset, notice: Option<Notice>) -> Self {
        Self {
            data: d.clone(),
            origin: Vec::new(),
            notice,
        }
    }

    pub fn added(&self) -> usize {
        self.origin.len()
    }

    pub fn original_len(&self) -> usize {
        self.data.n() - self.added()
    }
}

pub fn counterfactual_augment(d: &Dataset, spec: &RepairSpec) -> Result<Augmented> {
    spec.check_amount()?;
    let groups = partition_groups(d);
    let (pool, pool_name) = match spec.strategy {
        RepairStrategy::CounterfactualF => (&groups.s1y1, "S1Y1"),
        RepairStrategy::CounterfactualL => (&groups.s0y0, "S0Y0"),
        other => {
            return Err(Error::InvalidArgument(format!("{other} is not a counterfactual strategy")));
        }
    };
    if pool.is_empty() {
        return Err(Error::EmptySourcePool(pool_name));
    }
    let count = (spec.amount * pool.len() as f64).round() as usize;
    let mut rng = seed::rng(seed::derive(spec.seed, &[seed::stream::REPAIR]));
    let sources: Vec<usize> = (0..count).map(|_| pool[rng.random_range(0..pool.len())]).collect();

    let mut rows = Vec::with_capacity(count * d.n_features());
    for &i in &sources {
        rows.extend_from_slice(d.row(i));
    }
    Ok(Augmented {
        data: d.appended(rows, vec![1; count], vec![0; count]),
        origin: sources.into_iter().map(|source| Origin::Copy { source }).collect(),
        notice: None,
    })
}

/// Indices (into `members`) of each member's `k` nearest other members.
fn neighbour_lists(points: &[Vec<f64>], k: usize) -> Vec<Vec<usize>> {
    points
        .iter()
        .enumerate()
        .map(|(a, pa)| {
            let mut dist: Vec<(f64, usize)> = points
                .iter()
                .enumerate()
                .filter(|(b, _)| *b != a)
                .map(|(b, pb)| (pa.iter().zip(pb).map(|(x, y)| (x - y) * (x - y)).sum::<f64>(), b))
                .collect();
            dist.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
            dist.into_iter().take(k).map(|(_, b)| b).collect()
        })
        .collect()
}

pub fn smote_f(d: &Dataset, spec: &RepairSpec, k_neighbors: usize) -> Result<Augmented> {
    spec.check_amount()?;
    if k_neighbors == 0 {
        return Err(Error::InvalidArgument("k_neighbors must be at least 1".into()));
    }
    let groups = partition_groups(d);
    let seeds = &groups.s0y1;
    if seeds.len() < 2 {
        return Err(Error::TooFewMinorityPositives(seeds.len()));
    }
    if groups.s1y1.len() <= seeds.len() {
        log::warn!(
            "SMOTE_F: |S1Y1| = {} <= |S0Y1| = {}, nothing to add",
            groups.s1y1.len(),
            seeds.len()
        );
        return Ok(Augmented::unchanged(d, Some(Notice::NothingToAdd)));
    }
    let gap = groups.s1y1.len() - seeds.len();
    let count = (spec.amount * gap as f64).round() as usize;

    // Neighbour search on columns standardized over the whole dataset.
    let scaled = crate::synth::standardize_columns(d);
    let points: Vec<Vec<f64>> = seeds.iter().map(|&i| scaled.row(i).to_vec()).collect();
    let neighbours = neighbour_lists(&points, k_neighbors.min(seeds.len() - 1));

    let mut rng = seed::rng(seed::derive(spec.seed, &[seed::stream::REPAIR]));
    let mut rows = Vec::with_capacity(count * d.n_features());
    let mut origin = Vec::with_capacity(count);
    for _ in 0..count {
        let a = rng.random_range(0..seeds.len());
        let b = neighbours[a][rng.random_range(0..neighbours[a].len())];
        let u: f64 = rng.random_range(0.0..1.0);
        let (from, to) = (d.row(seeds[a]), d.row(seeds[b]));
        rows.extend(from.iter().zip(to).map(|(x, y)| x + u * (y - x)));
        origin.push(Origin::Interpolated {
            seed: seeds[a],
            neighbor: seeds[b],
            u,
        });
    }
    Ok(Augmented {
        data: d.appended(rows, vec![1; count], vec![0; count]),
        origin,
        notice: None,
    })
}

/// Apply any strategy; `NoRepair` returns the input unchanged.
pub fn repair(d: &Dataset, spec: &RepairSpec) -> Result<Augmented> {
    match spec.strategy {
        RepairStrategy::NoRepair => Ok(Augmented::unchanged(d, None)),
        RepairStrategy::SmoteF => smote_f(d, spec, DEFAULT_K_NEIGHBORS),
        RepairStrategy::CounterfactualF | RepairStrategy::CounterfactualL => counterfactual_augment(d, spec),
    }
}

pub fn repair_and_train(d_train: &Dataset, repair_spec: &RepairSpec, learner: &LearnerSpec) -> Result<TrainedModel> {
    let augmented = repair(d_train, repair_spec)?;
    learners::fit(learner, &augmented.data)
}
