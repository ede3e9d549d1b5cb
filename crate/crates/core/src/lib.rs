//! Underestimation bias auditing and repair for binary classifiers.
//!
//! The crate measures how far a classifier under-predicts the desirable
//! outcome (`Y = 1`) for a minority group (`S = 0`), reproduces the three
//! bias-inducing sweeps (label noise, regularization strength, class and
//! group imbalance) on a controllable synthetic admissions dataset, and
//! repairs underestimation by adding SMOTE-style or counterfactual rows to
//! the training data.
//!
//! Module map:
//!
//! - [`dataset`]: tabular data, `(S, Y)` cell partitioning, splits and folds
//! - [`synth`]: synthetic admissions generator and feature noise
//! - [`learners`]: from-scratch classifiers with explicit regularization knobs
//! - [`metrics`]: underestimation score, disparate impact, balanced accuracy
//! - [`augment`]: `SMOTE_F` and the two counterfactual generators
//! - [`tune`]: cross-validated choice of the augmentation amount
//! - [`experiments`]: the seeded repeat/median sweep runners
//! - [`io`]: CSV ingestion, sweep serialization and SVG rendering

pub mod augment;
pub mod dataset;
pub mod error;
pub mod experiments;
pub mod io;
pub mod learners;
pub mod metrics;
pub mod seed;
pub mod stats;
pub mod synth;
pub mod tune;

pub use augment::{Augmented, Origin, RepairSpec, RepairStrategy};
pub use dataset::{Dataset, GroupPartition, SplitSpec, Stratify};
pub use error::{Error, Result};
pub use learners::{LearnerKind, LearnerSpec, TrainedModel};
pub use metrics::{AuditReport, Metric};
pub use synth::{NoiseSpec, SynthConfig};
