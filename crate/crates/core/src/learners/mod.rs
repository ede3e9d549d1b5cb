//! From-scratch binary classifiers with explicit regularization knobs.
//!
//! Every learner sees the same standardized design matrix: the dataset's
//! feature columns, optionally followed by the sensitive attribute, each
//! shifted and scaled with statistics captured from the training rows.

pub mod knn;
pub mod logreg;
pub mod math;
pub mod mlp;
pub mod naive_bayes;
pub mod tree;

use rayon::prelude::*;

use crate::dataset::{stratified_kfold, Dataset};
use crate::error::{Error, Result};
use crate::metrics::balanced_accuracy;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LearnerKind {
    LogReg,
    GaussianNB,
    Knn,
    DecisionTree,
    NeuralNet,
}

impl LearnerKind {
    pub const ALL: [LearnerKind; 5] = [
        LearnerKind::LogReg,
        LearnerKind::GaussianNB,
        LearnerKind::Knn,
        LearnerKind::DecisionTree,
        LearnerKind::NeuralNet,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LearnerKind::LogReg => "logreg",
            LearnerKind::GaussianNB => "naive_bayes",
            LearnerKind::Knn => "knn",
            LearnerKind::DecisionTree => "tree",
            LearnerKind::NeuralNet => "mlp",
        }
    }

    /// What the regularization knob means for this learner.
    pub fn knob_name(self) -> &'static str {
        match self {
            LearnerKind::LogReg => "lambda",
            LearnerKind::GaussianNB => "var_smoothing",
            LearnerKind::Knn => "k",
            LearnerKind::DecisionTree => "max_depth",
            LearnerKind::NeuralNet => "alpha",
        }
    }

    fn needs_both_classes(self) -> bool {
        matches!(self, LearnerKind::LogReg | LearnerKind::NeuralNet | LearnerKind::DecisionTree)
    }
}

impl std::fmt::Display for LearnerKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for LearnerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "logreg" | "lr" | "logistic" => Ok(LearnerKind::LogReg),
            "naive_bayes" | "nb" | "gaussiannb" => Ok(LearnerKind::GaussianNB),
            "knn" => Ok(LearnerKind::Knn),
            "tree" | "decision_tree" | "dt" => Ok(LearnerKind::DecisionTree),
            "mlp" | "nn" | "neural_net" => Ok(LearnerKind::NeuralNet),
            other => Err(Error::InvalidArgument(format!("unknown learner `{other}`"))),
        }
    }
}

/// Optimizer settings for the gradient-trained learners.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainParams {
    /// Fixed step size. `None` lets logistic regression derive `1/L` from a
    /// curvature bound; the network uses 0.1.
    pub learning_rate: Option<f64>,
    pub max_epochs: usize,
    /// Stop once the gradient's infinity norm falls below this.
    pub tolerance: f64,
    pub hidden_units: usize,
}

impl Default for TrainParams {
    fn default() -> Self {
        Self {
            learning_rate: None,
            max_epochs: 10_000,
            tolerance: 1e-6,
            hidden_units: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LearnerSpec {
    pub kind: LearnerKind,
    /// L2 weight for logistic regression and the network, `max_depth` for
    /// the tree, `k` for nearest neighbours, variance smoothing for naive Bayes.
    pub reg: f64,
    pub params: TrainParams,
    pub include_sensitive: bool,
    pub seed: u64,
}

impl LearnerSpec {
    fn with(kind: LearnerKind, reg: f64, params: TrainParams) -> Self {
        Self {
            kind,
            reg,
            params,
            include_sensitive: true,
            seed: 0,
        }
    }

    pub fn logreg(lambda: f64) -> Self {
        Self::with(LearnerKind::LogReg, lambda, TrainParams::default())
    }

    pub fn neural_net(alpha: f64) -> Self {
        Self::with(
            LearnerKind::NeuralNet,
            alpha,
            TrainParams {
                learning_rate: Some(mlp::DEFAULT_STEP),
                max_epochs: 5_000,
                ..TrainParams::default()
            },
        )
    }

    pub fn decision_tree(max_depth: usize) -> Self {
        Self::with(LearnerKind::DecisionTree, max_depth as f64, TrainParams::default())
    }

    pub fn knn(k: usize) -> Self {
        Self::with(LearnerKind::Knn, k as f64, TrainParams::default())
    }

    pub fn gaussian_nb(var_smoothing: f64) -> Self {
        Self::with(LearnerKind::GaussianNB, var_smoothing, TrainParams::default())
    }

    /// Settings used when nothing is tuned or swept.
    pub fn default_for(kind: LearnerKind) -> Self {
        match kind {
            LearnerKind::LogReg => Self::logreg(1e-3),
            LearnerKind::GaussianNB => Self::gaussian_nb(1e-9),
            LearnerKind::Knn => Self::knn(15),
            LearnerKind::DecisionTree => Self::decision_tree(5),
            LearnerKind::NeuralNet => Self::neural_net(1e-4),
        }
    }

    pub fn with_reg(mut self, reg: f64) -> Self {
        self.reg = reg;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_sensitive(mut self, include: bool) -> Self {
        self.include_sensitive = include;
        self
    }

    /// Larger means a more constrained model.
    pub fn regularization_strength(&self) -> f64 {
        match self.kind {
            LearnerKind::DecisionTree => -self.reg,
            _ => self.reg,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidArgument(format!("{}: {what}, got {}", self.kind, self.reg)));
        if !self.reg.is_finite() || self.reg < 0.0 {
            return bad("regularization knob must be finite and >= 0");
        }
        match self.kind {
            LearnerKind::DecisionTree | LearnerKind::Knn if self.reg < 1.0 || self.reg.fract() != 0.0 => {
                return bad("knob must be an integer >= 1");
            }
            _ => {}
        }
        let p = &self.params;
        if p.learning_rate.is_some_and(|r| !(r > 0.0 && r.is_finite())) {
            return Err(Error::InvalidArgument("learning_rate must be positive".into()));
        }
        if p.max_epochs == 0 || p.hidden_units == 0 || p.tolerance.is_nan() || p.tolerance <= 0.0 {
            return Err(Error::InvalidArgument(
                "max_epochs, hidden_units and tolerance must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Per-column affine map fitted on training rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardizer {
    fn fit(columns: &[Vec<f64>]) -> Self {
        let (mut mean, mut scale) = (Vec::new(), Vec::new());
        for col in columns {
            let n = col.len().max(1) as f64;
            let m = col.iter().sum::<f64>() / n;
            let var = col.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n;
            mean.push(m);
            scale.push(if var > 1e-24 { var.sqrt() } else { 1.0 });
        }
        Self { mean, scale }
    }

    fn apply(&self, raw: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend(raw.iter().zip(self.mean.iter().zip(&self.scale)).map(|(v, (m, s))| (v - m) / s));
    }
}

/// Column-major standardized inputs.
#[derive(Debug, Clone)]
pub struct Design {
    pub columns: Vec<Vec<f64>>,
    pub n: usize,
}

impl Design {
    pub fn d(&self) -> usize {
        self.columns.len()
    }

    fn raw_columns(data: &Dataset, include_sensitive: bool) -> Vec<Vec<f64>> {
        let mut cols: Vec<Vec<f64>> = (0..data.n_features()).map(|j| data.column(j)).collect();
        if include_sensitive {
            cols.push(data.sensitive().iter().map(|&s| s as f64).collect());
        }
        cols
    }

    fn build(data: &Dataset, include_sensitive: bool, st: &Standardizer) -> Self {
        let columns = Self::raw_columns(data, include_sensitive)
            .into_iter()
            .enumerate()
            .map(|(j, col)| col.into_iter().map(|v| (v - st.mean[j]) / st.scale[j]).collect())
            .collect();
        Self { columns, n: data.n() }
    }

    /// Row `i` gathered from the columns.
    pub fn row(&self, i: usize) -> Vec<f64> {
        self.columns.iter().map(|c| c[i]).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Fitted {
    LogReg(logreg::LogReg),
    NeuralNet(mlp::Mlp),
    DecisionTree(tree::Tree),
    Knn(knn::Knn),
    GaussianNB(naive_bayes::GaussianNb),
}

impl Fitted {
    fn proba(&self, x: &[f64]) -> f64 {
        match self {
            Fitted::LogReg(m) => m.proba(x),
            Fitted::NeuralNet(m) => m.proba(x),
            Fitted::DecisionTree(m) => m.proba(x),
            Fitted::Knn(m) => m.proba(x),
            Fitted::GaussianNB(m) => m.proba(x),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub kind: LearnerKind,
    pub standardizer: Standardizer,
    pub include_sensitive: bool,
    pub n_features: usize,
    pub fitted: Fitted,
    /// False when an iterative learner hit its epoch cap first.
    pub converged: bool,
    pub epochs: usize,
}

impl TrainedModel {
    pub fn predict_proba(&self, features: &[f64], sensitive: u8) -> Result<f64> {
        if features.len() != self.n_features {
            return Err(Error::ArityMismatch {
                expected: self.n_features,
                got: features.len(),
            });
        }
        let mut raw = features.to_vec();
        if self.include_sensitive {
            raw.push(sensitive as f64);
        }
        let mut x = Vec::with_capacity(raw.len());
        self.standardizer.apply(&raw, &mut x);
        Ok(self.fitted.proba(&x).clamp(0.0, 1.0))
    }

    pub fn predict(&self, features: &[f64], sensitive: u8) -> Result<u8> {
        Ok((self.predict_proba(features, sensitive)? >= 0.5) as u8)
    }

    pub fn predict_proba_dataset(&self, data: &Dataset) -> Result<Vec<f64>> {
        if data.n_features() != self.n_features {
            return Err(Error::ArityMismatch {
                expected: self.n_features,
                got: data.n_features(),
            });
        }
        let design = Design::build(data, self.include_sensitive, &self.standardizer);
        let probs = match &self.fitted {
            Fitted::LogReg(m) => m.proba_design(&design),
            Fitted::NeuralNet(m) => m.proba_design(&design),
            other => (0..design.n).map(|i| other.proba(&design.row(i))).collect(),
        };
        Ok(probs.into_iter().map(|p| p.clamp(0.0, 1.0)).collect())
    }

    pub fn predict_dataset(&self, data: &Dataset) -> Result<Vec<u8>> {
        Ok(self
            .predict_proba_dataset(data)?
            .into_iter()
            .map(|p| (p >= 0.5) as u8)
            .collect())
    }
}

pub fn fit(spec: &LearnerSpec, train: &Dataset) -> Result<TrainedModel> {
    spec.validate()?;
    if train.is_empty() {
        return Err(Error::InvalidArgument("training set is empty".into()));
    }
    let positives = train.target().iter().filter(|&&y| y == 1).count();
    if spec.kind.needs_both_classes() && (positives == 0 || positives == train.n()) {
        return Err(Error::SingleClassTrainingSet);
    }

    let raw = Design::raw_columns(train, spec.include_sensitive);
    let standardizer = Standardizer::fit(&raw);
    let design = Design::build(train, spec.include_sensitive, &standardizer);
    let y: Vec<f64> = train.target().iter().map(|&v| v as f64).collect();

    let (fitted, converged, epochs) = match spec.kind {
        LearnerKind::LogReg => {
            let out = logreg::train(&design, &y, spec.reg, &spec.params, None);
            (Fitted::LogReg(out.model), out.converged, out.epochs)
        }
        LearnerKind::NeuralNet => {
            let out = mlp::train(&design, &y, spec.reg, &spec.params, spec.seed);
            (Fitted::NeuralNet(out.model), out.converged, out.epochs)
        }
        LearnerKind::DecisionTree => (
            Fitted::DecisionTree(tree::Tree::fit(&design, train.target(), spec.reg as usize)),
            true,
            0,
        ),
        LearnerKind::Knn => (Fitted::Knn(knn::Knn::fit(&design, train.target(), spec.reg as usize)), true, 0),
        LearnerKind::GaussianNB => (
            Fitted::GaussianNB(naive_bayes::GaussianNb::fit(&design, train.target(), spec.reg)),
            true,
            0,
        ),
    };
    if !converged {
        log::debug!("{} stopped at the epoch cap ({epochs} epochs)", spec.kind);
    }

    Ok(TrainedModel {
        kind: spec.kind,
        standardizer,
        include_sensitive: spec.include_sensitive,
        n_features: train.n_features(),
        fitted,
        converged,
        epochs,
    })
}

/// Mean k-fold balanced accuracy of each grid element, in grid order.
pub fn cv_balanced_accuracy(grid: &[LearnerSpec], train: &Dataset, k: usize, seed: u64) -> Result<Vec<f64>> {
    let folds = stratified_kfold(train, k, seed)?;
    let jobs: Vec<(usize, usize)> = (0..grid.len()).flat_map(|g| (0..k).map(move |f| (g, f))).collect();
    let scores = jobs
        .par_iter()
        .map(|&(g, f)| {
            let fold = &folds[f];
            let model = fit(&grid[g], &train.subset(&fold.train))?;
            let valid = train.subset(&fold.valid);
            let pred = model.predict_dataset(&valid)?;
            balanced_accuracy(valid.target(), &pred)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(scores.chunks(k).map(|c| c.iter().sum::<f64>() / k as f64).collect())
}

/// The grid element with the best mean cross-validated balanced accuracy.
/// Scores within 1e-12 of each other tie, and ties go to the more strongly
/// regularized spec.
pub fn tune_balanced_accuracy(grid: &[LearnerSpec], train: &Dataset, k: usize, seed: u64) -> Result<LearnerSpec> {
    match grid {
        [] => Err(Error::InvalidArgument("tuning grid is empty".into())),
        [only] => Ok(only.clone()),
        _ => {
            let scores = cv_balanced_accuracy(grid, train, k, seed)?;
            Ok(grid[select_best(grid, &scores)].clone())
        }
    }
}

fn select_best(grid: &[LearnerSpec], scores: &[f64]) -> usize {
    let mut best = 0;
    for i in 1..grid.len() {
        let better = scores[i] > scores[best] + 1e-12;
        let tied = (scores[i] - scores[best]).abs() <= 1e-12;
        if better || (tied && grid[i].regularization_strength() > grid[best].regularization_strength()) {
            best = i;
        }
    }
    best
}
