//! L2-regularized logistic regression trained by full-batch gradient descent.
//!
//! Objective: `mean(log_loss(b + w.x, y)) + (lambda / 2) |w|^2`; the
//! intercept is not penalized.

use super::math::{self, sigmoid};
use super::{Design, TrainParams};

#[derive(Debug, Clone, PartialEq)]
pub struct LogReg {
    pub weights: Vec<f64>,
    pub intercept: f64,
}

impl LogReg {
    pub fn zeros(d: usize) -> Self {
        Self {
            weights: vec![0.0; d],
            intercept: 0.0,
        }
    }

    pub fn logit(&self, x: &[f64]) -> f64 {
        self.intercept + math::dot(&self.weights, x)
    }

    pub fn proba(&self, x: &[f64]) -> f64 {
        sigmoid(self.logit(x))
    }

    fn logits(&self, design: &Design, out: &mut Vec<f64>) {
        out.clear();
        out.resize(design.n, self.intercept);
        for (w, col) in self.weights.iter().zip(&design.columns) {
            math::axpy(*w, col, out);
        }
    }

    pub fn proba_design(&self, design: &Design) -> Vec<f64> {
        let mut z = Vec::new();
        self.logits(design, &mut z);
        math::sigmoid_in_place(&mut z);
        z
    }

    /// Parameters packed as `[w..., b]`.
    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = self.weights.clone();
        v.push(self.intercept);
        v
    }

    pub fn from_vec(v: &[f64]) -> Self {
        let (w, b) = v.split_at(v.len() - 1);
        Self {
            weights: w.to_vec(),
            intercept: b[0],
        }
    }
}

pub fn loss(model: &LogReg, design: &Design, y: &[f64], lambda: f64) -> f64 {
    let mut z = Vec::new();
    model.logits(design, &mut z);
    let data: f64 = z.iter().zip(y).map(|(&z, &y)| math::log_loss(z, y)).sum::<f64>() / design.n as f64;
    data + 0.5 * lambda * math::dot(&model.weights, &model.weights)
}

/// Gradient packed as `[dw..., db]`.
pub fn gradient(model: &LogReg, design: &Design, y: &[f64], lambda: f64) -> Vec<f64> {
    let mut residual = Vec::new();
    gradient_into(model, design, y, lambda, &mut residual)
}

fn gradient_into(model: &LogReg, design: &Design, y: &[f64], lambda: f64, residual: &mut Vec<f64>) -> Vec<f64> {
    model.logits(design, residual);
    let inv_n = 1.0 / design.n as f64;
    for (r, &yi) in residual.iter_mut().zip(y) {
        *r = (sigmoid(*r) - yi) * inv_n;
    }
    let mut g: Vec<f64> = design
        .columns
        .iter()
        .zip(&model.weights)
        .map(|(col, w)| math::dot(residual, col) + lambda * w)
        .collect();
    g.push(math::sum(residual));
    g
}

/// Curvature bound `(d + 1) / 4` of the mean log-loss for standardized
/// columns plus an intercept.
pub fn data_curvature(d: usize) -> f64 {
    0.25 * (d as f64 + 1.0)
}

/// Step sizes `(weights, intercept)`. Without an explicit rate the weights
/// use `1 / (L + lambda)` and the unpenalized intercept `1 / L`; that
/// diagonal step is dominated by the Hessian bound, so every step decreases
/// the objective.
pub fn steps(d: usize, lambda: f64, learning_rate: Option<f64>) -> (f64, f64) {
    match learning_rate {
        Some(r) => (r, r),
        None => {
            let l = data_curvature(d);
            (1.0 / (l + lambda), 1.0 / l)
        }
    }
}

pub struct TrainOutcome {
    pub model: LogReg,
    pub converged: bool,
    pub epochs: usize,
}

/// Gradient descent from zero. When `history` is given, the objective
/// before every step is pushed onto it (plus the final value).
pub fn train(
    design: &Design,
    y: &[f64],
    lambda: f64,
    params: &TrainParams,
    mut history: Option<&mut Vec<f64>>,
) -> TrainOutcome {
    let d = design.d();
    let (step, intercept_step) = steps(d, lambda, params.learning_rate);
    let mut model = LogReg::zeros(d);
    let mut scratch = Vec::with_capacity(design.n);
    let mut converged = false;
    let mut epochs = 0;
    while epochs < params.max_epochs {
        if let Some(h) = history.as_deref_mut() {
            h.push(loss(&model, design, y, lambda));
        }
        let g = gradient_into(&model, design, y, lambda, &mut scratch);
        if g.iter().all(|v| v.abs() < params.tolerance) {
            converged = true;
            break;
        }
        for (w, gw) in model.weights.iter_mut().zip(&g) {
            *w -= step * gw;
        }
        model.intercept -= intercept_step * g[d];
        epochs += 1;
    }
    if let Some(h) = history {
        h.push(loss(&model, design, y, lambda));
    }
    TrainOutcome {
        model,
        converged,
        epochs,
    }
}
