//! One-hidden-layer network with logistic activations, trained by
//! full-batch gradient descent on log-loss plus `(alpha / 2)` times the
//! squared L2 norm of all weights (biases are not penalized).
//!
//! Parameters are stored flat as `[W1 (hidden x d, row-major), b1, w2, b2]`.
//! Activations are kept unit-major so every inner loop runs over samples.

use rand::Rng;

use super::math::{self, sigmoid};
use super::{Design, TrainParams};
use crate::seed;

pub const DEFAULT_STEP: f64 = 0.1;

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub inputs: usize,
    pub hidden: usize,
    pub params: Vec<f64>,
}

struct Layout {
    d: usize,
    h: usize,
}

impl Layout {
    fn w1(&self, u: usize, j: usize) -> usize {
        u * self.d + j
    }
    fn b1(&self, u: usize) -> usize {
        self.h * self.d + u
    }
    fn w2(&self, u: usize) -> usize {
        self.h * self.d + self.h + u
    }
    fn b2(&self) -> usize {
        self.h * self.d + 2 * self.h
    }
    fn len(&self) -> usize {
        self.b2() + 1
    }
    fn is_weight(&self, k: usize) -> bool {
        k < self.h * self.d || (self.w2(0)..self.b2()).contains(&k)
    }
}

/// Fused per-unit passes over all samples. Narrow designs get loops with a
/// compile-time width; x86-64 hosts with AVX-512 get a wider build of the
/// same code that also fuses multiply-adds, so results agree across hosts
/// only to rounding.
mod kernels {
    use super::math::{madd, sigmoid_with};

    const L: usize = 8;

    #[inline(always)]
    fn lanes(v: &[f64], c: usize) -> &[f64; L] {
        v[c * L..(c + 1) * L].try_into().unwrap()
    }

    #[inline(always)]
    fn forward_fixed<const D: usize, const F: bool>(
        cols: &[&[f64]],
        w: &[f64],
        b: f64,
        w2: f64,
        act: &mut [f64],
        out: &mut [f64],
    ) {
        let n = act.len();
        let cols: [&[f64]; D] = std::array::from_fn(|j| &cols[j][..n]);
        let w: [f64; D] = std::array::from_fn(|j| w[j]);
        let out = &mut out[..n];
        for i in 0..n {
            let mut a = b;
            for j in 0..D {
                a = madd::<F>(w[j], cols[j][i], a);
            }
            let s = sigmoid_with::<F>(a);
            act[i] = s;
            out[i] = madd::<F>(w2, s, out[i]);
        }
    }

    #[inline(always)]
    fn forward_any<const F: bool>(cols: &[&[f64]], w: &[f64], b: f64, w2: f64, act: &mut [f64], out: &mut [f64]) {
        match cols.len() {
            1 => forward_fixed::<1, F>(cols, w, b, w2, act, out),
            2 => forward_fixed::<2, F>(cols, w, b, w2, act, out),
            3 => forward_fixed::<3, F>(cols, w, b, w2, act, out),
            4 => forward_fixed::<4, F>(cols, w, b, w2, act, out),
            _ => {
                act.fill(b);
                for (col, &wj) in cols.iter().zip(w) {
                    for (a, &x) in act.iter_mut().zip(col.iter()) {
                        *a = madd::<F>(wj, x, *a);
                    }
                }
                for (a, o) in act.iter_mut().zip(out.iter_mut()) {
                    *a = sigmoid_with::<F>(*a);
                    *o = madd::<F>(w2, *a, *o);
                }
            }
        }
    }

    /// Returns `(d/dw2, d/db1)` and writes `d/dW1[u, j]` into `gw`, all
    /// without the penalty term. `res` holds output residuals already
    /// divided by the sample count.
    #[inline(always)]
    fn backward_fixed<const D: usize, const F: bool>(
        cols: &[&[f64]],
        res: &[f64],
        act: &[f64],
        w2: f64,
        gw: &mut [f64],
    ) -> (f64, f64) {
        let n = act.len();
        let cols: [&[f64]; D] = std::array::from_fn(|j| &cols[j][..n]);
        let res = &res[..n];
        let mut g2 = [0.0; L];
        let mut gb = [0.0; L];
        let mut g = [[0.0; L]; D];
        let blocks = n / L;
        for c in 0..blocks {
            let (o, s) = (lanes(res, c), lanes(act, c));
            let mut delta = [0.0; L];
            for l in 0..L {
                g2[l] = madd::<F>(o[l], s[l], g2[l]);
                delta[l] = o[l] * w2 * s[l] * (1.0 - s[l]);
                gb[l] += delta[l];
            }
            for j in 0..D {
                let x = lanes(cols[j], c);
                for l in 0..L {
                    g[j][l] = madd::<F>(delta[l], x[l], g[j][l]);
                }
            }
        }
        let fold = |v: [f64; L]| v.iter().sum::<f64>();
        let (mut t2, mut tb) = (fold(g2), fold(gb));
        let mut tg: [f64; D] = std::array::from_fn(|j| fold(g[j]));
        for i in blocks * L..n {
            let (o, s) = (res[i], act[i]);
            t2 += o * s;
            let delta = o * w2 * s * (1.0 - s);
            tb += delta;
            for j in 0..D {
                tg[j] += delta * cols[j][i];
            }
        }
        gw[..D].copy_from_slice(&tg);
        (t2, tb)
    }

    #[inline(always)]
    fn backward_any<const F: bool>(cols: &[&[f64]], res: &[f64], act: &[f64], w2: f64, gw: &mut [f64]) -> (f64, f64) {
        match cols.len() {
            1 => backward_fixed::<1, F>(cols, res, act, w2, gw),
            2 => backward_fixed::<2, F>(cols, res, act, w2, gw),
            3 => backward_fixed::<3, F>(cols, res, act, w2, gw),
            4 => backward_fixed::<4, F>(cols, res, act, w2, gw),
            _ => {
                let delta: Vec<f64> = res.iter().zip(act).map(|(&o, &s)| o * w2 * s * (1.0 - s)).collect();
                for (g, col) in gw.iter_mut().zip(cols) {
                    *g = super::math::dot(&delta, col);
                }
                (super::math::dot(res, act), super::math::sum(&delta))
            }
        }
    }

    #[inline(always)]
    fn residuals_any<const F: bool>(out: &mut [f64], y: &[f64], inv_n: f64) {
        for (o, &yi) in out.iter_mut().zip(y) {
            *o = (sigmoid_with::<F>(*o) - yi) * inv_n;
        }
    }

    #[cfg(target_arch = "x86_64")]
    mod wide {
        #[target_feature(enable = "avx512f,avx2,fma")]
        pub unsafe fn forward(cols: &[&[f64]], w: &[f64], b: f64, w2: f64, act: &mut [f64], out: &mut [f64]) {
            super::forward_any::<true>(cols, w, b, w2, act, out)
        }

        #[target_feature(enable = "avx512f,avx2,fma")]
        pub unsafe fn backward(cols: &[&[f64]], res: &[f64], act: &[f64], w2: f64, gw: &mut [f64]) -> (f64, f64) {
            super::backward_any::<true>(cols, res, act, w2, gw)
        }

        #[target_feature(enable = "avx512f,avx2,fma")]
        pub unsafe fn residuals(out: &mut [f64], y: &[f64], inv_n: f64) {
            super::residuals_any::<true>(out, y, inv_n)
        }
    }

    fn wide_available() -> bool {
        #[cfg(target_arch = "x86_64")]
        {
            std::arch::is_x86_feature_detected!("avx512f") && std::arch::is_x86_feature_detected!("fma")
        }
        #[cfg(not(target_arch = "x86_64"))]
        {
            false
        }
    }

    /// Output logits become `(p - y) / n` in place.
    pub fn residuals(out: &mut [f64], y: &[f64], inv_n: f64) {
        #[cfg(target_arch = "x86_64")]
        if wide_available() {
            // SAFETY: the required CPU features were detected at run time.
            return unsafe { wide::residuals(out, y, inv_n) };
        }
        residuals_any::<false>(out, y, inv_n)
    }

    pub fn forward_unit(cols: &[&[f64]], w: &[f64], b: f64, w2: f64, act: &mut [f64], out: &mut [f64]) {
        #[cfg(target_arch = "x86_64")]
        if wide_available() {
            // SAFETY: the required CPU features were detected at run time.
            return unsafe { wide::forward(cols, w, b, w2, act, out) };
        }
        forward_any::<false>(cols, w, b, w2, act, out)
    }

    pub fn backward_unit(cols: &[&[f64]], res: &[f64], act: &[f64], w2: f64, gw: &mut [f64]) -> (f64, f64) {
        #[cfg(target_arch = "x86_64")]
        if wide_available() {
            // SAFETY: the required CPU features were detected at run time.
            return unsafe { wide::backward(cols, res, act, w2, gw) };
        }
        backward_any::<false>(cols, res, act, w2, gw)
    }
}

/// Reusable buffers for one design matrix.
#[derive(Default)]
pub struct Workspace {
    hidden: Vec<f64>,
    out: Vec<f64>,
}

impl Mlp {
    fn layout(&self) -> Layout {
        Layout {
            d: self.inputs,
            h: self.hidden,
        }
    }

    /// Uniform initialization in `+-sqrt(2 / (fan_in + fan_out))`.
    pub fn init(inputs: usize, hidden: usize, seed: u64) -> Self {
        let lay = Layout { d: inputs, h: hidden };
        let mut rng = seed::rng(seed::derive(seed, &[seed::stream::LEARNER]));
        let b_in = (2.0 / (inputs + hidden) as f64).sqrt();
        let b_out = (2.0 / (hidden + 1) as f64).sqrt();
        let params = (0..lay.len())
            .map(|k| {
                let bound = if k < lay.w2(0) { b_in } else { b_out };
                rng.random_range(-bound..bound)
            })
            .collect();
        Self { inputs, hidden, params }
    }

    pub fn proba(&self, x: &[f64]) -> f64 {
        let lay = self.layout();
        let p = &self.params;
        let mut z = p[lay.b2()];
        for u in 0..self.hidden {
            let mut a = p[lay.b1(u)];
            for (j, xj) in x.iter().enumerate() {
                a += p[lay.w1(u, j)] * xj;
            }
            z += p[lay.w2(u)] * sigmoid(a);
        }
        sigmoid(z)
    }

    /// Fills `ws.hidden` with activations and `ws.out` with output logits.
    fn forward(&self, design: &Design, ws: &mut Workspace) {
        let (lay, n, p) = (self.layout(), design.n, &self.params);
        ws.hidden.clear();
        ws.hidden.resize(self.hidden * n, 0.0);
        ws.out.clear();
        ws.out.resize(n, p[lay.b2()]);
        let cols: Vec<&[f64]> = design.columns.iter().map(|c| &c[..n]).collect();
        for u in 0..self.hidden {
            let act = &mut ws.hidden[u * n..(u + 1) * n];
            let w = &p[lay.w1(u, 0)..lay.w1(u, 0) + lay.d];
            kernels::forward_unit(&cols, w, p[lay.b1(u)], p[lay.w2(u)], act, &mut ws.out);
        }
    }

    pub fn proba_design(&self, design: &Design) -> Vec<f64> {
        let mut ws = Workspace::default();
        self.forward(design, &mut ws);
        math::sigmoid_in_place(&mut ws.out);
        ws.out
    }

    pub fn loss(&self, design: &Design, y: &[f64], alpha: f64) -> f64 {
        let mut ws = Workspace::default();
        self.forward(design, &mut ws);
        let data = ws.out.iter().zip(y).map(|(&z, &y)| math::log_loss(z, y)).sum::<f64>() / design.n as f64;
        data + 0.5 * alpha * self.penalty_norm()
    }

    fn penalty_norm(&self) -> f64 {
        let lay = self.layout();
        self.params
            .iter()
            .enumerate()
            .filter(|(k, _)| lay.is_weight(*k))
            .map(|(_, w)| w * w)
            .sum()
    }

    pub fn gradient(&self, design: &Design, y: &[f64], alpha: f64) -> Vec<f64> {
        let mut grad = vec![0.0; self.params.len()];
        self.gradient_into(design, y, alpha, &mut Workspace::default(), &mut grad);
        grad
    }

    fn gradient_into(&self, design: &Design, y: &[f64], alpha: f64, ws: &mut Workspace, grad: &mut [f64]) {
        self.forward(design, ws);
        let (lay, n, p) = (self.layout(), design.n, &self.params);
        let inv_n = 1.0 / n as f64;
        kernels::residuals(&mut ws.out, y, inv_n);
        grad[lay.b2()] = math::sum(&ws.out);
        let cols: Vec<&[f64]> = design.columns.iter().map(|c| &c[..n]).collect();
        let mut gw = vec![0.0; lay.d];
        for u in 0..self.hidden {
            let act = &ws.hidden[u * n..(u + 1) * n];
            let w2 = p[lay.w2(u)];
            let (g_w2, g_b1) = kernels::backward_unit(&cols, &ws.out, act, w2, &mut gw);
            grad[lay.w2(u)] = g_w2 + alpha * w2;
            grad[lay.b1(u)] = g_b1;
            for (j, g) in gw.iter().enumerate() {
                grad[lay.w1(u, j)] = g + alpha * p[lay.w1(u, j)];
            }
        }
    }
}

/// The configured step for weights, capped so the penalty term alone cannot
/// make gradient descent oscillate when `alpha` is large. Biases, which are
/// not penalized, always use the configured step.
pub fn weight_step(learning_rate: f64, alpha: f64) -> f64 {
    learning_rate.min(1.0 / (1.0 + alpha))
}

pub struct TrainOutcome {
    pub model: Mlp,
    pub converged: bool,
    pub epochs: usize,
}

pub fn train(design: &Design, y: &[f64], alpha: f64, params: &TrainParams, seed: u64) -> TrainOutcome {
    let mut model = Mlp::init(design.d(), params.hidden_units, seed);
    let rate = params.learning_rate.unwrap_or(DEFAULT_STEP);
    let lay = model.layout();
    let steps: Vec<f64> = (0..model.params.len())
        .map(|k| if lay.is_weight(k) { weight_step(rate, alpha) } else { rate })
        .collect();
    let mut ws = Workspace::default();
    let mut grad = vec![0.0; model.params.len()];
    let mut converged = false;
    let mut epochs = 0;
    while epochs < params.max_epochs {
        model.gradient_into(design, y, alpha, &mut ws, &mut grad);
        if grad.iter().all(|g| g.abs() < params.tolerance) {
            converged = true;
            break;
        }
        for ((w, g), s) in model.params.iter_mut().zip(&grad).zip(&steps) {
            *w -= s * g;
        }
        epochs += 1;
    }
    TrainOutcome {
        model,
        converged,
        epochs,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_problem(rng: &mut seed::Rng, n: usize, d: usize) -> (Design, Vec<f64>) {
        let columns = (0..d).map(|_| (0..n).map(|_| rng.random_range(-2.0..2.0)).collect()).collect();
        let y = (0..n).map(|_| rng.random_range(0..2) as f64).collect();
        (Design { columns, n }, y)
    }

    #[test]
    fn gradient_matches_central_differences() {
        let mut rng = seed::rng(4242);
        let (design, y) = random_problem(&mut rng, 30, 3);
        for trial in 0..20 {
            let mut m = Mlp::init(3, 8, trial);
            for w in m.params.iter_mut() {
                *w = rng.random_range(-1.5..1.5);
            }
            let alpha = rng.random_range(0.0..0.3);
            let g = m.gradient(&design, &y, alpha);
            for (k, &gk) in g.iter().enumerate() {
                let h = 1e-5;
                let mut up = m.clone();
                let mut dn = m.clone();
                up.params[k] += h;
                dn.params[k] -= h;
                let fd = (up.loss(&design, &y, alpha) - dn.loss(&design, &y, alpha)) / (2.0 * h);
                let rel = (gk - fd).abs() / gk.abs().max(fd.abs()).max(1e-7);
                assert!(rel < 1e-4, "trial {trial} param {k}: {gk} vs {fd}");
            }
        }
    }

    #[test]
    fn row_and_batch_forward_agree() {
        let mut rng = seed::rng(7);
        let (design, _) = random_problem(&mut rng, 25, 4);
        let m = Mlp::init(4, 8, 1);
        let batch = m.proba_design(&design);
        for (i, &pb) in batch.iter().enumerate() {
            assert!((m.proba(&design.row(i)) - pb).abs() < 1e-13);
        }
    }

    #[test]
    fn training_reduces_loss_and_large_alpha_shrinks_weights() {
        let mut rng = seed::rng(11);
        let (design, _) = random_problem(&mut rng, 200, 2);
        let y: Vec<f64> = (0..200).map(|i| (design.columns[0][i] + design.columns[1][i] > 0.0) as u8 as f64).collect();
        let params = TrainParams {
            learning_rate: Some(DEFAULT_STEP),
            max_epochs: 2000,
            ..TrainParams::default()
        };
        let start = Mlp::init(2, 8, 3).loss(&design, &y, 0.0);
        let fitted = train(&design, &y, 0.0, &params, 3).model;
        assert!(fitted.loss(&design, &y, 0.0) < 0.5 * start);

        let heavy = train(&design, &y, 100.0, &params, 3).model;
        assert!(heavy.penalty_norm() < 1e-4);
        assert!(heavy.params.iter().all(|w| w.is_finite()));
    }
}
