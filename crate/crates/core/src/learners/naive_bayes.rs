//! Gaussian naive Bayes. Each class-conditional variance is inflated by
//! `var_smoothing` times the largest per-feature variance of the training set.

use super::Design;

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianNb {
    log_prior: [f64; 2],
    mean: [Vec<f64>; 2],
    var: [Vec<f64>; 2],
}

impl GaussianNb {
    pub fn fit(design: &Design, y: &[u8], var_smoothing: f64) -> Self {
        let n = design.n as f64;
        let max_var = design
            .columns
            .iter()
            .map(|c| {
                let m = c.iter().sum::<f64>() / n;
                c.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n
            })
            .fold(0.0, f64::max);
        let epsilon = var_smoothing * max_var;

        let mut log_prior = [f64::NEG_INFINITY; 2];
        let mut mean = [Vec::new(), Vec::new()];
        let mut var = [Vec::new(), Vec::new()];
        for class in 0..2u8 {
            let members: Vec<usize> = (0..design.n).filter(|&i| y[i] == class).collect();
            let c = class as usize;
            if members.is_empty() {
                mean[c] = vec![0.0; design.d()];
                var[c] = vec![1.0; design.d()];
                continue;
            }
            let m = members.len() as f64;
            log_prior[c] = (m / n).ln();
            for col in &design.columns {
                let mu = members.iter().map(|&i| col[i]).sum::<f64>() / m;
                let v = members.iter().map(|&i| (col[i] - mu).powi(2)).sum::<f64>() / m;
                mean[c].push(mu);
                // A zero floor keeps single-valued classes finite.
                var[c].push((v + epsilon).max(1e-300));
            }
        }
        Self { log_prior, mean, var }
    }

    fn joint_log_likelihood(&self, c: usize, x: &[f64]) -> f64 {
        let ll: f64 = x
            .iter()
            .zip(self.mean[c].iter().zip(&self.var[c]))
            .map(|(xi, (m, v))| -0.5 * ((2.0 * std::f64::consts::PI * v).ln() + (xi - m).powi(2) / v))
            .sum();
        self.log_prior[c] + ll
    }

    pub fn proba(&self, x: &[f64]) -> f64 {
        let l0 = self.joint_log_likelihood(0, x);
        let l1 = self.joint_log_likelihood(1, x);
        if l1 == f64::NEG_INFINITY {
            return 0.0;
        }
        if l0 == f64::NEG_INFINITY {
            return 1.0;
        }
        1.0 / (1.0 + (l0 - l1).exp())
    }
}
