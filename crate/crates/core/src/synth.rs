//! Synthetic admissions data.
//!
//! Each applicant has an IQ drawn uniformly from the integers 80..=120, a
//! group `S` and an SAT score that rises with IQ and is shifted upward for
//! the favored group:
//!
//! `SAT = clamp(round(1000 + 15 (IQ - 100) + 80 S + e), 400, 1600)`, `e ~ N(0, sd^2)`.
//!
//! Admission is stochastic in SAT. Instead of thresholding a score, the
//! generator fixes how many admitted applicants each group gets (quotas
//! derived from the class rate and the minority share of positives) and
//! draws that many per group by weighted sampling without replacement, with
//! weights `logistic((SAT - admit_center) / admit_scale)`. This hits the
//! requested cell counts exactly at every point of the imbalance grid.

use rand::seq::SliceRandom;
use rand::Rng as _;
use rand_distr::{Distribution, Normal};

use crate::dataset::{apportion, Dataset};
use crate::error::{Error, QuotaCell, Result};
use crate::seed;

const SAT_BASE: f64 = 1000.0;
const SAT_PER_IQ: f64 = 15.0;
const SAT_GROUP_SHIFT: f64 = 80.0;

/// How the second imbalance axis is read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Incidence {
    /// `minority_share` is `P(S = 0 | Y = 1)`.
    #[default]
    MinorityShare,
    /// `minority_share` is `P(Y = 1 | S = 0)`; infeasible combinations error.
    ConditionalRate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub n: usize,
    /// Fraction of rows with `S = 0`.
    pub p_minority: f64,
    /// Target `P(Y = 1)`.
    pub class_rate: f64,
    /// Target `P(S = 0 | Y = 1)` (or `P(Y = 1 | S = 0)`, see [`Incidence`]).
    pub minority_share: f64,
    pub incidence: Incidence,
    /// Standard deviation of the SAT noise term, in points.
    pub sat_noise_sd: f64,
    pub admit_center: f64,
    pub admit_scale: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n: 5000,
            p_minority: 0.5,
            class_rate: 0.3,
            minority_share: 0.5,
            incidence: Incidence::MinorityShare,
            sat_noise_sd: 100.0,
            admit_center: 1050.0,
            admit_scale: 80.0,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn new(class_rate: f64, minority_share: f64, seed: u64) -> Self {
        Self {
            class_rate,
            minority_share,
            seed,
            ..Self::default()
        }
    }

    /// Exact cell counts `[s0y1, s0y0, s1y1, s1y0]`, apportioned to sum to `n`.
    pub fn quotas(&self) -> Result<[usize; 4]> {
        if self.n == 0 {
            return Err(Error::InvalidArgument("n must be positive".into()));
        }
        if !(self.class_rate > 0.0 && self.class_rate < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "class_rate must lie in (0, 1), got {}",
                self.class_rate
            )));
        }
        if !(0.0..=1.0).contains(&self.minority_share) {
            return Err(Error::InvalidArgument(format!(
                "minority_share must lie in [0, 1], got {}",
                self.minority_share
            )));
        }
        if !(self.p_minority > 0.0 && self.p_minority < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "p_minority must lie in (0, 1), got {}",
                self.p_minority
            )));
        }
        if !(self.sat_noise_sd >= 0.0 && self.sat_noise_sd.is_finite()) {
            return Err(Error::InvalidArgument("sat_noise_sd must be finite and >= 0".into()));
        }
        if !(self.admit_scale > 0.0 && self.admit_scale.is_finite() && self.admit_center.is_finite()) {
            return Err(Error::InvalidArgument("admit_scale must be finite and > 0".into()));
        }

        let n = self.n as f64;
        let positives = n * self.class_rate;
        let s0y1 = match self.incidence {
            Incidence::MinorityShare => positives * self.minority_share,
            Incidence::ConditionalRate => n * self.p_minority * self.minority_share,
        };
        let raw = [
            s0y1,
            n * self.p_minority - s0y1,
            positives - s0y1,
            n * (1.0 - self.p_minority) - (positives - s0y1),
        ];
        let cells = [QuotaCell::S0Y1, QuotaCell::S0Y0, QuotaCell::S1Y1, QuotaCell::S1Y0];
        for (&count, &cell) in raw.iter().zip(&cells) {
            if count < -1e-9 {
                return Err(Error::InfeasibleQuota { cell, count });
            }
        }
        let counts = apportion(&raw.map(|c| c.max(0.0)), self.n);
        Ok([counts[0], counts[1], counts[2], counts[3]])
    }
}

fn logistic(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Indices of `k` items drawn without replacement with probability
/// proportional to `weights` (Efraimidis-Spirakis keys).
fn weighted_sample(rng: &mut seed::Rng, weights: &[f64], k: usize) -> Vec<usize> {
    let mut keyed: Vec<(f64, usize)> = weights
        .iter()
        .enumerate()
        .map(|(i, &w)| {
            let u: f64 = rng.random_range(f64::MIN_POSITIVE..1.0);
            (u.ln() / w, i)
        })
        .collect();
    keyed.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    keyed.into_iter().take(k).map(|(_, i)| i).collect()
}

pub fn generate(cfg: &SynthConfig) -> Result<Dataset> {
    let [s0y1, s0y0, s1y1, s1y0] = cfg.quotas()?;
    let mut rng = seed::rng(seed::derive(cfg.seed, &[seed::stream::DATA]));

    let mut sensitive: Vec<u8> = std::iter::repeat_n(0u8, s0y1 + s0y0)
        .chain(std::iter::repeat_n(1u8, s1y1 + s1y0))
        .collect();
    sensitive.shuffle(&mut rng);

    let noise = Normal::new(0.0, cfg.sat_noise_sd).expect("sd validated in quotas");
    let mut features = Vec::with_capacity(cfg.n * 2);
    let mut propensity = Vec::with_capacity(cfg.n);
    for &s in &sensitive {
        let iq = rng.random_range(80..=120) as f64;
        let e = noise.sample(&mut rng);
        let sat = (SAT_BASE + SAT_PER_IQ * (iq - 100.0) + SAT_GROUP_SHIFT * s as f64 + e)
            .round()
            .clamp(400.0, 1600.0);
        features.push(iq);
        features.push(sat);
        propensity.push(logistic((sat - cfg.admit_center) / cfg.admit_scale));
    }

    let mut target = vec![0u8; cfg.n];
    for (group, admitted) in [(0u8, s0y1), (1u8, s1y1)] {
        let members: Vec<usize> = (0..cfg.n).filter(|&i| sensitive[i] == group).collect();
        let weights: Vec<f64> = members.iter().map(|&i| propensity[i]).collect();
        for pick in weighted_sample(&mut rng, &weights, admitted) {
            target[members[pick]] = 1;
        }
    }

    Dataset::from_flat(vec!["IQ".into(), "SAT".into()], features, target, sensitive)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub sigma: f64,
    pub seed: u64,
}

/// Each column shifted to mean 0 and scaled to unit (population) variance.
/// Constant columns are only centered.
pub fn standardize_columns(d: &Dataset) -> Dataset {
    let (n, k) = (d.n(), d.n_features());
    let mut out = d.features().to_vec();
    if n == 0 {
        return d.clone();
    }
    for j in 0..k {
        let mean = (0..n).map(|i| out[i * k + j]).sum::<f64>() / n as f64;
        let var = (0..n).map(|i| (out[i * k + j] - mean).powi(2)).sum::<f64>() / n as f64;
        let sd = if var > 0.0 { var.sqrt() } else { 1.0 };
        for i in 0..n {
            out[i * k + j] = (out[i * k + j] - mean) / sd;
        }
    }
    d.with_features(out)
}

/// Standardize every feature column, then add i.i.d. `N(0, sigma^2)` noise.
pub fn inject_noise(d: &Dataset, spec: &NoiseSpec) -> Result<Dataset> {
    if d.n_features() == 0 {
        return Err(Error::InvalidArgument("dataset has no numeric feature column".into()));
    }
    if !(spec.sigma >= 0.0 && spec.sigma.is_finite()) {
        return Err(Error::InvalidArgument(format!("sigma must be finite and >= 0, got {}", spec.sigma)));
    }
    let standardized = standardize_columns(d);
    if spec.sigma == 0.0 {
        return Ok(standardized);
    }
    let mut rng = seed::rng(seed::derive(spec.seed, &[seed::stream::NOISE]));
    let normal = Normal::new(0.0, spec.sigma).expect("sigma validated");
    let noisy = standardized
        .features()
        .iter()
        .map(|v| v + normal.sample(&mut rng))
        .collect();
    Ok(standardized.with_features(noisy))
}
