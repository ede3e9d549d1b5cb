//! Elementwise kernels written so the optimizer can vectorize them.

use std::f64::consts::LN_2;

// Cody-Waite split of ln 2, kept at full printed precision.
#[allow(clippy::excessive_precision)]
const LN2_HI: f64 = 6.931_471_803_691_238_164_9e-1;
#[allow(clippy::excessive_precision)]
const LN2_LO: f64 = 1.908_214_929_270_587_700_02e-10;
// 1.5 * 2^52: adding it rounds to the nearest integer.
const ROUND_SHIFT: f64 = 6_755_399_441_055_744.0;

/// `a * b + c`, fused when `FUSED` (only worth it where the target has FMA).
#[inline(always)]
pub fn madd<const FUSED: bool>(a: f64, b: f64, c: f64) -> f64 {
    if FUSED {
        a.mul_add(b, c)
    } else {
        a * b + c
    }
}

/// `exp(x)` by range reduction and a degree-11 Taylor polynomial; relative
/// error below 1e-14 on `[-708, 708]`, inputs clamped to that range.
#[inline(always)]
pub fn exp(x: f64) -> f64 {
    exp_with::<false>(x)
}

#[inline(always)]
pub fn exp_with<const FUSED: bool>(x: f64) -> f64 {
    const C: [f64; 12] = [
        1.0 / 39_916_800.0,
        1.0 / 3_628_800.0,
        1.0 / 362_880.0,
        1.0 / 40_320.0,
        1.0 / 5_040.0,
        1.0 / 720.0,
        1.0 / 120.0,
        1.0 / 24.0,
        1.0 / 6.0,
        0.5,
        1.0,
        1.0,
    ];
    let x = x.clamp(-708.0, 708.0);
    let t = madd::<FUSED>(x, 1.0 / LN_2, ROUND_SHIFT);
    let k = t - ROUND_SHIFT;
    let r = madd::<FUSED>(-k, LN2_LO, madd::<FUSED>(-k, LN2_HI, x));
    let mut p = C[0];
    for &c in &C[1..] {
        p = madd::<FUSED>(p, r, c);
    }
    let ki = t.to_bits().wrapping_sub(ROUND_SHIFT.to_bits());
    let scale = f64::from_bits(ki.wrapping_add(1023) << 52);
    p * scale
}

#[inline(always)]
pub fn sigmoid(z: f64) -> f64 {
    sigmoid_with::<false>(z)
}

#[inline(always)]
pub fn sigmoid_with<const FUSED: bool>(z: f64) -> f64 {
    1.0 / (1.0 + exp_with::<FUSED>(-z))
}

/// `ln(1 + e^z)` without overflow.
pub fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

/// Binary cross-entropy of logit `z` against label `y`.
pub fn log_loss(z: f64, y: f64) -> f64 {
    softplus(z) - y * z
}

/// In-place logistic over a slice.
pub fn sigmoid_in_place(v: &mut [f64]) {
    for x in v.iter_mut() {
        *x = sigmoid(*x);
    }
}

/// `sum(a[i] * b[i])` with four independent accumulators.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [0.0f64; 4];
    let chunks = n / 4;
    for c in 0..chunks {
        for l in 0..4 {
            acc[l] += a[4 * c + l] * b[4 * c + l];
        }
    }
    let mut tail = 0.0;
    for i in 4 * chunks..n {
        tail += a[i] * b[i];
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

pub fn sum(a: &[f64]) -> f64 {
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4;
    for c in 0..chunks {
        for l in 0..4 {
            acc[l] += a[4 * c + l];
        }
    }
    let tail: f64 = a[4 * chunks..].iter().sum();
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// `y[i] += alpha * x[i]`
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}
