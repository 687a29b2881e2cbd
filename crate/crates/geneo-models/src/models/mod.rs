//! The trainable architectures: the two pattern-bank classifiers, MLP
//! baselines, and a small two-stage CNN.

pub mod cnn;
pub mod geo1;
pub mod geo2;
pub mod mlp;

pub use cnn::CnnModel;
pub use geo1::Geo1Model;
pub use geo2::Geo2Model;
pub use mlp::MlpModel;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub const CLASSES: usize = 10;

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Numerically stable binary cross-entropy from a logit; returns the loss and
/// d(loss)/d(logit) = sigmoid(z) - y.
pub(crate) fn bce_with_logit(z: f64, y: f64) -> (f64, f64) {
    let loss = z.max(0.0) - z * y + (-z.abs()).exp().ln_1p();
    (loss, sigmoid(z) - y)
}

/// Softmax cross-entropy over a logit slice; fills dlogits and returns the
/// loss.
pub(crate) fn softmax_ce(logits: &[f64], target: usize, dlogits: &mut [f64]) -> f64 {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for (d, &z) in dlogits.iter_mut().zip(logits.iter()) {
        *d = (z - max).exp();
        sum += *d;
    }
    for d in dlogits.iter_mut() {
        *d /= sum;
    }
    let loss = -(dlogits[target].ln());
    dlogits[target] -= 1.0;
    loss
}

/// Uniform initialization in [-1/sqrt(fan_in), +1/sqrt(fan_in)].
pub(crate) fn init_uniform(rng: &mut ChaCha8Rng, out: &mut [f32], fan_in: usize) {
    let bound = 1.0 / (fan_in as f64).sqrt();
    for w in out.iter_mut() {
        *w = rng.gen_range(-bound..=bound) as f32;
    }
}

/// Deterministic argmax: lowest index wins ties.
pub(crate) fn argmax(scores: &[f64]) -> usize {
    let mut best = 0usize;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

/// Accuracy of predictions against targets.
pub fn accuracy(predictions: &[usize], targets: &[u8]) -> f64 {
    assert_eq!(predictions.len(), targets.len());
    if predictions.is_empty() {
        return 0.0;
    }
    let hits = predictions.iter().zip(targets.iter()).filter(|&(&p, &t)| p == t as usize).count();
    hits as f64 / predictions.len() as f64
}
