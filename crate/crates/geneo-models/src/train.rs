//! Deterministic mini-batch SGD with early stopping on validation accuracy.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::TrainError;

/// Hyperparameters; the seed fully determines initialization (done by the
/// model constructors) and batch shuffling.
#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub max_epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    /// Early-stopping patience, in epochs without a validation improvement.
    pub patience: usize,
}

impl TrainConfig {
    fn validate(&self) -> Result<(), TrainError> {
        if self.learning_rate <= 0.0 || !self.learning_rate.is_finite() {
            return Err(TrainError::BadConfig("learning rate must be positive".into()));
        }
        if self.max_epochs == 0 || self.batch_size == 0 || self.patience == 0 {
            return Err(TrainError::BadConfig(
                "epochs, batch size and patience must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_accuracy: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub history: Vec<EpochStats>,
    pub best_val_accuracy: f64,
    pub best_epoch: usize,
    pub epochs_run: usize,
}

/// Work is split into fixed-size chunks so the gradient reduction order does
/// not depend on the number of worker threads.
const GRAD_CHUNK: usize = 8;

/// Runs SGD over `params` (stored f32, arithmetic f64).
///
/// `loss_grad(params64, example, grad)` accumulates the example's gradient
/// into `grad` and returns its loss; `val_accuracy(params64)` scores the
/// validation split. The best-validation weights are restored at the end.
pub fn train_sgd(
    params: &mut [f32],
    train_count: usize,
    cfg: &TrainConfig,
    loss_grad: impl Fn(&[f64], usize, &mut [f64]) -> f64 + Sync,
    val_accuracy: impl Fn(&[f64]) -> f64 + Sync,
) -> Result<TrainOutcome, TrainError> {
    cfg.validate()?;
    if train_count == 0 {
        return Err(TrainError::BadConfig("empty training set".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut indices: Vec<usize> = (0..train_count).collect();
    let mut params64: Vec<f64> = params.iter().map(|&p| p as f64).collect();
    let mut best: Vec<f64> = params64.clone();
    let mut best_val = f64::NEG_INFINITY;
    let mut best_epoch = 0usize;
    let mut stale = 0usize;
    let mut history = Vec::new();
    let mut epochs_run = 0usize;

    for epoch in 0..cfg.max_epochs {
        epochs_run = epoch + 1;
        indices.shuffle(&mut rng);
        let mut epoch_loss = 0.0f64;
        for (batch_no, batch) in indices.chunks(cfg.batch_size).enumerate() {
            // Per-chunk gradients, collected in order and reduced serially.
            let partials: Vec<(f64, Vec<f64>)> = batch
                .par_chunks(GRAD_CHUNK)
                .map(|chunk| {
                    let mut grad = vec![0.0f64; params64.len()];
                    let mut loss = 0.0f64;
                    for &example in chunk {
                        loss += loss_grad(&params64, example, &mut grad);
                    }
                    (loss, grad)
                })
                .collect();
            let mut batch_loss = 0.0f64;
            let mut grad = vec![0.0f64; params64.len()];
            for (loss, partial) in &partials {
                batch_loss += loss;
                for (g, p) in grad.iter_mut().zip(partial.iter()) {
                    *g += p;
                }
            }
            if !batch_loss.is_finite() {
                return Err(TrainError::NonFiniteLoss { epoch, batch: batch_no });
            }
            let scale = cfg.learning_rate / batch.len() as f64;
            for (p, g) in params64.iter_mut().zip(grad.iter()) {
                *p -= scale * g;
            }
            epoch_loss += batch_loss;
        }
        let val = val_accuracy(&params64);
        history.push(EpochStats { epoch, train_loss: epoch_loss / train_count as f64, val_accuracy: val });
        if val > best_val {
            best_val = val;
            best_epoch = epoch;
            best.copy_from_slice(&params64);
            stale = 0;
        } else {
            stale += 1;
            if stale >= cfg.patience {
                break;
            }
        }
    }

    for (dst, &src) in params.iter_mut().zip(best.iter()) {
        *dst = src as f32;
    }
    Ok(TrainOutcome { history, best_val_accuracy: best_val, best_epoch, epochs_run })
}

/// Central-difference gradient verification at the current parameters.
/// Returns the relative error `|g - g_fd| / max(|g|, |g_fd|, eps)` measured
/// in the Euclidean norm.
pub fn gradient_check(
    params: &[f32],
    examples: &[usize],
    loss_grad: impl Fn(&[f64], usize, &mut [f64]) -> f64,
    step: f64,
) -> f64 {
    let params64: Vec<f64> = params.iter().map(|&p| p as f64).collect();
    let mut analytic = vec![0.0f64; params64.len()];
    for &e in examples {
        loss_grad(&params64, e, &mut analytic);
    }
    let loss_at = |p: &[f64]| -> f64 {
        let mut sink = vec![0.0f64; p.len()];
        examples.iter().map(|&e| loss_grad(p, e, &mut sink)).sum()
    };
    let mut fd = vec![0.0f64; params64.len()];
    let mut perturbed = params64.clone();
    for i in 0..params64.len() {
        perturbed[i] = params64[i] + step;
        let up = loss_at(&perturbed);
        perturbed[i] = params64[i] - step;
        let down = loss_at(&perturbed);
        perturbed[i] = params64[i];
        fd[i] = (up - down) / (2.0 * step);
    }
    let diff: f64 = analytic.iter().zip(fd.iter()).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
    let na: f64 = analytic.iter().map(|a| a * a).sum::<f64>().sqrt();
    let nb: f64 = fd.iter().map(|b| b * b).sum::<f64>().sqrt();
    diff / na.max(nb).max(1e-12)
}
