//! Model-side verification suites: analytic-vs-numeric gradient agreement
//! and exhaustive shift invariance of the pooled-pattern classifier.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use geneo_core::suites::SuiteReport;

use crate::activation::{extract_cwm_sparse, extract_features};
use crate::dataset::Image;
use crate::models::{CnnModel, Geo1Model, Geo2Model, MlpModel};
use crate::patterns::sample_patterns;
use crate::train::gradient_check;

pub const MODEL_SUITES: &[&str] = &["gradient-check", "invariance"];

const FD_STEP: f64 = 1e-4;
const FD_TOL: f64 = 1e-4;

fn random_images(rng: &mut ChaCha8Rng, count: usize, h: usize, w: usize) -> Vec<Image> {
    (0..count)
        .map(|_| Image::new(h, w, (0..h * w).map(|_| rng.gen_range(0.05..=1.0)).collect()))
        .collect()
}

fn random_targets(rng: &mut ChaCha8Rng, count: usize) -> Vec<u8> {
    (0..count).map(|_| rng.gen_range(0..10u8)).collect()
}

/// Central-difference agreement for every trainable architecture.
pub fn gradient_check_suite(seed: u64, draws_per_arch: usize) -> SuiteReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = Vec::new();
    let mut max_err: f64 = 0.0;
    let record = |arch: &str, draw: usize, err: f64, failures: &mut Vec<String>| {
        if err > FD_TOL || !err.is_finite() {
            failures.push(format!("{arch} draw {draw}: relative gradient error {err:.3e}"));
        }
    };

    for draw in 0..draws_per_arch {
        // Pooled-pattern head over cached features.
        {
            let images = random_images(&mut rng, 4, 6, 6);
            let bank = sample_patterns(&images, 4, 3, 3, rng.gen()).unwrap();
            let model = Geo1Model::new(bank, rng.gen());
            let features = extract_features(&images, &model.bank);
            let targets = random_targets(&mut rng, 4);
            let err = gradient_check(
                &model.params,
                &[0, 1, 2, 3],
                model.loss_grad(&features, &targets),
                FD_STEP,
            );
            max_err = max_err.max(err);
            record("geo1", draw, err, &mut failures);
        }
        // Channel-wise-max model over sparse caches.
        {
            let images = random_images(&mut rng, 3, 6, 6);
            let bank = sample_patterns(&images, 3, 3, 3, rng.gen()).unwrap();
            let model = Geo2Model::new(bank, 36, rng.gen());
            let caches = extract_cwm_sparse(&images, &model.bank);
            let targets = random_targets(&mut rng, 3);
            let err = gradient_check(
                &model.params,
                &[0, 1, 2],
                model.loss_grad(&caches, &targets),
                FD_STEP,
            );
            max_err = max_err.max(err);
            record("geo2", draw, err, &mut failures);
        }
        // MLP, alternating between no-hidden and one hidden layer.
        {
            let images = random_images(&mut rng, 4, 3, 4);
            let hidden = if draw % 2 == 0 { None } else { Some(5) };
            let model = MlpModel::new(12, hidden, rng.gen());
            let targets = random_targets(&mut rng, 4);
            let err = gradient_check(
                &model.params,
                &[0, 1, 2, 3],
                model.loss_grad(&images, &targets),
                FD_STEP,
            );
            max_err = max_err.max(err);
            record("mlp", draw, err, &mut failures);
        }
        // CNN on a tiny configuration.
        {
            let images = random_images(&mut rng, 3, 4, 4);
            let model = CnnModel::new(4, 4, 2, 3, draw % 2 == 0, rng.gen());
            let targets = random_targets(&mut rng, 3);
            let err = gradient_check(
                &model.params,
                &[0, 1, 2],
                model.loss_grad(&images, &targets),
                FD_STEP,
            );
            max_err = max_err.max(err);
            record("cnn", draw, err, &mut failures);
        }
    }
    SuiteReport {
        name: "gradient-check",
        instances: draws_per_arch * 4,
        failures,
        info: format!("max relative gradient error {max_err:.3e}"),
    }
}

/// Outcome of a shift-invariance sweep.
#[derive(Debug, Clone)]
pub struct InvarianceOutcome {
    pub images_checked: usize,
    pub shifts_checked: usize,
    pub prediction_mismatches: usize,
    pub max_score_gap: f64,
}

/// Runs the full forward pass on every cyclic shift of every image and
/// compares scores and argmax predictions against the unshifted ones.
pub fn geo1_shift_invariance(model: &Geo1Model, images: &[Image]) -> InvarianceOutcome {
    let (h, w) = match images.first() {
        Some(img) => (img.height, img.width),
        None => {
            return InvarianceOutcome {
                images_checked: 0,
                shifts_checked: 0,
                prediction_mismatches: 0,
                max_score_gap: 0.0,
            }
        }
    };
    let results: Vec<(usize, f64)> = images
        .par_iter()
        .map(|image| {
            let base_feat = extract_features(std::slice::from_ref(image), &model.bank);
            let base_scores = model.scores(base_feat.row(0));
            let base_pred = model.predict(base_feat.row(0));
            let mut mismatches = 0usize;
            let mut max_gap = 0.0f64;
            for dy in 0..h {
                for dx in 0..w {
                    let shifted = image.torus_shift(dy, dx);
                    let feat = extract_features(std::slice::from_ref(&shifted), &model.bank);
                    let scores = model.scores(feat.row(0));
                    let pred = model.predict(feat.row(0));
                    if pred != base_pred {
                        mismatches += 1;
                    }
                    for (a, b) in scores.iter().zip(base_scores.iter()) {
                        max_gap = max_gap.max((a - b).abs());
                    }
                }
            }
            (mismatches, max_gap)
        })
        .collect();
    InvarianceOutcome {
        images_checked: images.len(),
        shifts_checked: images.len() * h * w,
        prediction_mismatches: results.iter().map(|r| r.0).sum(),
        max_score_gap: results.iter().map(|r| r.1).fold(0.0, f64::max),
    }
}

/// Synthetic-data invariance suite for the CLI verifier.
pub fn invariance_suite(seed: u64, instances: usize) -> SuiteReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = Vec::new();
    let mut max_gap: f64 = 0.0;
    for idx in 0..instances {
        let source = random_images(&mut rng, 3, 8, 8);
        let bank = sample_patterns(&source, 5, 3, 3, rng.gen()).unwrap();
        let model = Geo1Model::new(bank, rng.gen());
        let probe = random_images(&mut rng, 2, 8, 8);
        let outcome = geo1_shift_invariance(&model, &probe);
        max_gap = max_gap.max(outcome.max_score_gap);
        if outcome.prediction_mismatches > 0 {
            failures.push(format!(
                "instance {idx}: {} prediction changes under shifts",
                outcome.prediction_mismatches
            ));
        }
        if outcome.max_score_gap > 1e-6 {
            failures.push(format!("instance {idx}: score gap {} under shifts", outcome.max_score_gap));
        }
    }
    SuiteReport {
        name: "invariance",
        instances,
        failures,
        info: format!("max score gap under shifts {max_gap:.3e}"),
    }
}

pub fn run_model_suite(name: &str, seed: u64, instances: usize) -> Option<SuiteReport> {
    match name {
        "gradient-check" => Some(gradient_check_suite(seed, instances)),
        "invariance" => Some(invariance_suite(seed, instances)),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gradient_suite_passes_on_a_small_run() {
        let report = gradient_check_suite(100, 3);
        assert!(report.passed(), "{:?}", report.failures);
    }

    #[test]
    fn invariance_suite_passes_on_a_small_run() {
        let report = invariance_suite(101, 2);
        assert!(report.passed(), "{:?}", report.failures);
    }
}
