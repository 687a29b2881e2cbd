//! Shift-invariant pattern classifier: pooled pattern responses through a
//! sigmoid linear head. `scores_k = sigmoid(sum_j gamma[k][j] * L_j + b_k)`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::activation::FeatureMatrix;
use crate::models::{argmax, bce_with_logit, init_uniform, sigmoid, CLASSES};
use crate::patterns::PatternBank;

#[derive(Debug, Clone)]
pub struct Geo1Model {
    pub bank: PatternBank,
    /// Layout: gamma row-major [class][pattern], then bias [class].
    pub params: Vec<f32>,
}

impl Geo1Model {
    pub fn new(bank: PatternBank, seed: u64) -> Geo1Model {
        let p = bank.len();
        let mut params = vec![0.0f32; CLASSES * p + CLASSES];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        init_uniform(&mut rng, &mut params, p);
        Geo1Model { bank, params }
    }

    pub fn patterns(&self) -> usize {
        self.bank.len()
    }

    pub fn count_params(&self) -> usize {
        self.params.len()
    }

    /// One max per pattern channel plus the head sigmoids.
    pub fn count_nonlinearities(&self) -> usize {
        self.patterns() + CLASSES
    }

    pub fn logits(&self, params: &[f64], features: &[f32]) -> [f64; CLASSES] {
        let p = self.patterns();
        let mut out = [0.0f64; CLASSES];
        for (k, slot) in out.iter_mut().enumerate() {
            let row = &params[k * p..(k + 1) * p];
            let mut z = params[CLASSES * p + k];
            for (w, &x) in row.iter().zip(features.iter()) {
                z += w * x as f64;
            }
            *slot = z;
        }
        out
    }

    /// Per-class sigmoid scores.
    pub fn scores(&self, features: &[f32]) -> [f64; CLASSES] {
        let params: Vec<f64> = self.params.iter().map(|&p| p as f64).collect();
        let mut z = self.logits(&params, features);
        for v in z.iter_mut() {
            *v = sigmoid(*v);
        }
        z
    }

    pub fn predict(&self, features: &[f32]) -> usize {
        let params: Vec<f64> = self.params.iter().map(|&p| p as f64).collect();
        argmax(&self.logits(&params, features))
    }

    /// Per-example BCE loss and gradient, for the SGD driver.
    pub fn loss_grad<'a>(
        &'a self,
        features: &'a FeatureMatrix,
        targets: &'a [u8],
    ) -> impl Fn(&[f64], usize, &mut [f64]) -> f64 + Sync + 'a {
        let p = self.patterns();
        move |params, example, grad| {
            let x = features.row(example);
            let target = targets[example] as usize;
            let logits = self.logits(params, x);
            let mut loss = 0.0;
            for k in 0..CLASSES {
                let y = if k == target { 1.0 } else { 0.0 };
                let (l, dz) = bce_with_logit(logits[k], y);
                loss += l;
                let grow = &mut grad[k * p..(k + 1) * p];
                for (g, &xv) in grow.iter_mut().zip(x.iter()) {
                    *g += dz * xv as f64;
                }
                grad[CLASSES * p + k] += dz;
            }
            loss
        }
    }

    /// Validation accuracy evaluator over cached features.
    pub fn accuracy_eval<'a>(
        &'a self,
        features: &'a FeatureMatrix,
        indices: &'a [usize],
        targets: &'a [u8],
    ) -> impl Fn(&[f64]) -> f64 + Sync + 'a {
        move |params| {
            let hits: usize = indices
                .par_iter()
                .map(|&i| {
                    let pred = argmax(&self.logits(params, features.row(i)));
                    usize::from(pred == targets[i] as usize)
                })
                .sum();
            hits as f64 / indices.len().max(1) as f64
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::activation::extract_features;
    use crate::dataset::Image;
    use crate::patterns::sample_patterns;
    use rand::{Rng, SeedableRng};

    fn toy_bank() -> PatternBank {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let images: Vec<Image> = (0..4)
            .map(|_| Image::new(6, 6, (0..36).map(|_| rng.gen_range(0.0..=1.0)).collect()))
            .collect();
        sample_patterns(&images, 5, 3, 3, 2).unwrap()
    }

    #[test]
    fn zero_weights_score_one_half_everywhere() {
        let bank = toy_bank();
        let mut model = Geo1Model::new(bank, 3);
        model.params.iter_mut().for_each(|w| *w = 0.0);
        let scores = model.scores(&[0.3, 0.4, 0.5, 0.6, 0.7]);
        assert!(scores.iter().all(|&s| s == 0.5));
    }

    #[test]
    fn parameter_and_nonlinearity_counts() {
        let bank = toy_bank();
        let model = Geo1Model::new(bank, 3);
        assert_eq!(model.count_params(), 5 * 10 + 10);
        assert_eq!(model.count_nonlinearities(), 5 + 10);
    }

    #[test]
    fn scores_are_invariant_under_torus_shifts() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let image = Image::new(8, 8, (0..64).map(|_| rng.gen_range(0.0..=1.0)).collect());
        let bank = sample_patterns(std::slice::from_ref(&image), 6, 3, 3, 5).unwrap();
        let model = Geo1Model::new(bank.clone(), 6);
        let base = extract_features(std::slice::from_ref(&image), &bank);
        let base_scores = model.scores(base.row(0));
        let shifted_img = image.torus_shift(5, 3);
        let shifted = extract_features(std::slice::from_ref(&shifted_img), &bank);
        let shifted_scores = model.scores(shifted.row(0));
        for (a, b) in base_scores.iter().zip(shifted_scores.iter()) {
            assert!((a - b).abs() < 1e-6);
        }
        assert_eq!(model.predict(base.row(0)), model.predict(shifted.row(0)));
    }
}
