//! Multilayer perceptron baselines: flat pixels through zero or one ReLU
//! hidden layer into a sigmoid head.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::dataset::Image;
use crate::models::{argmax, bce_with_logit, init_uniform, sigmoid, CLASSES};

#[derive(Debug, Clone)]
pub struct MlpModel {
    pub input_dim: usize,
    pub hidden: Option<usize>,
    /// No hidden layer: W [10][input], b [10].
    /// Hidden k: W1 [k][input], b1 [k], W2 [10][k], b2 [10].
    pub params: Vec<f32>,
}

impl MlpModel {
    pub fn new(input_dim: usize, hidden: Option<usize>, seed: u64) -> MlpModel {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let params = match hidden {
            None => {
                let mut p = vec![0.0f32; CLASSES * input_dim + CLASSES];
                init_uniform(&mut rng, &mut p, input_dim);
                p
            }
            Some(k) => {
                let mut p = vec![0.0f32; k * input_dim + k + CLASSES * k + CLASSES];
                let split = k * input_dim + k;
                init_uniform(&mut rng, &mut p[..split], input_dim);
                init_uniform(&mut rng, &mut p[split..], k);
                p
            }
        };
        MlpModel { input_dim, hidden, params }
    }

    pub fn count_params(&self) -> usize {
        self.params.len()
    }

    /// Hidden ReLUs plus the head sigmoids.
    pub fn count_nonlinearities(&self) -> usize {
        self.hidden.unwrap_or(0) + CLASSES
    }

    pub fn logits(&self, params: &[f64], pixels: &[f32]) -> [f64; CLASSES] {
        let d = self.input_dim;
        match self.hidden {
            None => {
                let mut out = [0.0f64; CLASSES];
                for (k, slot) in out.iter_mut().enumerate() {
                    let row = &params[k * d..(k + 1) * d];
                    let mut z = params[CLASSES * d + k];
                    for (w, &x) in row.iter().zip(pixels.iter()) {
                        z += w * x as f64;
                    }
                    *slot = z;
                }
                out
            }
            Some(h) => {
                let (w1, rest) = params.split_at(h * d);
                let (b1, rest) = rest.split_at(h);
                let (w2, b2) = rest.split_at(CLASSES * h);
                let mut hidden = vec![0.0f64; h];
                for (j, slot) in hidden.iter_mut().enumerate() {
                    let row = &w1[j * d..(j + 1) * d];
                    let mut z = b1[j];
                    for (w, &x) in row.iter().zip(pixels.iter()) {
                        z += w * x as f64;
                    }
                    *slot = z.max(0.0);
                }
                let mut out = [0.0f64; CLASSES];
                for (k, slot) in out.iter_mut().enumerate() {
                    let row = &w2[k * h..(k + 1) * h];
                    let mut z = b2[k];
                    for (w, &a) in row.iter().zip(hidden.iter()) {
                        z += w * a;
                    }
                    *slot = z;
                }
                out
            }
        }
    }

    pub fn scores(&self, pixels: &[f32]) -> [f64; CLASSES] {
        let params: Vec<f64> = self.params.iter().map(|&p| p as f64).collect();
        let mut z = self.logits(&params, pixels);
        for v in z.iter_mut() {
            *v = sigmoid(*v);
        }
        z
    }

    pub fn predict(&self, pixels: &[f32]) -> usize {
        let params: Vec<f64> = self.params.iter().map(|&p| p as f64).collect();
        argmax(&self.logits(&params, pixels))
    }

    pub fn loss_grad<'a>(
        &'a self,
        images: &'a [Image],
        targets: &'a [u8],
    ) -> impl Fn(&[f64], usize, &mut [f64]) -> f64 + Sync + 'a {
        let d = self.input_dim;
        move |params, example, grad| {
            let pixels = &images[example].pixels;
            let target = targets[example] as usize;
            match self.hidden {
                None => {
                    let logits = self.logits(params, pixels);
                    let mut loss = 0.0;
                    for k in 0..CLASSES {
                        let y = if k == target { 1.0 } else { 0.0 };
                        let (l, dz) = bce_with_logit(logits[k], y);
                        loss += l;
                        let row = &mut grad[k * d..(k + 1) * d];
                        for (g, &x) in row.iter_mut().zip(pixels.iter()) {
                            *g += dz * x as f64;
                        }
                        grad[CLASSES * d + k] += dz;
                    }
                    loss
                }
                Some(h) => {
                    let (w1, rest) = params.split_at(h * d);
                    let (b1, rest) = rest.split_at(h);
                    let (w2, b2) = rest.split_at(CLASSES * h);
                    // Forward, keeping hidden pre-activations.
                    let mut hid_pre = vec![0.0f64; h];
                    let mut hid = vec![0.0f64; h];
                    for j in 0..h {
                        let row = &w1[j * d..(j + 1) * d];
                        let mut z = b1[j];
                        for (w, &x) in row.iter().zip(pixels.iter()) {
                            z += w * x as f64;
                        }
                        hid_pre[j] = z;
                        hid[j] = z.max(0.0);
                    }
                    let mut loss = 0.0;
                    let mut dhid = vec![0.0f64; h];
                    for k in 0..CLASSES {
                        let row = &w2[k * h..(k + 1) * h];
                        let mut z = b2[k];
                        for (w, &a) in row.iter().zip(hid.iter()) {
                            z += w * a;
                        }
                        let y = if k == target { 1.0 } else { 0.0 };
                        let (l, dz) = bce_with_logit(z, y);
                        loss += l;
                        let off = h * d + h;
                        let g2 = &mut grad[off + k * h..off + (k + 1) * h];
                        for ((g, &a), (dh, &w)) in
                            g2.iter_mut().zip(hid.iter()).zip(dhid.iter_mut().zip(row.iter()))
                        {
                            *g += dz * a;
                            *dh += dz * w;
                        }
                        grad[off + CLASSES * h + k] += dz;
                    }
                    for j in 0..h {
                        if hid_pre[j] <= 0.0 {
                            continue;
                        }
                        let dz = dhid[j];
                        let row = &mut grad[j * d..(j + 1) * d];
                        for (g, &x) in row.iter_mut().zip(pixels.iter()) {
                            *g += dz * x as f64;
                        }
                        grad[h * d + j] += dz;
                    }
                    loss
                }
            }
        }
    }

    pub fn accuracy_eval<'a>(
        &'a self,
        images: &'a [Image],
        indices: &'a [usize],
        targets: &'a [u8],
    ) -> impl Fn(&[f64]) -> f64 + Sync + 'a {
        move |params| {
            let hits: usize = indices
                .par_iter()
                .map(|&i| {
                    let pred = argmax(&self.logits(params, &images[i].pixels));
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

    #[test]
    fn parameter_counts_match_the_layer_arithmetic() {
        assert_eq!(MlpModel::new(784, None, 0).count_params(), 7850);
        assert_eq!(MlpModel::new(784, Some(5), 0).count_params(), 3985);
        assert_eq!(MlpModel::new(784, Some(7), 0).count_params(), 5575);
        assert_eq!(MlpModel::new(784, Some(20), 0).count_params(), 15910);
        assert_eq!(MlpModel::new(784, Some(40), 0).count_params(), 31810);
        assert_eq!(MlpModel::new(784, Some(4), 0).count_params(), 3190);
        // Rescaled 14x14 variants.
        assert_eq!(MlpModel::new(196, None, 0).count_params(), 1970);
        assert_eq!(MlpModel::new(196, Some(5), 0).count_params(), 1045);
        assert_eq!(MlpModel::new(196, Some(7), 0).count_params(), 1459);
        assert_eq!(MlpModel::new(196, Some(40), 0).count_params(), 8290);
    }

    #[test]
    fn nonlinearity_counts() {
        assert_eq!(MlpModel::new(784, None, 0).count_nonlinearities(), 10);
        assert_eq!(MlpModel::new(784, Some(40), 0).count_nonlinearities(), 50);
        assert_eq!(MlpModel::new(784, Some(5), 0).count_nonlinearities(), 15);
    }

    #[test]
    fn zero_params_give_one_half_scores() {
        let mut m = MlpModel::new(16, None, 1);
        m.params.iter_mut().for_each(|w| *w = 0.0);
        let scores = m.scores(&vec![0.5f32; 16]);
        assert!(scores.iter().all(|&s| s == 0.5));
    }
}
