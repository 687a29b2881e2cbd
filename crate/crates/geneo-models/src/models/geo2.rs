//! Position-sensitive pattern classifier: channel-wise-max activations mixed
//! per position through a shared-bias sigmoid, then a sigmoid linear head
//! over the mixed map.
//!
//! `s[n,m] = sigmoid(sum_i w_i * CWM_i[n,m] + b)` with one shared scalar
//! bias, `scores_k = sigmoid(sum_{n,m} W[k][n,m] * s[n,m] + hb_k)`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::models::{argmax, bce_with_logit, init_uniform, sigmoid, CLASSES};
use crate::patterns::PatternBank;

/// Sparse channel-wise-max cache for one example: per pattern, the
/// (position, value) pairs of its tied maxima.
pub type CwmExample = Vec<Vec<(u32, f32)>>;

#[derive(Debug, Clone)]
pub struct Geo2Model {
    pub bank: PatternBank,
    /// Positions in the mixed map (image height × width).
    pub map_size: usize,
    /// Layout: w [patterns], b [1], head W row-major [class][position],
    /// head bias [class].
    pub params: Vec<f32>,
}

impl Geo2Model {
    pub fn new(bank: PatternBank, map_size: usize, seed: u64) -> Geo2Model {
        let p = bank.len();
        let mut params = vec![0.0f32; p + 1 + CLASSES * map_size + CLASSES];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        init_uniform(&mut rng, &mut params[..p + 1], p);
        init_uniform(&mut rng, &mut params[p + 1..], map_size);
        Geo2Model { bank, map_size, params }
    }

    pub fn patterns(&self) -> usize {
        self.bank.len()
    }

    pub fn count_params(&self) -> usize {
        self.params.len()
    }

    /// Two nonlinearities per pattern channel (the max and the tie mask),
    /// the shared mixing sigmoid, and the head sigmoids.
    pub fn count_nonlinearities(&self) -> usize {
        2 * self.patterns() + 1 + CLASSES
    }

    fn mixed_map(&self, params: &[f64], cwm: &CwmExample, out: &mut [f64]) {
        let p = self.patterns();
        let b = params[p];
        out.fill(b);
        for (i, entries) in cwm.iter().enumerate() {
            let w = params[i];
            for &(pos, val) in entries {
                out[pos as usize] += w * val as f64;
            }
        }
        for v in out.iter_mut() {
            *v = sigmoid(*v);
        }
    }

    pub fn logits(&self, params: &[f64], cwm: &CwmExample) -> [f64; CLASSES] {
        let p = self.patterns();
        let head = &params[p + 1..];
        let mut s = vec![0.0f64; self.map_size];
        self.mixed_map(params, cwm, &mut s);
        let mut out = [0.0f64; CLASSES];
        for (k, slot) in out.iter_mut().enumerate() {
            let row = &head[k * self.map_size..(k + 1) * self.map_size];
            let mut z = head[CLASSES * self.map_size + k];
            for (w, &x) in row.iter().zip(s.iter()) {
                z += w * x;
            }
            *slot = z;
        }
        out
    }

    pub fn scores(&self, cwm: &CwmExample) -> [f64; CLASSES] {
        let params: Vec<f64> = self.params.iter().map(|&p| p as f64).collect();
        let mut z = self.logits(&params, cwm);
        for v in z.iter_mut() {
            *v = sigmoid(*v);
        }
        z
    }

    pub fn predict(&self, cwm: &CwmExample) -> usize {
        let params: Vec<f64> = self.params.iter().map(|&p| p as f64).collect();
        argmax(&self.logits(&params, cwm))
    }

    pub fn loss_grad<'a>(
        &'a self,
        caches: &'a [CwmExample],
        targets: &'a [u8],
    ) -> impl Fn(&[f64], usize, &mut [f64]) -> f64 + Sync + 'a {
        let p = self.patterns();
        let map_size = self.map_size;
        move |params, example, grad| {
            let cwm = &caches[example];
            let target = targets[example] as usize;
            let head = &params[p + 1..];

            let mut s = vec![0.0f64; map_size];
            self.mixed_map(params, cwm, &mut s);

            let mut loss = 0.0;
            let mut ds = vec![0.0f64; map_size];
            for k in 0..CLASSES {
                let row = &head[k * map_size..(k + 1) * map_size];
                let mut z = head[CLASSES * map_size + k];
                for (w, &x) in row.iter().zip(s.iter()) {
                    z += w * x;
                }
                let y = if k == target { 1.0 } else { 0.0 };
                let (l, dz) = bce_with_logit(z, y);
                loss += l;
                let g_head = &mut grad[p + 1 + k * map_size..p + 1 + (k + 1) * map_size];
                for ((g, &x), (d, &w)) in
                    g_head.iter_mut().zip(s.iter()).zip(ds.iter_mut().zip(row.iter()))
                {
                    *g += dz * x;
                    *d += dz * w;
                }
                grad[p + 1 + CLASSES * map_size + k] += dz;
            }
            // Through the mixing sigmoid: dz_map = ds * s * (1 - s).
            for (d, &sv) in ds.iter_mut().zip(s.iter()) {
                *d *= sv * (1.0 - sv);
            }
            for (i, entries) in cwm.iter().enumerate() {
                let mut acc = 0.0;
                for &(pos, val) in entries {
                    acc += ds[pos as usize] * val as f64;
                }
                grad[i] += acc;
            }
            grad[p] += ds.iter().sum::<f64>();
            loss
        }
    }

    pub fn accuracy_eval<'a>(
        &'a self,
        caches: &'a [CwmExample],
        indices: &'a [usize],
        targets: &'a [u8],
    ) -> impl Fn(&[f64]) -> f64 + Sync + 'a {
        move |params| {
            let hits: usize = indices
                .par_iter()
                .map(|&i| {
                    let pred = argmax(&self.logits(params, &caches[i]));
                    usize::from(pred == targets[i] as usize)
                })
                .sum();
            hits as f64 / indices.len().max(1) as f64
        }
    }
}
