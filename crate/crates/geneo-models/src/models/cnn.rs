//! Small two-stage CNN: two (3×3 same-padding convolution, ReLU, 2×2
//! max-pool) stages and a linear classifier head trained with softmax
//! cross-entropy. The head bias is optional so parameter budgets can be met
//! exactly.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::dataset::Image;
use crate::models::{argmax, init_uniform, softmax_ce, CLASSES};

#[derive(Debug, Clone)]
pub struct CnnModel {
    pub height: usize,
    pub width: usize,
    pub channels1: usize,
    pub channels2: usize,
    pub head_bias: bool,
    /// Layout: conv1 w [c1][1][3][3], conv1 b [c1],
    ///         conv2 w [c2][c1][3][3], conv2 b [c2],
    ///         head w [10][c2*(h/4)*(w/4)], head b [10] (optional).
    pub params: Vec<f32>,
}

impl CnnModel {
    pub fn new(
        height: usize,
        width: usize,
        channels1: usize,
        channels2: usize,
        head_bias: bool,
        seed: u64,
    ) -> CnnModel {
        assert!(height % 4 == 0 && width % 4 == 0, "two pooling stages need dims divisible by 4");
        let head_in = channels2 * (height / 4) * (width / 4);
        let total = Self::param_count(height, width, channels1, channels2, head_bias);
        let mut params = vec![0.0f32; total];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c1_end = channels1 * 9 + channels1;
        let c2_end = c1_end + channels2 * channels1 * 9 + channels2;
        init_uniform(&mut rng, &mut params[..c1_end], 9);
        init_uniform(&mut rng, &mut params[c1_end..c2_end], channels1 * 9);
        init_uniform(&mut rng, &mut params[c2_end..], head_in);
        CnnModel { height, width, channels1, channels2, head_bias, params }
    }

    pub fn param_count(h: usize, w: usize, c1: usize, c2: usize, head_bias: bool) -> usize {
        let head_in = c2 * (h / 4) * (w / 4);
        c1 * 9 + c1 + c2 * c1 * 9 + c2 + CLASSES * head_in + if head_bias { CLASSES } else { 0 }
    }

    pub fn count_params(&self) -> usize {
        self.params.len()
    }

    /// Scalar nonlinearity evaluations per forward pass: ReLUs after each
    /// convolution, one max per pooled output cell, and the softmax outputs.
    pub fn count_nonlinearities(&self) -> usize {
        let (h, w) = (self.height, self.width);
        let relu = self.channels1 * h * w + self.channels2 * (h / 2) * (w / 2);
        let pools = self.channels1 * (h / 2) * (w / 2) + self.channels2 * (h / 4) * (w / 4);
        relu + pools + CLASSES
    }

    fn offsets(&self) -> (usize, usize, usize, usize) {
        let c1w = self.channels1 * 9;
        let c1b = c1w + self.channels1;
        let c2w = c1b + self.channels2 * self.channels1 * 9;
        let c2b = c2w + self.channels2;
        (c1w, c1b, c2w, c2b)
    }

    pub fn logits(&self, params: &[f64], image: &Image) -> [f64; CLASSES] {
        self.forward(params, image).logits
    }

    pub fn predict(&self, image: &Image) -> usize {
        let params: Vec<f64> = self.params.iter().map(|&p| p as f64).collect();
        argmax(&self.logits(&params, image))
    }

    pub fn scores(&self, image: &Image) -> [f64; CLASSES] {
        let params: Vec<f64> = self.params.iter().map(|&p| p as f64).collect();
        let logits = self.logits(&params, image);
        let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut out = [0.0f64; CLASSES];
        let mut sum = 0.0;
        for (o, &z) in out.iter_mut().zip(logits.iter()) {
            *o = (z - max).exp();
            sum += *o;
        }
        for o in out.iter_mut() {
            *o /= sum;
        }
        out
    }

    fn forward(&self, params: &[f64], image: &Image) -> ForwardPass {
        let (h, w) = (self.height, self.width);
        let (c1, c2) = (self.channels1, self.channels2);
        let (h2, w2, h4, w4) = (h / 2, w / 2, h / 4, w / 4);
        let (o_c1w, o_c1b, o_c2w, o_c2b) = self.offsets();

        // Stage 1: conv over the single input channel, ReLU.
        let mut act1 = vec![0.0f64; c1 * h * w];
        for o in 0..c1 {
            let kernel = &params[o * 9..(o + 1) * 9];
            let bias = params[o_c1w + o];
            let plane = &mut act1[o * h * w..(o + 1) * h * w];
            for y in 0..h {
                for x in 0..w {
                    let mut acc = bias;
                    for ky in 0..3 {
                        let iy = y + ky;
                        if iy < 1 || iy > h {
                            continue;
                        }
                        let iy = iy - 1;
                        for kx in 0..3 {
                            let ix = x + kx;
                            if ix < 1 || ix > w {
                                continue;
                            }
                            acc += kernel[ky * 3 + kx] * image.pixels[iy * w + (ix - 1)] as f64;
                        }
                    }
                    plane[y * w + x] = acc.max(0.0);
                }
            }
        }
        // Pool 1 with argmax bookkeeping.
        let (pool1, arg1) = maxpool2(&act1, c1, h, w);
        // Stage 2 convolution over c1 channels, ReLU.
        let mut act2 = vec![0.0f64; c2 * h2 * w2];
        for o in 0..c2 {
            let bias = params[o_c2w + o];
            let plane = &mut act2[o * h2 * w2..(o + 1) * h2 * w2];
            for y in 0..h2 {
                for x in 0..w2 {
                    let mut acc = bias;
                    for i in 0..c1 {
                        let kernel = &params[o_c1b + (o * c1 + i) * 9..o_c1b + (o * c1 + i + 1) * 9];
                        let input = &pool1[i * h2 * w2..(i + 1) * h2 * w2];
                        for ky in 0..3 {
                            let iy = y + ky;
                            if iy < 1 || iy > h2 {
                                continue;
                            }
                            let iy = iy - 1;
                            for kx in 0..3 {
                                let ix = x + kx;
                                if ix < 1 || ix > w2 {
                                    continue;
                                }
                                acc += kernel[ky * 3 + kx] * input[iy * w2 + (ix - 1)];
                            }
                        }
                    }
                    plane[y * w2 + x] = acc.max(0.0);
                }
            }
        }
        let (pool2, arg2) = maxpool2(&act2, c2, h2, w2);

        // Linear head.
        let head_in = c2 * h4 * w4;
        let head = &params[o_c2b..];
        let mut logits = [0.0f64; CLASSES];
        for (k, slot) in logits.iter_mut().enumerate() {
            let row = &head[k * head_in..(k + 1) * head_in];
            let mut z = if self.head_bias { head[CLASSES * head_in + k] } else { 0.0 };
            for (wv, &x) in row.iter().zip(pool2.iter()) {
                z += wv * x;
            }
            *slot = z;
        }
        ForwardPass { act1, pool1, arg1, act2, pool2, arg2, logits }
    }

    pub fn loss_grad<'a>(
        &'a self,
        images: &'a [Image],
        targets: &'a [u8],
    ) -> impl Fn(&[f64], usize, &mut [f64]) -> f64 + Sync + 'a {
        move |params, example, grad| {
            let image = &images[example];
            let target = targets[example] as usize;
            let (h, w) = (self.height, self.width);
            let (c1, c2) = (self.channels1, self.channels2);
            let (h2, w2, h4, w4) = (h / 2, w / 2, h / 4, w / 4);
            let (o_c1w, o_c1b, o_c2w, o_c2b) = self.offsets();
            let head_in = c2 * h4 * w4;

            let pass = self.forward(params, image);
            let mut dlogits = [0.0f64; CLASSES];
            let loss = softmax_ce(&pass.logits, target, &mut dlogits);

            // Head gradients and gradient into pool2.
            let mut dpool2 = vec![0.0f64; head_in];
            for k in 0..CLASSES {
                let dz = dlogits[k];
                let row = &params[o_c2b + k * head_in..o_c2b + (k + 1) * head_in];
                let grow = &mut grad[o_c2b + k * head_in..o_c2b + (k + 1) * head_in];
                for ((g, &x), (dp, &wv)) in grow
                    .iter_mut()
                    .zip(pass.pool2.iter())
                    .zip(dpool2.iter_mut().zip(row.iter()))
                {
                    *g += dz * x;
                    *dp += dz * wv;
                }
                if self.head_bias {
                    grad[o_c2b + CLASSES * head_in + k] += dz;
                }
            }

            // Unpool into stage-2 activations, gate by ReLU.
            let mut dact2 = vec![0.0f64; c2 * h2 * w2];
            for (cell, &src) in pass.arg2.iter().enumerate() {
                dact2[src] += dpool2[cell];
            }
            for (d, &a) in dact2.iter_mut().zip(pass.act2.iter()) {
                if a <= 0.0 {
                    *d = 0.0;
                }
            }

            // Conv2 gradients and gradient into pool1.
            let mut dpool1 = vec![0.0f64; c1 * h2 * w2];
            for o in 0..c2 {
                let dplane = &dact2[o * h2 * w2..(o + 1) * h2 * w2];
                let mut db = 0.0;
                for y in 0..h2 {
                    for x in 0..w2 {
                        let dz = dplane[y * w2 + x];
                        if dz == 0.0 {
                            continue;
                        }
                        db += dz;
                        for i in 0..c1 {
                            let base = o_c1b + (o * c1 + i) * 9;
                            let input = &pass.pool1[i * h2 * w2..(i + 1) * h2 * w2];
                            let dinput = &mut dpool1[i * h2 * w2..(i + 1) * h2 * w2];
                            for ky in 0..3 {
                                let iy = y + ky;
                                if iy < 1 || iy > h2 {
                                    continue;
                                }
                                let iy = iy - 1;
                                for kx in 0..3 {
                                    let ix = x + kx;
                                    if ix < 1 || ix > w2 {
                                        continue;
                                    }
                                    let ix = ix - 1;
                                    grad[base + ky * 3 + kx] += dz * input[iy * w2 + ix];
                                    dinput[iy * w2 + ix] += dz * params[base + ky * 3 + kx];
                                }
                            }
                        }
                    }
                }
                grad[o_c2w + o] += db;
            }

            // Unpool into stage-1 activations, gate by ReLU.
            let mut dact1 = vec![0.0f64; c1 * h * w];
            for (cell, &src) in pass.arg1.iter().enumerate() {
                dact1[src] += dpool1[cell];
            }
            for (d, &a) in dact1.iter_mut().zip(pass.act1.iter()) {
                if a <= 0.0 {
                    *d = 0.0;
                }
            }

            // Conv1 gradients (input gradient not needed).
            for o in 0..c1 {
                let dplane = &dact1[o * h * w..(o + 1) * h * w];
                let mut db = 0.0;
                for y in 0..h {
                    for x in 0..w {
                        let dz = dplane[y * w + x];
                        if dz == 0.0 {
                            continue;
                        }
                        db += dz;
                        for ky in 0..3 {
                            let iy = y + ky;
                            if iy < 1 || iy > h {
                                continue;
                            }
                            let iy = iy - 1;
                            for kx in 0..3 {
                                let ix = x + kx;
                                if ix < 1 || ix > w {
                                    continue;
                                }
                                grad[o * 9 + ky * 3 + kx] +=
                                    dz * image.pixels[iy * w + (ix - 1)] as f64;
                            }
                        }
                    }
                }
                grad[o_c1w + o] += db;
            }
            loss
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
                    let pred = argmax(&self.logits(params, &images[i]));
                    usize::from(pred == targets[i] as usize)
                })
                .sum();
            hits as f64 / indices.len().max(1) as f64
        }
    }
}

struct ForwardPass {
    act1: Vec<f64>,
    pool1: Vec<f64>,
    arg1: Vec<usize>,
    act2: Vec<f64>,
    pool2: Vec<f64>,
    arg2: Vec<usize>,
    logits: [f64; CLASSES],
}

/// 2×2 max pooling with argmax indices into the input layout. Ties resolve
/// to the first cell in scan order, deterministically.
fn maxpool2(input: &[f64], channels: usize, h: usize, w: usize) -> (Vec<f64>, Vec<usize>) {
    let (oh, ow) = (h / 2, w / 2);
    let mut out = vec![0.0f64; channels * oh * ow];
    let mut arg = vec![0usize; channels * oh * ow];
    for c in 0..channels {
        let plane = &input[c * h * w..(c + 1) * h * w];
        for y in 0..oh {
            for x in 0..ow {
                let mut best = f64::NEG_INFINITY;
                let mut best_idx = 0usize;
                for dy in 0..2 {
                    for dx in 0..2 {
                        let idx = (2 * y + dy) * w + 2 * x + dx;
                        if plane[idx] > best {
                            best = plane[idx];
                            best_idx = idx;
                        }
                    }
                }
                out[c * oh * ow + y * ow + x] = best;
                arg[c * oh * ow + y * ow + x] = c * h * w + best_idx;
            }
        }
    }
    (out, arg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_configuration_hits_the_published_parameter_count() {
        assert_eq!(CnnModel::param_count(28, 28, 21, 335, false), 228_010);
        let model = CnnModel::new(28, 28, 21, 335, false, 0);
        assert_eq!(model.count_params(), 228_010);
    }

    #[test]
    fn desk_configuration_counts() {
        let model = CnnModel::new(28, 28, 16, 32, true, 0);
        // 160 + 4640 + 15680 + 10
        assert_eq!(model.count_params(), 20_490);
        assert!(model.count_nonlinearities() > 0);
    }

    #[test]
    fn maxpool_tracks_argmax() {
        let input = vec![
            1.0, 2.0, 0.0, 0.0, //
            3.0, 0.0, 0.0, 4.0,
        ];
        let (out, arg) = maxpool2(&input, 1, 2, 4);
        assert_eq!(out, vec![3.0, 4.0]);
        assert_eq!(arg, vec![4, 7]);
    }

    #[test]
    fn degenerate_zero_image_scores_uniformly_with_zero_params() {
        let mut model = CnnModel::new(4, 4, 2, 3, true, 1);
        model.params.iter_mut().for_each(|p| *p = 0.0);
        let scores = model.scores(&Image::constant(4, 4, 0.0));
        for s in scores {
            assert!((s - 0.1).abs() < 1e-12);
        }
    }
}
