//! Pattern activation maps and the pooling operators built on them.

use rayon::prelude::*;

use crate::dataset::Image;
use crate::error::DataError;
use crate::patterns::PatternBank;

/// Torus padding of an image: rows and columns wrap so every window read in
/// the activation map is contiguous.
pub struct PaddedImage {
    data: Vec<f32>,
    height: usize,
    width: usize,
    pad_h: usize,
    pad_w: usize,
    stride: usize,
}

impl PaddedImage {
    /// Pads for patches up to `pw`×`ph` (odd dimensions).
    pub fn new(image: &Image, pw: usize, ph: usize) -> PaddedImage {
        let (h, w) = (image.height, image.width);
        let (pad_h, pad_w) = (ph / 2, pw / 2);
        let stride = w + 2 * pad_w;
        let mut data = vec![0.0f32; (h + 2 * pad_h) * stride];
        for r in 0..h + 2 * pad_h {
            let src_r = (r + h - pad_h) % h;
            for c in 0..stride {
                let src_c = (c + w - pad_w) % w;
                data[r * stride + c] = image.pixels[src_r * w + src_c];
            }
        }
        PaddedImage { data, height: h, width: w, pad_h, pad_w, stride }
    }

    fn window(&self, n: usize, m: usize, di: usize) -> &[f32] {
        let row = n + di;
        let start = row * self.stride + m;
        &self.data[start..start + 2 * self.pad_w + 1]
    }
}

/// Activation map from a pre-padded image.
pub fn pattern_activation_map_padded(padded: &PaddedImage, pattern: &[f32], pw: usize, ph: usize) -> Vec<f32> {
    debug_assert_eq!(pw / 2, padded.pad_w);
    debug_assert_eq!(ph / 2, padded.pad_h);
    let (h, w) = (padded.height, padded.width);
    let volume = (pw * ph) as f32;
    let mut out = vec![0.0f32; h * w];
    for n in 0..h {
        for m in 0..w {
            let mut acc = 0.0f32;
            for di in 0..ph {
                let window = padded.window(n, m, di);
                let prow = &pattern[di * pw..(di + 1) * pw];
                for (x, p) in window.iter().zip(prow.iter()) {
                    acc += (x - p).abs();
                }
            }
            out[n * w + m] = 1.0 - acc / volume;
        }
    }
    out
}

/// Per-position match score of a pattern against the image on the torus:
/// `1 - (sum of absolute window differences) / (patch area)`, one value per
/// offset, always in [0,1] and exactly 1 on a perfect window match.
pub fn pattern_activation_map(image: &Image, pattern: &[f32], pw: usize, ph: usize) -> Vec<f32> {
    pattern_activation_map_padded(&PaddedImage::new(image, pw, ph), pattern, pw, ph)
}

/// Global maximum of an activation map.
pub fn image_wide_maxpool(map: &[f32]) -> f32 {
    map.iter().copied().fold(f32::NEG_INFINITY, f32::max)
}

/// Keeps the map where it attains its global maximum (all ties) and zeroes it
/// elsewhere.
pub fn channel_wise_max(map: &[f32]) -> Vec<f32> {
    let max = image_wide_maxpool(map);
    map.iter().map(|&v| if v == max { v } else { 0.0 }).collect()
}

/// Sparse form of [`channel_wise_max`]: the (position, value) pairs of all
/// tied maxima.
pub fn channel_wise_max_sparse(map: &[f32]) -> Vec<(u32, f32)> {
    let max = image_wide_maxpool(map);
    map.iter()
        .enumerate()
        .filter(|&(_, &v)| v == max)
        .map(|(i, &v)| (i as u32, v))
        .collect()
}

/// Max-pooled pattern response without materializing the map: the global
/// maximum corresponds to the minimal window gap. Positions whose partial
/// gap already exceeds the running minimum stop early; the result equals the
/// full scan bit for bit, since the gap only grows within a window.
pub fn activation_max_padded(padded: &PaddedImage, pattern: &[f32], pw: usize, ph: usize) -> f32 {
    let (h, w) = (padded.height, padded.width);
    let volume = (pw * ph) as f32;
    let mut min_acc = f32::INFINITY;
    for n in 0..h {
        for m in 0..w {
            let mut acc = 0.0f32;
            for di in 0..ph {
                let window = padded.window(n, m, di);
                let prow = &pattern[di * pw..(di + 1) * pw];
                for (x, p) in window.iter().zip(prow.iter()) {
                    acc += (x - p).abs();
                }
                if acc > min_acc {
                    break;
                }
            }
            min_acc = min_acc.min(acc);
        }
    }
    1.0 - min_acc / volume
}

/// Max-pooled pattern response.
pub fn activation_max(image: &Image, pattern: &[f32], pw: usize, ph: usize) -> f32 {
    activation_max_padded(&PaddedImage::new(image, pw, ph), pattern, pw, ph)
}

/// Feature matrix of pooled pattern responses, images × patterns, row-major.
/// Rows are computed independently, so the result is bit-identical for any
/// thread count.
pub struct FeatureMatrix {
    pub data: Vec<f32>,
    pub rows: usize,
    pub cols: usize,
}

impl FeatureMatrix {
    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }
}

pub fn extract_features(images: &[Image], bank: &PatternBank) -> FeatureMatrix {
    let cols = bank.len();
    let data: Vec<f32> = images
        .par_iter()
        .flat_map_iter(|image| {
            let padded = PaddedImage::new(image, bank.patch_w, bank.patch_h);
            bank.patterns
                .iter()
                .map(|pattern| activation_max_padded(&padded, pattern, bank.patch_w, bank.patch_h))
                .collect::<Vec<f32>>()
        })
        .collect();
    FeatureMatrix { data, rows: images.len(), cols }
}

/// Sparse channel-wise-max caches for every image/pattern combination.
pub fn extract_cwm_sparse(images: &[Image], bank: &PatternBank) -> Vec<Vec<Vec<(u32, f32)>>> {
    images
        .par_iter()
        .map(|image| {
            let padded = PaddedImage::new(image, bank.patch_w, bank.patch_h);
            bank.patterns
                .iter()
                .map(|pattern| {
                    let map =
                        pattern_activation_map_padded(&padded, pattern, bank.patch_w, bank.patch_h);
                    channel_wise_max_sparse(&map)
                })
                .collect()
        })
        .collect()
}

/// Replaces each 2×2 block with its maximum; dimensions must be even.
pub fn downscale_2x2_max(image: &Image) -> Result<Image, DataError> {
    if image.height % 2 != 0 || image.width % 2 != 0 {
        return Err(DataError::Invalid(format!(
            "2x2 max downscale needs even dimensions, got {}x{}",
            image.height, image.width
        )));
    }
    let (h, w) = (image.height / 2, image.width / 2);
    let mut out = vec![0.0f32; h * w];
    for r in 0..h {
        for c in 0..w {
            out[r * w + c] = image
                .get(2 * r, 2 * c)
                .max(image.get(2 * r, 2 * c + 1))
                .max(image.get(2 * r + 1, 2 * c))
                .max(image.get(2 * r + 1, 2 * c + 1));
        }
    }
    Ok(Image { height: h, width: w, pixels: out })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_image(rng: &mut ChaCha8Rng, h: usize, w: usize) -> Image {
        Image::new(h, w, (0..h * w).map(|_| rng.gen_range(0.0..=1.0)).collect())
    }

    #[test]
    fn exact_window_match_scores_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let image = random_image(&mut rng, 6, 6);
        let pattern = crate::patterns::torus_crop(&image, 2, 3, 3, 3);
        let map = pattern_activation_map(&image, &pattern, 3, 3);
        assert_eq!(map[2 * 6 + 3], 1.0);
        assert!(map.iter().all(|&v| (0.0..=1.0).contains(&v)));
    }

    #[test]
    fn all_one_pattern_on_zero_image_scores_zero_everywhere() {
        let image = Image::constant(9, 9, 0.0);
        let pattern = vec![1.0f32; 81];
        let map = pattern_activation_map(&image, &pattern, 9, 9);
        assert!(map.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn one_by_one_pattern_reduces_to_pointwise_formula() {
        let image = Image::new(2, 2, vec![0.0, 1.0, 0.0, 1.0]);
        let map = pattern_activation_map(&image, &[1.0], 1, 1);
        // value at (n,m) = 1 - |x(n,m) - 1|
        assert_eq!(map, vec![0.0, 1.0, 0.0, 1.0]);
    }

    #[test]
    fn activation_commutes_with_torus_shifts_exhaustively_on_6x6() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let image = random_image(&mut rng, 6, 6);
        let pattern: Vec<f32> = (0..9).map(|_| rng.gen_range(0.0..=1.0)).collect();
        let base = pattern_activation_map(&image, &pattern, 3, 3);
        for dy in 0..6 {
            for dx in 0..6 {
                let shifted = pattern_activation_map(&image.torus_shift(dy, dx), &pattern, 3, 3);
                // map(shift(x)) = shift(map(x)), exactly.
                let expected = Image::new(6, 6, base.clone()).torus_shift(dy, dx);
                assert_eq!(shifted, expected.pixels, "shift ({dy},{dx})");
            }
        }
    }

    #[test]
    fn maxpool_and_cwm_on_constant_and_unique_max_maps() {
        let constant = vec![0.25f32; 12];
        assert_eq!(image_wide_maxpool(&constant), 0.25);
        assert_eq!(channel_wise_max(&constant), constant);

        let mut unique = vec![0.1f32; 20];
        unique[3 * 4 + 2] = 0.9; // row-major position in a 5x4 map
        assert_eq!(image_wide_maxpool(&unique), 0.9);
        let cwm = channel_wise_max(&unique);
        assert_eq!(cwm.iter().filter(|&&v| v != 0.0).count(), 1);
        assert_eq!(cwm[3 * 4 + 2], 0.9);
    }

    #[test]
    fn cwm_keeps_all_tied_maxima() {
        let mut map = vec![0.2f32; 9];
        map[1] = 0.7;
        map[6] = 0.7;
        let cwm = channel_wise_max(&map);
        assert_eq!(cwm[1], 0.7);
        assert_eq!(cwm[6], 0.7);
        assert_eq!(cwm.iter().filter(|&&v| v != 0.0).count(), 2);
        let sparse = channel_wise_max_sparse(&map);
        assert_eq!(sparse, vec![(1, 0.7), (6, 0.7)]);
    }

    #[test]
    fn features_match_the_naive_loop_and_any_thread_count() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let images: Vec<Image> = (0..20).map(|_| random_image(&mut rng, 8, 8)).collect();
        let bank = crate::patterns::sample_patterns(&images, 7, 3, 3, 5).unwrap();

        let features = extract_features(&images, &bank);
        // Oracle: unbatched per-image loop.
        for (i, image) in images.iter().enumerate() {
            for (j, pattern) in bank.patterns.iter().enumerate() {
                let map = pattern_activation_map(image, pattern, 3, 3);
                let expected = map.iter().cloned().fold(f32::NEG_INFINITY, f32::max);
                assert_eq!(features.row(i)[j], expected);
            }
        }

        let single = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let of_one = single.install(|| extract_features(&images, &bank));
        assert_eq!(features.data, of_one.data);
    }

    #[test]
    fn single_self_pattern_feature_is_exactly_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let image = random_image(&mut rng, 5, 5);
        let bank = PatternBank {
            patterns: vec![crate::patterns::torus_crop(&image, 2, 2, 3, 3)],
            patch_w: 3,
            patch_h: 3,
            provenance: vec![(0, 2, 2)],
            seed: 0,
        };
        let features = extract_features(std::slice::from_ref(&image), &bank);
        assert_eq!(features.data, vec![1.0]);
    }

    #[test]
    fn downscale_matches_block_loop_oracle() {
        let constant = Image::constant(4, 4, 0.3);
        assert_eq!(downscale_2x2_max(&constant).unwrap().pixels, vec![0.3; 4]);

        let tiny = Image::new(2, 2, vec![0.0, 1.0, 0.0, 0.0]);
        assert_eq!(downscale_2x2_max(&tiny).unwrap().pixels, vec![1.0]);

        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let image = random_image(&mut rng, 28, 28);
        let down = downscale_2x2_max(&image).unwrap();
        for r in 0..14 {
            for c in 0..14 {
                let mut m = f32::NEG_INFINITY;
                for dr in 0..2 {
                    for dc in 0..2 {
                        m = m.max(image.get(2 * r + dr, 2 * c + dc));
                    }
                }
                assert_eq!(down.get(r, c), m);
            }
        }

        assert!(downscale_2x2_max(&Image::constant(3, 4, 0.0)).is_err());
    }
}
