//! Pattern banks: square patches cut from training images, with centers drawn
//! proportionally to pixel intensity and torus-wrapped cropping.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dataset::Image;
use crate::error::DataError;

/// A bank of fixed square patches used as feature detectors.
#[derive(Debug, Clone)]
pub struct PatternBank {
    /// Patches, each `patch_h * patch_w`, values in [0,1].
    pub patterns: Vec<Vec<f32>>,
    pub patch_w: usize,
    pub patch_h: usize,
    /// (source image index, center row, center col) per pattern.
    pub provenance: Vec<(usize, usize, usize)>,
    pub seed: u64,
}

impl PatternBank {
    pub fn len(&self) -> usize {
        self.patterns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
    }
}

/// Torus-wrapped crop of `w`×`h` centered at (cy, cx); half-widths are
/// floor(w/2) and floor(h/2) on each side.
pub fn torus_crop(image: &Image, cy: usize, cx: usize, w: usize, h: usize) -> Vec<f32> {
    let half_w = w / 2;
    let half_h = h / 2;
    let mut out = Vec::with_capacity(w * h);
    for di in 0..h {
        let row = (cy + image.height + di - half_h) % image.height;
        for dj in 0..w {
            let col = (cx + image.width + dj - half_w) % image.width;
            out.push(image.get(row, col));
        }
    }
    out
}

/// Draws a pixel position with probability proportional to intensity.
/// Returns None for an all-zero image.
fn sample_center(rng: &mut ChaCha8Rng, image: &Image) -> Option<(usize, usize)> {
    let total: f64 = image.pixels.iter().map(|&p| p as f64).sum();
    if total <= 0.0 {
        return None;
    }
    let mut u = rng.gen_range(0.0..total);
    for (i, &p) in image.pixels.iter().enumerate() {
        u -= p as f64;
        if u < 0.0 {
            return Some((i / image.width, i % image.width));
        }
    }
    // Guard against accumulated rounding at the very end of the walk.
    let last = image.pixels.iter().rposition(|&p| p > 0.0)?;
    Some((last / image.width, last % image.width))
}

/// Samples `count` patterns of odd size `w`×`h` from the given images.
/// Source images are chosen uniformly; all-zero images are resampled.
pub fn sample_patterns(
    images: &[Image],
    count: usize,
    w: usize,
    h: usize,
    seed: u64,
) -> Result<PatternBank, DataError> {
    if count < 1 {
        return Err(DataError::Invalid("pattern count must be at least 1".into()));
    }
    if w % 2 == 0 || h % 2 == 0 {
        return Err(DataError::Invalid(format!("patch dimensions must be odd, got {w}x{h}")));
    }
    if images.is_empty() {
        return Err(DataError::Invalid("no source images".into()));
    }
    if images.iter().any(|im| w > im.width || h > im.height) {
        return Err(DataError::Invalid("patch larger than source image".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut patterns = Vec::with_capacity(count);
    let mut provenance = Vec::with_capacity(count);
    for _ in 0..count {
        let mut attempts = 0;
        let (src, cy, cx) = loop {
            let src = rng.gen_range(0..images.len());
            if let Some((cy, cx)) = sample_center(&mut rng, &images[src]) {
                break (src, cy, cx);
            }
            attempts += 1;
            if attempts > 1000 {
                return Err(DataError::Invalid("could not find a nonzero source image".into()));
            }
        };
        patterns.push(torus_crop(&images[src], cy, cx, w, h));
        provenance.push((src, cy, cx));
    }
    Ok(PatternBank { patterns, patch_w: w, patch_h: h, provenance, seed })
}
