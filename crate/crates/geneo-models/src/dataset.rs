//! Grayscale image datasets: IDX loading and stratified splitting.

use std::io::Read;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::DataError;

pub const CLASSES: usize = 10;

const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
const IDX_LABELS_MAGIC: u32 = 0x0000_0801;

/// A grayscale image, entries in [0,1], row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    pub height: usize,
    pub width: usize,
    pub pixels: Vec<f32>,
}

impl Image {
    pub fn new(height: usize, width: usize, pixels: Vec<f32>) -> Image {
        assert_eq!(pixels.len(), height * width);
        Image { height, width, pixels }
    }

    pub fn constant(height: usize, width: usize, v: f32) -> Image {
        Image { height, width, pixels: vec![v; height * width] }
    }

    pub fn get(&self, row: usize, col: usize) -> f32 {
        self.pixels[row * self.width + col]
    }

    /// Cyclic shift moving content down by `dy` and right by `dx`.
    pub fn torus_shift(&self, dy: usize, dx: usize) -> Image {
        let (h, w) = (self.height, self.width);
        let mut out = vec![0.0f32; h * w];
        for r in 0..h {
            let src_r = (r + h - dy % h) % h;
            for c in 0..w {
                let src_c = (c + w - dx % w) % w;
                out[r * w + c] = self.pixels[src_r * w + src_c];
            }
        }
        Image { height: h, width: w, pixels: out }
    }
}

/// Which split an example belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Val,
    Test,
}

/// Images with labels and split tags.
#[derive(Debug, Clone)]
pub struct ImageDataset {
    pub images: Vec<Image>,
    pub labels: Vec<u8>,
    pub split: Vec<Split>,
}

impl ImageDataset {
    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn indices_of(&self, split: Split) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.split[i] == split).collect()
    }
}

fn read_u32_be(reader: &mut impl Read) -> Result<u32, DataError> {
    let mut buf = [0u8; 4];
    reader.read_exact(&mut buf)?;
    Ok(u32::from_be_bytes(buf))
}

/// Loads an IDX image/label file pair. Pixel bytes are rescaled to [0,1] by
/// dividing by 255.
pub fn load_mnist(
    images_path: &Path,
    labels_path: &Path,
) -> Result<(Vec<Image>, Vec<u8>), DataError> {
    let mut img_file = std::io::BufReader::new(std::fs::File::open(images_path)?);
    let magic = read_u32_be(&mut img_file)?;
    if magic != IDX_IMAGES_MAGIC {
        return Err(DataError::BadMagic { expected: IDX_IMAGES_MAGIC, found: magic });
    }
    let count = read_u32_be(&mut img_file)? as usize;
    let height = read_u32_be(&mut img_file)? as usize;
    let width = read_u32_be(&mut img_file)? as usize;
    let expected = count * height * width;
    let mut raw = Vec::with_capacity(expected);
    img_file.read_to_end(&mut raw)?;
    if raw.len() < expected {
        return Err(DataError::Truncated { expected, found: raw.len() });
    }
    let images: Vec<Image> = raw[..expected]
        .chunks_exact(height * width)
        .map(|chunk| Image {
            height,
            width,
            pixels: chunk.iter().map(|&b| b as f32 / 255.0).collect(),
        })
        .collect();

    let mut lbl_file = std::io::BufReader::new(std::fs::File::open(labels_path)?);
    let magic = read_u32_be(&mut lbl_file)?;
    if magic != IDX_LABELS_MAGIC {
        return Err(DataError::BadMagic { expected: IDX_LABELS_MAGIC, found: magic });
    }
    let label_count = read_u32_be(&mut lbl_file)? as usize;
    let mut labels = Vec::with_capacity(label_count);
    lbl_file.read_to_end(&mut labels)?;
    if labels.len() < label_count {
        return Err(DataError::Truncated { expected: label_count, found: labels.len() });
    }
    labels.truncate(label_count);
    if images.len() != labels.len() {
        return Err(DataError::CountMismatch { images: images.len(), labels: labels.len() });
    }
    for &l in &labels {
        if l as usize >= CLASSES {
            return Err(DataError::LabelOutOfRange(l));
        }
    }
    Ok((images, labels))
}

/// Stratified 60/20/20 split, deterministic per seed. Per-class proportions
/// land within one example of the exact fractions (largest-remainder
/// rounding); the splits are disjoint by construction.
pub fn stratified_split(
    images: Vec<Image>,
    labels: Vec<u8>,
    seed: u64,
) -> Result<ImageDataset, DataError> {
    if images.len() != labels.len() {
        return Err(DataError::CountMismatch { images: images.len(), labels: labels.len() });
    }
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); CLASSES];
    for (i, &l) in labels.iter().enumerate() {
        by_class[l as usize].push(i);
    }
    for (class, members) in by_class.iter().enumerate() {
        if !members.is_empty() && members.len() < 10 {
            return Err(DataError::ClassTooSmall { class, count: members.len(), needed: 10 });
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut split = vec![Split::Test; images.len()];
    for members in by_class.iter_mut() {
        if members.is_empty() {
            continue;
        }
        members.shuffle(&mut rng);
        let n = members.len();
        let mut n_train = n * 6 / 10;
        let mut n_val = n * 2 / 10;
        let n_test = n * 2 / 10;
        // Largest-remainder distribution of what integer division dropped.
        let mut rem = n - n_train - n_val - n_test;
        for bucket in [&mut n_train, &mut n_val] {
            if rem == 0 {
                break;
            }
            *bucket += 1;
            rem -= 1;
        }
        for (pos, &idx) in members.iter().enumerate() {
            split[idx] = if pos < n_train {
                Split::Train
            } else if pos < n_train + n_val {
                Split::Val
            } else {
                Split::Test
            };
        }
    }
    Ok(ImageDataset { images, labels, split })
}
