//! Datasets and the bundled synthetic fixtures.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::idx::{self, IdxImages};
use super::Tensor;
use crate::error::{Error, Result};

/// Inputs (one sample per row) with integer class labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub inputs: Tensor,
    pub labels: Vec<usize>,
    pub n_classes: usize,
}

impl Dataset {
    pub fn new(inputs: Tensor, labels: Vec<usize>, n_classes: usize) -> Result<Self> {
        if inputs.rows() != labels.len() {
            return Err(Error::DimensionMismatch {
                images: inputs.rows(),
                labels: labels.len(),
            });
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= n_classes) {
            return Err(Error::InvalidArgument(format!(
                "label {bad} outside 0..{n_classes}"
            )));
        }
        Ok(Self {
            inputs,
            labels,
            n_classes,
        })
    }

    /// Loads an IDX image/label pair; the class count is `max label + 1`.
    pub fn from_idx(images: &Path, labels: &Path) -> Result<Self> {
        let (inputs, labels) = idx::load_idx(images, labels)?;
        let n_classes = labels.iter().max().map_or(0, |m| m + 1);
        Self::new(inputs, labels, n_classes)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn input_dim(&self) -> usize {
        self.inputs.cols()
    }

    /// First `n` samples (all of them if fewer).
    pub fn truncate(&self, n: usize) -> Dataset {
        let n = n.min(self.len());
        Dataset {
            inputs: self.inputs.slice_rows(0, n),
            labels: self.labels[..n].to_vec(),
            n_classes: self.n_classes,
        }
    }
}

/// Train/test pair.
#[derive(Debug, Clone, PartialEq)]
pub struct DataSplit {
    pub train: Dataset,
    pub test: Dataset,
}

impl DataSplit {
    pub fn n_classes(&self) -> usize {
        self.train.n_classes.max(self.test.n_classes)
    }
}

/// Two Gaussian blobs centred at `(-2, -2)` (class 0) and `(2, 2)` (class 1).
pub fn blobs(n: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, 0.7).expect("valid std");
    let mut data = Vec::with_capacity(2 * n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let label = i % 2;
        let centre = if label == 0 { -2.0 } else { 2.0 };
        data.push(centre + noise.sample(&mut rng));
        data.push(centre + noise.sample(&mut rng));
        labels.push(label);
    }
    Dataset {
        inputs: Tensor::from_vec(n, 2, data).expect("sized above"),
        labels,
        n_classes: 2,
    }
}

/// Splits off the last `n_test` samples.
pub fn split(data: &Dataset, n_test: usize) -> DataSplit {
    let cut = data.len().saturating_sub(n_test);
    let idx: Vec<usize> = (0..data.len()).collect();
    let part = |range: &[usize]| Dataset {
        inputs: data.inputs.select_rows(range),
        labels: range.iter().map(|&i| data.labels[i]).collect(),
        n_classes: data.n_classes,
    };
    DataSplit {
        train: part(&idx[..cut]),
        test: part(&idx[cut..]),
    }
}

pub const GLYPH_SIDE: usize = 28;
pub const GLYPH_CLASSES: usize = 10;

// Seven-segment endpoints on the 28x28 canvas: top, upper-left, upper-right,
// middle, lower-left, lower-right, bottom.
const SEGMENTS: [((f64, f64), (f64, f64)); 7] = [
    ((9.0, 5.0), (19.0, 5.0)),
    ((9.0, 5.0), (9.0, 14.0)),
    ((19.0, 5.0), (19.0, 14.0)),
    ((9.0, 14.0), (19.0, 14.0)),
    ((9.0, 14.0), (9.0, 23.0)),
    ((19.0, 14.0), (19.0, 23.0)),
    ((9.0, 23.0), (19.0, 23.0)),
];

const DIGIT_SEGMENTS: [u8; 10] = [
    0b1110111, 0b0100100, 0b1011101, 0b1101101, 0b0101110, 0b1101011, 0b1111011, 0b0100101,
    0b1111111, 0b1101111,
];

fn segment_distance(px: f64, py: f64, a: (f64, f64), b: (f64, f64)) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    let t = if len2 > 0.0 {
        (((px - a.0) * dx + (py - a.1) * dy) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let (cx, cy) = (a.0 + t * dx, a.1 + t * dy);
    ((px - cx).powi(2) + (py - cy).powi(2)).sqrt()
}

fn render_glyph(digit: usize, rng: &mut ChaCha8Rng, out: &mut [u8]) {
    let angle = rng.random_range(-0.25..0.25f64);
    let scale = rng.random_range(0.85..1.15f64);
    let shear = rng.random_range(-0.2..0.2f64);
    let (tx, ty) = (rng.random_range(-2.5..2.5f64), rng.random_range(-2.5..2.5f64));
    let thickness = rng.random_range(1.0..2.2f64);
    let ink = rng.random_range(0.7..1.0f64);
    let (s, c) = angle.sin_cos();
    let place = |(x, y): (f64, f64), rng: &mut ChaCha8Rng| {
        let (x, y) = (
            x - 14.0 + rng.random_range(-1.2..1.2f64),
            y - 14.0 + rng.random_range(-1.2..1.2f64),
        );
        let x = x + shear * y;
        (
            14.0 + tx + scale * (c * x - s * y),
            14.0 + ty + scale * (s * x + c * y),
        )
    };
    let mask = DIGIT_SEGMENTS[digit];
    let strokes: Vec<((f64, f64), (f64, f64))> = SEGMENTS
        .iter()
        .enumerate()
        .filter(|(k, _)| mask & (1 << (6 - k)) != 0)
        .map(|(_, &(a, b))| (place(a, rng), place(b, rng)))
        .collect();
    for (i, px) in out.iter_mut().enumerate() {
        let (x, y) = ((i % GLYPH_SIDE) as f64 + 0.5, (i / GLYPH_SIDE) as f64 + 0.5);
        let d = strokes
            .iter()
            .map(|&(a, b)| segment_distance(x, y, a, b))
            .fold(f64::INFINITY, f64::min);
        // one-pixel antialiased edge
        let cover = (thickness + 0.5 - d).clamp(0.0, 1.0);
        let speckle = rng.random_range(0.0..0.08f64);
        *px = ((ink * cover + speckle).min(1.0) * 255.0).round() as u8;
    }
}

/// Synthetic 28x28 ten-class digit-like images in IDX layout.
///
/// Each sample renders the seven-segment strokes of its digit under a random
/// affine distortion, endpoint jitter, stroke width, ink level and background
/// speckle. Labels cycle through the classes so every split is balanced.
pub fn synthetic_glyphs(count: usize, seed: u64) -> (IdxImages, Vec<u8>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let px = GLYPH_SIDE * GLYPH_SIDE;
    let mut pixels = vec![0u8; count * px];
    let mut labels = Vec::with_capacity(count);
    for (i, img) in pixels.chunks_mut(px).enumerate() {
        let digit = i % GLYPH_CLASSES;
        render_glyph(digit, &mut rng, img);
        labels.push(digit as u8);
    }
    (
        IdxImages {
            count,
            rows: GLYPH_SIDE,
            cols: GLYPH_SIDE,
            pixels,
        },
        labels,
    )
}

/// Train and test glyph sets from independent seeds.
pub fn synthetic_split(n_train: usize, n_test: usize, seed: u64) -> DataSplit {
    let make = |n, s| {
        let (images, labels) = synthetic_glyphs(n, s);
        Dataset {
            inputs: images.to_tensor(),
            labels: labels.into_iter().map(usize::from).collect(),
            n_classes: GLYPH_CLASSES,
        }
    };
    DataSplit {
        train: make(n_train, seed),
        test: make(n_test, seed ^ 0x5EED_7E57),
    }
}

/// Writes a glyph split as four IDX files
/// (`train-images.idx`, `train-labels.idx`, `test-images.idx`, `test-labels.idx`).
pub fn write_synthetic_idx(dir: &Path, n_train: usize, n_test: usize, seed: u64) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    for (name, n, s) in [("train", n_train, seed), ("test", n_test, seed ^ 0x5EED_7E57)] {
        let (images, labels) = synthetic_glyphs(n, s);
        idx::write_images(&dir.join(format!("{name}-images.idx")), &images)?;
        idx::write_labels(&dir.join(format!("{name}-labels.idx")), &labels)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn glyphs_are_deterministic_and_balanced() {
        let (a, la) = synthetic_glyphs(40, 3);
        let (b, lb) = synthetic_glyphs(40, 3);
        assert_eq!(a, b);
        assert_eq!(la, lb);
        for k in 0..10u8 {
            assert_eq!(la.iter().filter(|&&l| l == k).count(), 4);
        }
        assert_ne!(synthetic_glyphs(40, 4).0, a);
    }

    #[test]
    fn glyph_files_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        write_synthetic_idx(dir.path(), 20, 10, 1).unwrap();
        let train = Dataset::from_idx(
            &dir.path().join("train-images.idx"),
            &dir.path().join("train-labels.idx"),
        )
        .unwrap();
        assert_eq!(train.len(), 20);
        assert_eq!(train.input_dim(), 784);
        assert_eq!(train, synthetic_split(20, 10, 1).train);
    }

    #[test]
    fn dataset_validates_labels() {
        let t = Tensor::zeros(2, 1);
        assert!(Dataset::new(t.clone(), vec![0, 3], 2).is_err());
        assert!(Dataset::new(t, vec![0], 2).is_err());
    }
}
