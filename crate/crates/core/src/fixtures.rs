//! Synthetic images used by tests, benchmarks and the CLI demos.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::mcimage::{MultiChannelImage, Samples};

/// Pixel indices of the axis-aligned square `[x0, x0+side) x [y0, y0+side)`.
pub fn square_mask(width: usize, x0: usize, y0: usize, side: usize) -> Vec<usize> {
    (y0..y0 + side)
        .flat_map(|y| (x0..x0 + side).map(move |x| y * width + x))
        .collect()
}

/// 40x40: left half 0, right half 255, and a 16x16 square of 128 centered
/// on the seam. The square is darker than its right neighbor and lighter
/// than its left one, so it is homogeneous but not extremal.
pub fn split_background() -> (MultiChannelImage, Vec<usize>) {
    let (w, h) = (40, 40);
    let mut data: Vec<u8> = (0..w * h).map(|p| if p % w < w / 2 { 0 } else { 255 }).collect();
    let square = square_mask(w, 12, 12, 16);
    for &p in &square {
        data[p] = 128;
    }
    (MultiChannelImage::from_u8(w, h, 1, data).unwrap(), square)
}

/// A bright square on black.
pub fn white_square(size: usize, x0: usize, y0: usize, side: usize) -> MultiChannelImage {
    let mut data = vec![0u8; size * size];
    for p in square_mask(size, x0, y0, side) {
        data[p] = 255;
    }
    MultiChannelImage::from_u8(size, size, 1, data).unwrap()
}

/// Three concentric squares (outer 200, middle 100, inner 0) plus seeded
/// Gaussian noise of deviation `sigma`, as a float image.
pub fn nested_squares(size: usize, sigma: f64, seed: u64) -> MultiChannelImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, sigma.max(f64::MIN_POSITIVE)).unwrap();
    let (a, b) = (size / 6, size / 3);
    let data = (0..size * size)
        .map(|p| {
            let (x, y) = (p % size, p / size);
            let ring = x.min(y).min(size - 1 - x).min(size - 1 - y);
            let base = if ring < a {
                200.0
            } else if ring < b {
                100.0
            } else {
                0.0
            };
            let n = if sigma > 0.0 { noise.sample(&mut rng) } else { 0.0 };
            (base + n) as f32
        })
        .collect();
    MultiChannelImage::from_f32(size, size, 1, data).unwrap()
}

/// A cluttered 8-bit gray scene: a horizontal ramp with random flat
/// rectangles on top and mild noise.
pub fn scene(width: usize, height: usize, seed: u64) -> MultiChannelImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data: Vec<f64> = (0..width * height)
        .map(|p| 40.0 + 120.0 * (p % width) as f64 / width.max(2) as f64)
        .collect();
    for _ in 0..(width * height / 800).max(4) {
        let (w, h) = (rng.random_range(3..=width.div_ceil(4).max(3)), rng.random_range(3..=height.div_ceil(4).max(3)));
        let (x0, y0) = (rng.random_range(0..width), rng.random_range(0..height));
        let v: f64 = rng.random_range(0.0..255.0);
        for y in y0..(y0 + h).min(height) {
            for x in x0..(x0 + w).min(width) {
                data[y * width + x] = v;
            }
        }
    }
    let noise = Normal::new(0.0, 3.0).unwrap();
    let bytes = data
        .into_iter()
        .map(|v| (v + noise.sample(&mut rng)).round().clamp(0.0, 255.0) as u8)
        .collect();
    MultiChannelImage::from_u8(width, height, 1, bytes).unwrap()
}

/// Stack `channels` noisy copies of the base channels (cycling through
/// them), adding Gaussian noise of deviation `sigma` to every sample.
pub fn synthesize_channels(base: &MultiChannelImage, channels: usize, sigma: f64, seed: u64) -> Result<MultiChannelImage> {
    if channels == 0 {
        return Err(Error::Param("channel count must be at least 1".into()));
    }
    let noise = Normal::new(0.0, sigma).map_err(|e| Error::Param(format!("noise deviation: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (n, bc) = (base.pixel_count(), base.channels());
    let src = base.to_f32_vec();
    let mut out = Vec::with_capacity(n * channels);
    for p in 0..n {
        for c in 0..channels {
            out.push(src[p * bc + c % bc] as f64 + noise.sample(&mut rng));
        }
    }
    let samples = match base.samples() {
        Samples::U8(_) => Samples::U8(out.into_iter().map(|v| v.round().clamp(0.0, 255.0) as u8).collect()),
        Samples::U16(_) => Samples::U16(out.into_iter().map(|v| v.round().clamp(0.0, 65535.0) as u16).collect()),
        Samples::F32(_) => Samples::F32(out.into_iter().map(|v| v as f32).collect()),
    };
    MultiChannelImage::new(base.width(), base.height(), channels, samples)
}
