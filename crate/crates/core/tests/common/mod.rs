#![allow(dead_code)]

use dctree::ctree::{build_tree, ComponentTree, TreeBuildParams};
use dctree::dgraph::build_grid;
use dctree::mcimage::MultiChannelImage;
use dctree::preprocess::{compute_derivates, quantize, MaxMagnitude, Norm, QuantizedDerivates};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random u8 image; small palettes make plateaus and ties likely.
pub fn random_image(rng: &mut impl Rng, w: usize, h: usize, c: usize) -> MultiChannelImage {
    let palette: u8 = rng.random_range(2..=12);
    let step = 255 / palette.max(1);
    let data = (0..w * h * c)
        .map(|_| rng.random_range(0..=palette) * step)
        .collect();
    MultiChannelImage::from_u8(w, h, c, data).unwrap()
}

pub fn random_quantized(rng: &mut impl Rng, max_side: usize) -> QuantizedDerivates {
    let w = rng.random_range(1..=max_side);
    let h = rng.random_range(1..=max_side);
    let c = [1, 2, 3, 5][rng.random_range(0..4)];
    let bins = [4, 8, 16][rng.random_range(0..3)];
    let img = random_image(rng, w, h, c);
    quantize(&compute_derivates(&img, Norm::L2), bins, MaxMagnitude::Auto).unwrap()
}

pub fn flood(q: &QuantizedDerivates, min_area: usize) -> ComponentTree {
    build_tree(&build_grid(q), &TreeBuildParams::new(q.bins).with_min_area(min_area)).unwrap()
}
