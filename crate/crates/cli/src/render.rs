//! Overlay rendering: region outlines burned into an 8-bit RGB copy of the
//! input.

use dctree::mcimage::{MultiChannelImage, Samples};
use dctree::regions::RegionSet;

/// Outline colors, cycled by region id.
pub const PALETTE: [[u8; 3]; 6] = [
    [255, 0, 0],
    [0, 255, 0],
    [0, 0, 255],
    [255, 255, 0],
    [255, 0, 255],
    [0, 255, 255],
];

/// RGB view of any image: three channels are taken as they are, anything
/// else becomes the channel mean replicated. Samples are mapped to 0..=255.
pub fn to_rgb8(image: &MultiChannelImage) -> Vec<u8> {
    let c = image.channels();
    let values = image.to_f32_vec();
    let (lo, hi) = match image.samples() {
        Samples::U8(_) => (0.0, 255.0),
        Samples::U16(_) => (0.0, 65535.0),
        Samples::F32(_) => values
            .iter()
            .fold((f32::MAX, f32::MIN), |(lo, hi), &v| (lo.min(v), hi.max(v))),
    };
    let scale = if hi > lo { 255.0 / (hi - lo) } else { 0.0 };
    let to8 = |v: f32| ((v - lo) * scale).round().clamp(0.0, 255.0) as u8;
    let mut out = Vec::with_capacity(image.pixel_count() * 3);
    for px in values.chunks_exact(c) {
        if c == 3 {
            out.extend(px.iter().map(|&v| to8(v)));
        } else {
            let g = to8(px.iter().sum::<f32>() / c as f32);
            out.extend([g, g, g]);
        }
    }
    out
}

/// Draw 1-pixel inner boundaries of every region, in id order.
pub fn overlay(image: &MultiChannelImage, regions: &RegionSet) -> MultiChannelImage {
    let (w, h) = (image.width(), image.height());
    let mut rgb = to_rgb8(image);
    let mut inside = vec![false; w * h];
    for r in &regions.regions {
        let pixels = r.pixels(w);
        for &p in &pixels {
            inside[p] = true;
        }
        let color = PALETTE[(r.id - 1) % PALETTE.len()];
        for &p in &pixels {
            let (x, y) = (p % w, p / w);
            let edge = x == 0
                || y == 0
                || x + 1 == w
                || y + 1 == h
                || !inside[p - 1]
                || !inside[p + 1]
                || !inside[p - w]
                || !inside[p + w];
            if edge {
                rgb[p * 3..p * 3 + 3].copy_from_slice(&color);
            }
        }
        for &p in &pixels {
            inside[p] = false;
        }
    }
    MultiChannelImage::from_u8(w, h, 3, rgb).expect("dimensions come from a valid image")
}
