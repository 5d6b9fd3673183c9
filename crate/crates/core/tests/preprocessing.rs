mod common;

use common::{random_image, rng};
use dctree::mcimage::MultiChannelImage;
use dctree::preprocess::{compute_derivates, smooth, Norm, SmoothingMethod, SmoothingParams};
use proptest::prelude::*;
use rand::Rng;
use rand_distr::{Distribution, Normal};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn norms_match_direct_sums(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let (w, h, c) = (rng.random_range(1..8), rng.random_range(1..8), rng.random_range(1..6));
        let img = random_image(&mut rng, w, h, c);
        let l1 = compute_derivates(&img, Norm::L1);
        let l2 = compute_derivates(&img, Norm::L2);
        let linf = compute_derivates(&img, Norm::Linf);
        let diffs = |x0: usize, y0: usize, x1: usize, y1: usize| -> Vec<f64> {
            (0..c).map(|k| (img.get(x0, y0, k) as f64 - img.get(x1, y1, k) as f64).abs()).collect()
        };
        let check = |d: Vec<f64>, a: f32, b: f32, m: f32| {
            let sum: f64 = d.iter().sum();
            let euclid = d.iter().map(|v| v * v).sum::<f64>().sqrt();
            let max = d.iter().cloned().fold(0.0, f64::max);
            assert!((a as f64 - sum).abs() < 1e-3);
            assert!((b as f64 - euclid).abs() < 1e-3);
            assert!((m as f64 - max).abs() < 1e-3);
            assert!(m <= b + 1e-3 && b <= a + 1e-3);
        };
        for y in 0..h {
            for x in 0..w.saturating_sub(1) {
                check(diffs(x, y, x + 1, y), l1.horiz_at(x, y), l2.horiz_at(x, y), linf.horiz_at(x, y));
            }
        }
        for y in 0..h.saturating_sub(1) {
            for x in 0..w {
                check(diffs(x, y, x, y + 1), l1.vert_at(x, y), l2.vert_at(x, y), linf.vert_at(x, y));
            }
        }
    }

    #[test]
    fn l2_obeys_triangle_inequality(seed in any::<u64>()) {
        // |a-c| <= |a-b| + |b-c| around every 2x2 block
        let mut rng = rng(seed);
        let (w, h) = (rng.random_range(2..9), rng.random_range(2..9));
        let img = random_image(&mut rng, w, h, 3);
        let f = compute_derivates(&img, Norm::L2);
        for y in 0..h - 1 {
            for x in 0..w - 1 {
                let top = f.horiz_at(x, y);
                let right = f.vert_at(x + 1, y);
                let bottom = f.horiz_at(x, y + 1);
                let left = f.vert_at(x, y);
                prop_assert!(top <= left + bottom + right + 1e-3);
                prop_assert!(left <= top + right + bottom + 1e-3);
            }
        }
    }
}

fn noisy_step(seed: u64) -> (MultiChannelImage, Vec<f32>) {
    let (w, h) = (32, 32);
    let mut rng = rng(seed);
    let noise = Normal::new(0.0, 8.0).unwrap();
    let clean: Vec<f32> = (0..w * h).map(|p| if p % w < w / 2 { 60.0 } else { 190.0 }).collect();
    let noisy = clean.iter().map(|&v| v + noise.sample(&mut rng) as f32).collect();
    (MultiChannelImage::from_f32(w, h, 1, noisy).unwrap(), clean)
}

fn mse(a: &[f32], b: &[f32]) -> f64 {
    a.iter().zip(b).map(|(x, y)| ((x - y) as f64).powi(2)).sum::<f64>() / a.len() as f64
}

#[test]
fn smoothing_removes_noise_but_keeps_the_step() {
    for method in [SmoothingMethod::Bilateral, SmoothingMethod::Guided] {
        let (img, clean) = noisy_step(4);
        let params = SmoothingParams {
            method,
            spatial_radius: 2,
            range_sigma: 25.0,
            regularization_eps: Some(400.0),
        };
        let out = smooth(&img, &params).unwrap();
        let before = mse(&img.to_f32_vec(), &clean);
        let after = mse(&out.to_f32_vec(), &clean);
        assert!(after < before * 0.5, "{method:?}: {before} -> {after}");
        // the step survives: columns next to the seam stay far apart
        let left: f32 = (0..32).map(|y| out.get(15, y, 0)).sum::<f32>() / 32.0;
        let right: f32 = (0..32).map(|y| out.get(16, y, 0)).sum::<f32>() / 32.0;
        assert!(right - left > 100.0, "{method:?}: {left} {right}");
    }
}
