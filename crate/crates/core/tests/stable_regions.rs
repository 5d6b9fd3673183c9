mod common;

use std::collections::{BTreeSet, HashSet};

use common::{flood, random_image, random_quantized, rng};
use dctree::ctree::{node_region, ComponentTree, NodeId};
use dctree::fixtures::{nested_squares, split_background, white_square};
use dctree::mcimage::MultiChannelImage;
use dctree::oracle::oracle_tree;
use dctree::pipeline::{derivate_tree, mser, mshr, PipelineParams};
use dctree::preprocess::{compute_derivates, quantize, smooth, MaxMagnitude, SmoothingParams};
use dctree::regions::{
    extract_stable, label_map, rasterize, runs_to_pixels, stability, ExtractParams, LabelPolicy, Polarity,
    RegionSet, StabilityMode,
};
use proptest::prelude::*;
use rand::Rng;

/// Stability recomputed from explicit pixel sets along the node's path.
fn brute_stability(tree: &ComponentTree, node: NodeId, delta: u32, mode: StabilityMode) -> f64 {
    let nodes = tree.nodes();
    let region = |n: NodeId| -> BTreeSet<usize> { node_region(tree, n).unwrap().into_iter().collect() };
    let level = nodes[node].level as i64;

    // ancestors, innermost first
    let mut up = vec![node];
    while let Some(p) = nodes[*up.last().unwrap()].parent {
        up.push(p);
    }
    let plus = up
        .iter()
        .copied()
        .find(|&n| nodes[n].level as i64 >= level + delta as i64)
        .unwrap_or(*up.last().unwrap());

    // descending chain through the largest child region
    let mut down = vec![node];
    loop {
        let cur = *down.last().unwrap();
        let best = nodes[cur]
            .children
            .iter()
            .map(|&c| (region(c), c))
            .max_by(|(a, _), (b, _)| a.len().cmp(&b.len()).then(b.first().cmp(&a.first())));
        match best {
            Some((_, c)) => down.push(c),
            None => break,
        }
    }
    let minus = down
        .iter()
        .copied()
        .find(|&n| nodes[n].level as i64 <= level - delta as i64)
        .unwrap_or(*down.last().unwrap());

    let (rp, rm, ri) = (region(plus), region(minus), region(node));
    assert!(rm.is_subset(&ri) && ri.is_subset(&rp));
    let grow = rp.difference(&rm).count() as f64;
    match mode {
        StabilityMode::Difference => grow,
        StabilityMode::Ratio => grow / ri.len() as f64,
        StabilityMode::Excess => grow - ri.len() as f64,
    }
}

fn brute_select(tree: &ComponentTree, p: &ExtractParams) -> BTreeSet<Vec<usize>> {
    let nodes = tree.nodes();
    let s: Vec<f64> = (0..tree.len())
        .map(|n| brute_stability(tree, n, p.delta, p.stability_mode))
        .collect();
    let mut out = BTreeSet::new();
    for n in nodes {
        let path_child = n
            .children
            .iter()
            .copied()
            .max_by(|&a, &b| nodes[a].area.cmp(&nodes[b].area).then(nodes[b].first_pixel.cmp(&nodes[a].first_pixel)));
        let local_min = n.parent.is_none_or(|q| s[n.id] <= s[q]) && path_child.is_none_or(|c| s[n.id] < s[c]);
        let area_ok = n.area >= p.min_area && n.area as f64 <= p.max_area_fraction * tree.pixel_count() as f64;
        if local_min && area_ok {
            out.insert(node_region(tree, n.id).unwrap());
        }
    }
    out
}

fn region_sets(set: &RegionSet) -> BTreeSet<Vec<usize>> {
    set.regions.iter().map(|r| r.pixels(set.width)).collect()
}

fn iou(a: &[usize], b: &[usize]) -> f64 {
    let a: HashSet<_> = a.iter().collect();
    let inter = b.iter().filter(|p| a.contains(p)).count();
    inter as f64 / (a.len() + b.len() - inter) as f64
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn stability_matches_path_oracle(seed in any::<u64>(), delta in 1u32..8) {
        let mut rng = rng(seed);
        let q = random_quantized(&mut rng, 10);
        let t = flood(&q, rng.random_range(1..4));
        for mode in [StabilityMode::Difference, StabilityMode::Ratio, StabilityMode::Excess] {
            for n in 0..t.len() {
                prop_assert_eq!(stability(&t, n, delta, mode).unwrap(), brute_stability(&t, n, delta, mode));
            }
        }
    }

    #[test]
    fn selection_matches_oracle(seed in any::<u64>(), delta in 1u32..6, min_area in 1usize..5) {
        let q = random_quantized(&mut rng(seed), 10);
        let t = flood(&q, 1);
        let p = ExtractParams { delta, min_area, max_area_fraction: 0.9, ..ExtractParams::default() };
        prop_assert_eq!(region_sets(&extract_stable(&t, &p).unwrap()), brute_select(&t, &p));
    }

    #[test]
    fn difference_stability_grows_with_delta(seed in any::<u64>()) {
        let q = random_quantized(&mut rng(seed), 10);
        let t = flood(&q, 1);
        for n in 0..t.len() {
            let s: Vec<f64> = (1..10).map(|d| stability(&t, n, d, StabilityMode::Difference).unwrap()).collect();
            prop_assert!(s.windows(2).all(|w| w[0] <= w[1]), "{:?}", s);
        }
    }

    #[test]
    fn masks_decode_to_node_regions(seed in any::<u64>()) {
        let q = random_quantized(&mut rng(seed), 12);
        let t = flood(&q, 1);
        for n in 0..t.len() {
            let (bbox, runs) = rasterize(&t, n).unwrap();
            let pixels = runs_to_pixels(&runs, q.width);
            prop_assert_eq!(&pixels, &node_region(&t, n).unwrap());
            let xs = pixels.iter().map(|p| p % q.width);
            let ys = pixels.iter().map(|p| p / q.width);
            prop_assert_eq!(bbox.x_min, xs.clone().min().unwrap());
            prop_assert_eq!(bbox.x_max, xs.max().unwrap());
            prop_assert_eq!(bbox.y_min, ys.clone().min().unwrap());
            prop_assert_eq!(bbox.y_max, ys.max().unwrap());
        }
    }

    #[test]
    fn label_maps_stay_inside_regions(seed in any::<u64>(), smallest in any::<bool>()) {
        let q = random_quantized(&mut rng(seed), 12);
        let t = flood(&q, 1);
        let p = ExtractParams { delta: 1, min_area: 1, max_area_fraction: 1.0, ..ExtractParams::default() };
        let set = extract_stable(&t, &p).unwrap();
        let policy = if smallest { LabelPolicy::SmallestOnTop } else { LabelPolicy::LargestOnTop };
        let labels = label_map(&set, policy);
        for (px, &l) in labels.labels.iter().enumerate() {
            let covering: Vec<_> = set.regions.iter().filter(|r| r.pixels(q.width).contains(&px)).collect();
            if l == 0 {
                prop_assert!(covering.is_empty());
            } else {
                let r = &set.regions[l as usize - 1];
                prop_assert!(r.pixels(q.width).contains(&px));
                let extreme = if smallest {
                    covering.iter().map(|r| r.area).min()
                } else {
                    covering.iter().map(|r| r.area).max()
                };
                prop_assert_eq!(Some(r.area), extreme);
            }
        }
    }

    #[test]
    fn mser_polarity_duality(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let (w, h) = (rng.random_range(1..14), rng.random_range(1..14));
        let img = random_image(&mut rng, w, h, 1);
        let inv_data: Vec<u8> = img.to_f32_vec().iter().map(|&v| 255 - v as u8).collect();
        let inv = MultiChannelImage::from_u8(w, h, 1, inv_data).unwrap();
        let p = |polarity| ExtractParams { delta: 2, min_area: 1, max_area_fraction: 1.0, polarity, ..ExtractParams::default() };
        for (a, b) in [(Polarity::Light, Polarity::Dark), (Polarity::Dark, Polarity::Light)] {
            let x = mser(&img, 256, 1, &p(a)).unwrap();
            let y = mser(&inv, 256, 1, &p(b)).unwrap();
            let strip = |s: &RegionSet| s.regions.iter().map(|r| (r.pixels(w), r.stability.to_bits())).collect::<BTreeSet<_>>();
            prop_assert_eq!(strip(&x), strip(&y));
        }
    }
}

#[test]
fn nested_squares_match_oracle_at_delta_one() {
    let img = nested_squares(32, 5.0, 0);
    let smoothed = smooth(&img, &SmoothingParams::default()).unwrap();
    let q = quantize(&compute_derivates(&smoothed, Default::default()), 64, MaxMagnitude::Auto).unwrap();
    let p = ExtractParams {
        delta: 1,
        min_area: 4,
        ..ExtractParams::default()
    };
    let fast = extract_stable(&flood(&q, 1), &p).unwrap();
    let brute = brute_select(&oracle_tree(&q, 1), &p);
    assert!(!brute.is_empty());
    assert_eq!(region_sets(&fast), brute);
}

#[test]
fn split_background_square_is_homogeneous_but_not_extremal() {
    let (img, square) = split_background();
    let (set, _) = mshr(&img, &PipelineParams::default(), &ExtractParams::default()).unwrap();
    assert!(set.regions.iter().any(|r| iou(&r.pixels(40), &square) > 0.99));
    let both = ExtractParams {
        polarity: Polarity::Both,
        ..ExtractParams::default()
    };
    let set = mser(&img, 256, 1, &both).unwrap();
    assert!(set.regions.iter().all(|r| iou(&r.pixels(40), &square) <= 0.5));
}

#[test]
fn white_square_is_the_only_light_region() {
    let img = white_square(32, 8, 10, 12);
    let p = ExtractParams {
        polarity: Polarity::Light,
        ..ExtractParams::default()
    };
    let set = mser(&img, 256, 1, &p).unwrap();
    assert_eq!(set.len(), 1);
    assert_eq!(set.regions[0].pixels(32), dctree::fixtures::square_mask(32, 8, 10, 12));
}

#[test]
fn coarser_segmentation_with_larger_delta() {
    for seed in 0..3 {
        let img = nested_squares(64, 5.0, seed);
        let (tree, _) = derivate_tree(&img, &PipelineParams::default()).unwrap();
        let count = |delta| {
            extract_stable(&tree, &ExtractParams { delta, ..ExtractParams::default() })
                .unwrap()
                .len()
        };
        let (c5, c10, c20) = (count(5), count(10), count(20));
        assert!(c20 <= c10 && c10 <= c5, "seed {seed}: {c5} {c10} {c20}");
    }
}

#[test]
fn constant_image_yields_root_only_when_allowed() {
    let img = MultiChannelImage::from_u8(6, 6, 1, vec![50; 36]).unwrap();
    let pp = PipelineParams {
        min_area: 1,
        ..PipelineParams::default()
    };
    let all = ExtractParams {
        max_area_fraction: 1.0,
        min_area: 1,
        ..ExtractParams::default()
    };
    let (set, _) = mshr(&img, &pp, &all).unwrap();
    assert_eq!(set.len(), 1);
    assert_eq!(set.regions[0].area, 36);
    let (set, _) = mshr(&img, &pp, &ExtractParams::default()).unwrap();
    assert!(set.is_empty());
}
