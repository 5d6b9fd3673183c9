mod common;

use common::{flood, random_quantized, rng};
use dctree::ctree::{build_tree, build_tree_with_stats, serialize_tree, ComponentTree, LeveledGraph, NodeId, TreeBuildParams};
use dctree::dgraph::{build_grid, DerivateGrid};
use dctree::mcimage::MultiChannelImage;
use dctree::preprocess::{compute_derivates, quantize, MaxMagnitude, Norm};
use rand::seq::SliceRandom;
use rand::Rng;

/// A derivate grid whose neighbor slots are permuted per node.
struct Shuffled<'a> {
    grid: &'a DerivateGrid,
    order: Vec<[usize; 6]>,
}

impl<'a> Shuffled<'a> {
    fn new(grid: &'a DerivateGrid, rng: &mut impl Rng) -> Self {
        let order = (0..grid.len())
            .map(|_| {
                let mut slots = [0, 1, 2, 3, 4, 5];
                slots.shuffle(rng);
                slots
            })
            .collect();
        Self { grid, order }
    }
}

impl LeveledGraph for Shuffled<'_> {
    fn width(&self) -> usize {
        self.grid.width()
    }
    fn height(&self) -> usize {
        self.grid.height()
    }
    fn node_count(&self) -> usize {
        self.grid.len()
    }
    fn bins(&self) -> u32 {
        self.grid.bins()
    }
    fn level(&self, node: usize) -> u32 {
        self.grid.level(node)
    }
    fn degree(&self) -> usize {
        6
    }
    fn neighbor(&self, node: usize, slot: usize) -> Option<usize> {
        LeveledGraph::neighbor(self.grid, node, self.order[node][slot])
    }
    fn pixels(&self, node: usize) -> (usize, Option<usize>) {
        LeveledGraph::pixels(self.grid, node)
    }
}

#[test]
fn start_and_neighbor_order_do_not_matter() {
    let mut rng = rng(21);
    for _ in 0..40 {
        let q = random_quantized(&mut rng, 12);
        let grid = build_grid(&q);
        let reference = serialize_tree(&flood(&q, 1));
        let interior: Vec<usize> = (0..grid.len()).filter(|&i| !grid.is_sentinel(i)).collect();
        if interior.is_empty() {
            continue;
        }
        for _ in 0..10 {
            let start = interior[rng.random_range(0..interior.len())];
            let shuffled = Shuffled::new(&grid, &mut rng);
            let params = TreeBuildParams::new(q.bins).with_start(start);
            assert_eq!(serialize_tree(&build_tree(&shuffled, &params).unwrap()), reference);
            assert_eq!(serialize_tree(&build_tree(&grid, &params).unwrap()), reference);
        }
    }
}

#[test]
fn every_interior_derivate_is_merged_once() {
    let mut rng = rng(3);
    for _ in 0..200 {
        let q = random_quantized(&mut rng, 12);
        let grid = build_grid(&q);
        let (_, stats) = build_tree_with_stats(&grid, &TreeBuildParams::new(q.bins)).unwrap();
        assert_eq!(stats.interior, grid.interior_count());
        assert_eq!(stats.merged, stats.interior);
    }
}

#[test]
fn degenerate_images() {
    let one = MultiChannelImage::from_u8(1, 1, 3, vec![1, 2, 3]).unwrap();
    let q = quantize(&compute_derivates(&one, Norm::L2), 8, MaxMagnitude::Auto).unwrap();
    assert_eq!(serialize_tree(&flood(&q, 1)), "0 -1 0 1 0\n");

    let flat = MultiChannelImage::from_u8(4, 4, 1, vec![9; 16]).unwrap();
    let q = quantize(&compute_derivates(&flat, Norm::L2), 8, MaxMagnitude::Auto).unwrap();
    let t = flood(&q, 1);
    assert_eq!(t.len(), 1);
    assert_eq!((t.nodes()[0].area, t.nodes()[0].level), (16, 0));
}

fn lca(tree: &ComponentTree, a: usize, b: usize) -> NodeId {
    let ancestors = |p: usize| {
        let mut chain = vec![tree.pixel_to_node()[p]];
        while let Some(up) = tree.nodes()[*chain.last().unwrap()].parent {
            chain.push(up);
        }
        chain
    };
    let up_a = ancestors(a);
    *ancestors(b).iter().find(|n| up_a.contains(n)).unwrap()
}

/// Five colored rectangles on gray. Pink/red are the closest pair, then
/// light green/green, then orange to red; gray is far from everything.
#[test]
fn colored_rectangles_merge_by_similarity() {
    const GRAY: [u8; 3] = [128, 128, 128];
    const PINK: [u8; 3] = [200, 40, 60];
    const RED: [u8; 3] = [210, 30, 50];
    const LIGHT_GREEN: [u8; 3] = [60, 200, 60];
    const GREEN: [u8; 3] = [40, 180, 40];
    const ORANGE: [u8; 3] = [250, 110, 20];
    let layout = [
        "......",
        ".prro.",
        ".prro.",
        "......",
        ".llgg.",
        "......",
    ];
    let mut data = Vec::new();
    for row in layout {
        for c in row.chars() {
            data.extend(match c {
                'p' => PINK,
                'r' => RED,
                'l' => LIGHT_GREEN,
                'g' => GREEN,
                'o' => ORANGE,
                _ => GRAY,
            });
        }
    }
    let img = MultiChannelImage::from_u8(6, 6, 3, data).unwrap();
    let q = quantize(&compute_derivates(&img, Norm::L2), 256, MaxMagnitude::Auto).unwrap();
    let t = flood(&q, 1);
    let px = |x: usize, y: usize| y * 6 + x;
    let level = |a, b| t.nodes()[lca(&t, a, b)].level;
    let (pink, red, orange) = (px(1, 1), px(2, 1), px(4, 1));
    let (light_green, green, gray) = (px(1, 4), px(3, 4), px(0, 0));
    assert!(level(pink, red) < level(light_green, green));
    assert!(level(light_green, green) < level(red, orange));
    assert!(level(red, orange) < level(orange, gray));
    assert_eq!(lca(&t, gray, pink), t.root());
    assert_eq!(lca(&t, green, pink), t.root());
}
