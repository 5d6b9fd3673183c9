//! Brute-force reference for the derivate-based tree.
//!
//! Every level is thresholded independently and labeled from scratch with a
//! breadth-first search; nodes are the distinct pixel sets that appear. This
//! is quadratic-ish and only meant for small images in tests and debugging.

use std::collections::{BTreeMap, VecDeque};

use crate::ctree::{canonicalize, ComponentTree, NodeId};
use crate::preprocess::QuantizedDerivates;

const UNLABELED: u32 = u32::MAX;

/// Pixel partitions for every level `t in 0..bins`: `labels[t][p]` is the
/// component of pixel `p` in the graph of interior derivates with level
/// `<= t`, or `u32::MAX` when no such derivate touches `p`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ThresholdDecomposition {
    pub width: usize,
    pub height: usize,
    pub labels: Vec<Vec<u32>>,
}

impl ThresholdDecomposition {
    /// Components at level `t` as sorted pixel lists, ordered by their first
    /// pixel.
    pub fn components(&self, t: usize) -> Vec<Vec<usize>> {
        let mut groups: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
        for (p, &l) in self.labels[t].iter().enumerate() {
            if l != UNLABELED {
                groups.entry(l).or_default().push(p);
            }
        }
        let mut out: Vec<Vec<usize>> = groups.into_values().collect();
        out.sort();
        out
    }
}

/// Interior derivates as `(pixel, pixel, level)` edges.
fn edges(q: &QuantizedDerivates) -> Vec<(usize, usize, u32)> {
    let (w, h) = (q.width, q.height);
    let mut out = Vec::new();
    for y in 0..h {
        for x in 0..w.saturating_sub(1) {
            out.push((y * w + x, y * w + x + 1, q.horiz[y * (w - 1) + x]));
        }
    }
    for y in 0..h.saturating_sub(1) {
        for x in 0..w {
            out.push((y * w + x, (y + 1) * w + x, q.vert[y * w + x]));
        }
    }
    out
}

fn label_level(
    n: usize,
    edges: &[(usize, usize, u32)],
    t: u32,
    order: &[usize],
) -> Vec<u32> {
    let mut adj = vec![Vec::new(); n];
    for &(a, b, l) in edges {
        if l <= t {
            adj[a].push(b);
            adj[b].push(a);
        }
    }
    let mut labels = vec![UNLABELED; n];
    let mut next = 0;
    let mut queue = VecDeque::new();
    for &seed in order {
        if labels[seed] != UNLABELED || adj[seed].is_empty() {
            continue;
        }
        labels[seed] = next;
        queue.push_back(seed);
        while let Some(p) = queue.pop_front() {
            for &q in &adj[p] {
                if labels[q] == UNLABELED {
                    labels[q] = next;
                    queue.push_back(q);
                }
            }
        }
        next += 1;
    }
    labels
}

pub fn threshold_decomposition(q: &QuantizedDerivates) -> ThresholdDecomposition {
    let n = q.width * q.height;
    let order: Vec<usize> = (0..n).collect();
    let edges = edges(q);
    ThresholdDecomposition {
        width: q.width,
        height: q.height,
        labels: (0..q.bins).map(|t| label_level(n, &edges, t, &order)).collect(),
    }
}

pub fn oracle_tree(q: &QuantizedDerivates, min_area: usize) -> ComponentTree {
    let order: Vec<usize> = (0..q.width * q.height).collect();
    oracle_tree_with_order(q, min_area, &order)
}

/// [`oracle_tree`] visiting pixels in the given order; the result must not
/// depend on it.
pub fn oracle_tree_with_order(q: &QuantizedDerivates, min_area: usize, order: &[usize]) -> ComponentTree {
    let n = q.width * q.height;
    assert_eq!(order.len(), n, "order must be a permutation of all pixels");
    let edges = edges(q);
    let mut sets: BTreeMap<Vec<usize>, usize> = BTreeMap::new();
    let mut levels: Vec<u32> = Vec::new();
    let mut areas: Vec<usize> = Vec::new();
    let mut parent: Vec<Option<usize>> = Vec::new();
    let mut first_node: Vec<Option<usize>> = vec![None; n];
    let mut current: Vec<Option<usize>> = vec![None; n];

    for t in 0..q.bins {
        let labels = label_level(n, &edges, t, order);
        let mut groups: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
        for &p in order {
            if labels[p] != UNLABELED {
                groups.entry(labels[p]).or_default().push(p);
            }
        }
        for mut pixels in groups.into_values() {
            pixels.sort_unstable();
            let node = match sets.get(&pixels) {
                Some(&id) => id,
                None => {
                    let id = levels.len();
                    levels.push(t);
                    areas.push(pixels.len());
                    parent.push(None);
                    sets.insert(pixels.clone(), id);
                    id
                }
            };
            for &p in &pixels {
                match current[p] {
                    Some(prev) if prev != node => parent[prev] = Some(node),
                    Some(_) => {}
                    None => first_node[p] = Some(node),
                }
                current[p] = Some(node);
            }
        }
    }

    let all: Vec<usize> = (0..n).collect();
    let root = match sets.get(&all) {
        Some(&id) => id,
        None => {
            // no interior derivates at all: a lone pixel
            levels.push(0);
            areas.push(n);
            parent.push(None);
            levels.len() - 1
        }
    };

    let kept: Vec<bool> = (0..levels.len())
        .map(|i| i == root || areas[i] >= min_area)
        .collect();
    let nearest_kept = |mut id: usize| -> usize {
        while !kept[id] {
            id = parent[id].expect("root is kept");
        }
        id
    };
    let mut new_id = vec![usize::MAX; levels.len()];
    let mut kept_ids = Vec::new();
    for i in 0..levels.len() {
        if kept[i] {
            new_id[i] = kept_ids.len();
            kept_ids.push(i);
        }
    }
    let parents: Vec<Option<NodeId>> = kept_ids
        .iter()
        .map(|&i| parent[i].map(|p| new_id[nearest_kept(p)]))
        .collect();
    let kept_levels: Vec<u32> = kept_ids.iter().map(|&i| levels[i]).collect();
    let owner: Vec<NodeId> = (0..n)
        .map(|p| new_id[nearest_kept(first_node[p].unwrap_or(root))])
        .collect();
    let tree = ComponentTree::from_parts(q.width, q.height, &parents, &kept_levels, owner)
        .expect("oracle builds a well-formed tree");
    canonicalize(&tree)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ctree::serialize_tree;
    use crate::mcimage::MultiChannelImage;
    use crate::preprocess::{compute_derivates, quantize, MaxMagnitude, Norm};

    fn quantized(w: usize, h: usize, values: Vec<u8>, bins: u32, max: MaxMagnitude) -> QuantizedDerivates {
        let img = MultiChannelImage::from_u8(w, h, 1, values).unwrap();
        quantize(&compute_derivates(&img, Norm::L2), bins, max).unwrap()
    }

    #[test]
    fn constant_image_is_single_root() {
        let q = quantized(4, 4, vec![7; 16], 8, MaxMagnitude::Auto);
        assert_eq!(serialize_tree(&oracle_tree(&q, 1)), "0 -1 0 16 0\n");
    }

    #[test]
    fn lone_pixel() {
        let q = quantized(1, 1, vec![7], 8, MaxMagnitude::Auto);
        assert_eq!(serialize_tree(&oracle_tree(&q, 1)), "0 -1 0 1 0\n");
    }

    #[test]
    fn two_plateaus_merge_at_top_bin() {
        let q = quantized(4, 1, vec![0, 0, 9, 9], 10, MaxMagnitude::Fixed(9.0));
        assert_eq!(q.horiz, vec![0, 9, 0]);
        let t = oracle_tree(&q, 1);
        t.validate().unwrap();
        assert_eq!(serialize_tree(&t), "0 -1 9 4 0\n1 0 0 2 0\n2 0 0 2 2\nr 1 0 2\nr 2 2 2\n");
    }

    #[test]
    fn decomposition_refines_monotonically() {
        let q = quantized(3, 3, vec![0, 10, 20, 30, 40, 50, 60, 70, 80], 4, MaxMagnitude::Auto);
        let d = threshold_decomposition(&q);
        for t in 1..d.labels.len() {
            for a in 0..9 {
                for b in 0..9 {
                    let (la, lb) = (d.labels[t - 1][a], d.labels[t - 1][b]);
                    if la != UNLABELED && la == lb {
                        assert_eq!(d.labels[t][a], d.labels[t][b]);
                    }
                }
            }
        }
        assert_eq!(d.components(3), vec![(0..9).collect::<Vec<_>>()]);
    }

    #[test]
    fn pixel_order_does_not_matter() {
        let q = quantized(3, 2, vec![5, 9, 200, 0, 40, 41], 8, MaxMagnitude::Auto);
        let forward = oracle_tree(&q, 1);
        let reversed: Vec<usize> = (0..6).rev().collect();
        assert_eq!(oracle_tree_with_order(&q, 1, &reversed), forward);
    }
}
