//! Maximally stable regions read off a component-tree.
//!
//! For a node at level `i`, the stability looks `delta` levels up and down
//! its path: `A+` is the area of the nearest ancestor at level `>= i + delta`
//! (the root if none), `A-` the area of the first node at level
//! `<= i - delta` on the chain that always descends into the largest child
//! (the chain's last node if none reaches that low). Selected nodes are local
//! minima of the stability along that path. The same routine serves the
//! derivate tree (MSHR) and the gray-value trees (MSER).

use std::cmp::Reverse;
use std::fmt::{self, Write as _};
use std::str::FromStr;

use crate::ctree::{node_region, ComponentTree, NodeId};
use crate::error::{parse_err, Error, Result};
use crate::mcimage::LabelImage;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StabilityMode {
    /// `A+ - A-`.
    #[default]
    Difference,
    /// `(A+ - A-) / area`, the classical relative MSER criterion.
    Ratio,
    /// `A+ - A- - area`.
    Excess,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Polarity {
    /// Polarity-free extraction (derivate trees).
    #[default]
    None,
    /// Regions brighter than their surroundings.
    Light,
    /// Regions darker than their surroundings.
    Dark,
    Both,
}

macro_rules! text_enum {
    ($ty:ty { $($variant:path => $text:literal),+ $(,)? }) => {
        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(match self { $($variant => $text),+ })
            }
        }

        impl FromStr for $ty {
            type Err = Error;

            fn from_str(s: &str) -> Result<Self> {
                match s {
                    $($text => Ok($variant),)+
                    other => Err(Error::Param(format!("unknown {} '{other}'", stringify!($ty)))),
                }
            }
        }
    };
}

text_enum!(StabilityMode {
    StabilityMode::Difference => "difference",
    StabilityMode::Ratio => "ratio",
    StabilityMode::Excess => "excess",
});

text_enum!(Polarity {
    Polarity::None => "none",
    Polarity::Light => "light",
    Polarity::Dark => "dark",
    Polarity::Both => "both",
});

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtractParams {
    pub delta: u32,
    pub min_area: usize,
    pub max_area_fraction: f64,
    pub stability_mode: StabilityMode,
    pub polarity: Polarity,
}

impl Default for ExtractParams {
    fn default() -> Self {
        Self {
            delta: 5,
            min_area: 30,
            max_area_fraction: 0.75,
            stability_mode: StabilityMode::Difference,
            polarity: Polarity::None,
        }
    }
}

impl ExtractParams {
    pub fn validate(&self) -> Result<()> {
        if self.delta < 1 {
            return Err(Error::Param("delta must be at least 1".into()));
        }
        if self.min_area < 1 {
            return Err(Error::Param("min_area must be at least 1".into()));
        }
        if !(self.max_area_fraction > 0.0 && self.max_area_fraction <= 1.0) {
            return Err(Error::Param(format!(
                "max_area_fraction must be in (0, 1], got {}",
                self.max_area_fraction
            )));
        }
        Ok(())
    }
}

/// Inclusive pixel bounding box.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BBox {
    pub x_min: usize,
    pub y_min: usize,
    pub x_max: usize,
    pub y_max: usize,
}

impl BBox {
    pub fn new(x_min: usize, y_min: usize, x_max: usize, y_max: usize) -> Self {
        Self {
            x_min,
            y_min,
            x_max,
            y_max,
        }
    }

    pub fn is_degenerate(&self) -> bool {
        self.x_max < self.x_min || self.y_max < self.y_min
    }

    pub fn area(&self) -> usize {
        if self.is_degenerate() {
            0
        } else {
            (self.x_max - self.x_min + 1) * (self.y_max - self.y_min + 1)
        }
    }

    pub fn intersection_area(&self, other: &BBox) -> usize {
        let x0 = self.x_min.max(other.x_min);
        let y0 = self.y_min.max(other.y_min);
        let x1 = self.x_max.min(other.x_max);
        let y1 = self.y_max.min(other.y_max);
        if x1 < x0 || y1 < y0 {
            0
        } else {
            (x1 - x0 + 1) * (y1 - y0 + 1)
        }
    }
}

impl fmt::Display for BBox {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{},{})", self.x_min, self.y_min, self.x_max, self.y_max)
    }
}

/// Horizontal run of mask pixels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Run {
    pub y: usize,
    pub x: usize,
    pub len: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StableRegion {
    /// 1-based, unique within a [`RegionSet`].
    pub id: usize,
    pub node: NodeId,
    pub polarity: Polarity,
    pub level: u32,
    pub area: usize,
    pub stability: f64,
    pub bbox: BBox,
    pub runs: Vec<Run>,
}

impl StableRegion {
    pub fn pixels(&self, width: usize) -> Vec<usize> {
        runs_to_pixels(&self.runs, width)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegionSet {
    pub width: usize,
    pub height: usize,
    pub params: ExtractParams,
    pub regions: Vec<StableRegion>,
}

impl RegionSet {
    pub fn len(&self) -> usize {
        self.regions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.regions.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroundTruthBox {
    pub label: String,
    pub bbox: BBox,
}

/// For every node, the child with the largest area (ties: smallest first
/// pixel). This is the descending chain used for `A-`.
pub fn path_children(tree: &ComponentTree) -> Vec<Option<NodeId>> {
    tree.nodes()
        .iter()
        .map(|n| {
            n.children.iter().copied().min_by_key(|&c| {
                let c = &tree.nodes()[c];
                (Reverse(c.area), c.first_pixel)
            })
        })
        .collect()
}

fn stability_with(
    tree: &ComponentTree,
    path_child: &[Option<NodeId>],
    node: NodeId,
    delta: u32,
    mode: StabilityMode,
) -> f64 {
    let nodes = tree.nodes();
    let here = &nodes[node];
    let up_target = here.level as u64 + delta as u64;
    let mut up = node;
    while (nodes[up].level as u64) < up_target {
        match nodes[up].parent {
            Some(p) => up = p,
            None => break,
        }
    }
    let down_target = here.level as i64 - delta as i64;
    let mut down = node;
    while nodes[down].level as i64 > down_target {
        match path_child[down] {
            Some(c) => down = c,
            None => break,
        }
    }
    let grow = (nodes[up].area - nodes[down].area) as f64;
    match mode {
        StabilityMode::Difference => grow,
        StabilityMode::Ratio => grow / here.area as f64,
        StabilityMode::Excess => grow - here.area as f64,
    }
}

pub fn stability(tree: &ComponentTree, node: NodeId, delta: u32, mode: StabilityMode) -> Result<f64> {
    tree.node(node)?;
    Ok(stability_with(tree, &path_children(tree), node, delta, mode))
}

/// Stability of every node.
pub fn stabilities(tree: &ComponentTree, delta: u32, mode: StabilityMode) -> Vec<f64> {
    let path_child = path_children(tree);
    (0..tree.len())
        .map(|n| stability_with(tree, &path_child, n, delta, mode))
        .collect()
}

/// Select the nodes whose stability is a local minimum along their path
/// (`<=` the parent's, `<` the path child's, so a plateau yields its deepest
/// node) and whose area lies in `[min_area, max_area_fraction * pixels]`.
pub fn select_stable(tree: &ComponentTree, params: &ExtractParams) -> Result<Vec<(NodeId, f64)>> {
    params.validate()?;
    let path_child = path_children(tree);
    let s: Vec<f64> = (0..tree.len())
        .map(|n| stability_with(tree, &path_child, n, params.delta, params.stability_mode))
        .collect();
    let max_area = params.max_area_fraction * tree.pixel_count() as f64;
    Ok(tree
        .nodes()
        .iter()
        .filter(|n| {
            let parent_ok = n.parent.is_none_or(|p| s[n.id] <= s[p]);
            let child_ok = path_child[n.id].is_none_or(|c| s[n.id] < s[c]);
            parent_ok && child_ok && n.area >= params.min_area && n.area as f64 <= max_area
        })
        .map(|n| (n.id, s[n.id]))
        .collect())
}

pub fn extract_stable(tree: &ComponentTree, params: &ExtractParams) -> Result<RegionSet> {
    extract_tagged(tree, params, params.polarity)
}

/// [`extract_stable`] with every region tagged with `polarity`.
pub fn extract_tagged(tree: &ComponentTree, params: &ExtractParams, polarity: Polarity) -> Result<RegionSet> {
    let selected = select_stable(tree, params)?;
    let (offsets, owned) = tree.owned_pixels();
    let w = tree.width();
    let mut regions = Vec::with_capacity(selected.len());
    let mut stack = Vec::new();
    // stamp[p] == i + 1 marks pixels of the i-th region; rows of the bbox
    // are then scanned instead of sorting the pixel list
    let mut stamp = vec![0u32; tree.pixel_count()];
    for (i, (node, stability)) in selected.into_iter().enumerate() {
        let mark = i as u32 + 1;
        let mut bbox = BBox::new(usize::MAX, usize::MAX, 0, 0);
        stack.push(node);
        while let Some(n) = stack.pop() {
            for &p in &owned[offsets[n]..offsets[n + 1]] {
                stamp[p] = mark;
                let (x, y) = (p % w, p / w);
                bbox.x_min = bbox.x_min.min(x);
                bbox.x_max = bbox.x_max.max(x);
                bbox.y_min = bbox.y_min.min(y);
                bbox.y_max = bbox.y_max.max(y);
            }
            stack.extend_from_slice(&tree.nodes()[n].children);
        }
        let mut runs = Vec::new();
        for y in bbox.y_min..=bbox.y_max {
            let row = &stamp[y * w..(y + 1) * w];
            let mut x = bbox.x_min;
            while x <= bbox.x_max {
                if row[x] != mark {
                    x += 1;
                    continue;
                }
                let start = x;
                while x <= bbox.x_max && row[x] == mark {
                    x += 1;
                }
                runs.push(Run { y, x: start, len: x - start });
            }
        }
        let n = &tree.nodes()[node];
        regions.push(StableRegion {
            id: i + 1,
            node,
            polarity,
            level: n.level,
            area: n.area,
            stability,
            bbox,
            runs,
        });
    }
    Ok(RegionSet {
        width: tree.width(),
        height: tree.height(),
        params: *params,
        regions,
    })
}

/// Bounding box and run-length mask of a node's region.
pub fn rasterize(tree: &ComponentTree, node: NodeId) -> Result<(BBox, Vec<Run>)> {
    let pixels = node_region(tree, node)?;
    Ok(pixels_to_mask(&pixels, tree.width()))
}

/// Mask of an ascending, non-empty pixel list.
pub fn pixels_to_mask(sorted: &[usize], width: usize) -> (BBox, Vec<Run>) {
    let mut runs: Vec<Run> = Vec::new();
    let mut bbox = BBox::new(usize::MAX, usize::MAX, 0, 0);
    for &p in sorted {
        let (x, y) = (p % width, p / width);
        bbox.x_min = bbox.x_min.min(x);
        bbox.x_max = bbox.x_max.max(x);
        bbox.y_min = bbox.y_min.min(y);
        bbox.y_max = bbox.y_max.max(y);
        match runs.last_mut() {
            Some(r) if r.y == y && r.x + r.len == x => r.len += 1,
            _ => runs.push(Run { y, x, len: 1 }),
        }
    }
    (bbox, runs)
}

pub fn runs_to_pixels(runs: &[Run], width: usize) -> Vec<usize> {
    runs.iter()
        .flat_map(|r| (r.x..r.x + r.len).map(move |x| r.y * width + x))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabelPolicy {
    SmallestOnTop,
    LargestOnTop,
}

/// Paint regions into a label image (label = region id); where regions
/// overlap the policy decides which one stays visible.
pub fn label_map(regions: &RegionSet, policy: LabelPolicy) -> LabelImage {
    let mut out = LabelImage::zeros(regions.width, regions.height);
    let mut order: Vec<&StableRegion> = regions.regions.iter().collect();
    // painted first = ends up below; equal areas leave the lower id on top
    match policy {
        LabelPolicy::SmallestOnTop => order.sort_by_key(|r| (Reverse(r.area), Reverse(r.id))),
        LabelPolicy::LargestOnTop => order.sort_by_key(|r| (r.area, Reverse(r.id))),
    }
    for r in order {
        for run in &r.runs {
            let start = run.y * regions.width + run.x;
            out.labels[start..start + run.len].fill(r.id as u32);
        }
    }
    out
}

/// Intersection over union of two inclusive boxes.
pub fn pascal_overlap(region: &BBox, gt: &GroundTruthBox) -> Result<f64> {
    if gt.bbox.is_degenerate() {
        return Err(Error::DegenerateBox(gt.bbox.to_string()));
    }
    if region.is_degenerate() {
        return Ok(0.0);
    }
    let inter = region.intersection_area(&gt.bbox);
    let union = region.area() + gt.bbox.area() - inter;
    Ok(inter as f64 / union as f64)
}

/// Best overlap achieved by any region for one ground-truth box.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxMatch {
    pub label: String,
    pub bbox: BBox,
    pub best_overlap: f64,
    pub best_region: Option<usize>,
    pub matched: bool,
}

pub fn match_boxes(regions: &RegionSet, gts: &[GroundTruthBox], threshold: f64) -> Result<Vec<BoxMatch>> {
    if gts.is_empty() {
        return Err(Error::EmptyGroundTruth);
    }
    gts.iter()
        .map(|gt| {
            if gt.bbox.is_degenerate() || gt.bbox.x_max >= regions.width || gt.bbox.y_max >= regions.height {
                return Err(Error::DegenerateBox(format!("{} {}", gt.label, gt.bbox)));
            }
            let mut best = (0.0, None);
            for r in &regions.regions {
                let o = pascal_overlap(&r.bbox, gt)?;
                if o > best.0 {
                    best = (o, Some(r.id));
                }
            }
            Ok(BoxMatch {
                label: gt.label.clone(),
                bbox: gt.bbox,
                best_overlap: best.0,
                best_region: best.1,
                matched: best.0 > threshold,
            })
        })
        .collect()
}

/// Fraction of ground-truth boxes overlapped by some region by more than
/// `threshold`.
pub fn recall(regions: &RegionSet, gts: &[GroundTruthBox], threshold: f64) -> Result<f64> {
    let matches = match_boxes(regions, gts, threshold)?;
    Ok(matches.iter().filter(|m| m.matched).count() as f64 / matches.len() as f64)
}

/// `.rgn` text:
///
/// ```text
/// RGN1 <width> <height>
/// params delta=<d> min_area=<a> max_area_fraction=<f> mode=<m> polarity=<p>
/// region <id> <node> <polarity> <level> <area> <stability> <x_min> <y_min> <x_max> <y_max> <runs>
/// <y> <x> <len> ...
/// ```
///
/// Each region line is followed by one line of run triples.
pub fn write_rgn(set: &RegionSet) -> String {
    let mut out = String::new();
    let p = &set.params;
    let _ = writeln!(out, "RGN1 {} {}", set.width, set.height);
    let _ = writeln!(
        out,
        "params delta={} min_area={} max_area_fraction={} mode={} polarity={}",
        p.delta, p.min_area, p.max_area_fraction, p.stability_mode, p.polarity
    );
    for r in &set.regions {
        let b = &r.bbox;
        let _ = writeln!(
            out,
            "region {} {} {} {} {} {} {} {} {} {} {}",
            r.id,
            r.node,
            r.polarity,
            r.level,
            r.area,
            r.stability,
            b.x_min,
            b.y_min,
            b.x_max,
            b.y_max,
            r.runs.len()
        );
        let runs: Vec<String> = r.runs.iter().map(|r| format!("{} {} {}", r.y, r.x, r.len)).collect();
        let _ = writeln!(out, "{}", runs.join(" "));
    }
    out
}

fn field<T: FromStr>(s: &str, line: usize, what: &str) -> Result<T> {
    s.parse()
        .map_err(|_| parse_err(line, format!("invalid {what} '{s}'")))
}

pub fn read_rgn(text: &str) -> Result<RegionSet> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (_, header) = lines.next().ok_or_else(|| parse_err(1, "empty file"))?;
    let h: Vec<&str> = header.split_ascii_whitespace().collect();
    if h.len() != 3 || h[0] != "RGN1" {
        return Err(parse_err(1, "expected 'RGN1 width height'"));
    }
    let width: usize = field(h[1], 1, "width")?;
    let height: usize = field(h[2], 1, "height")?;
    let (ln, params_line) = lines.next().ok_or_else(|| parse_err(2, "missing params line"))?;
    let mut params = ExtractParams::default();
    let mut it = params_line.split_ascii_whitespace();
    if it.next() != Some("params") {
        return Err(parse_err(ln, "expected params line"));
    }
    for kv in it {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| parse_err(ln, format!("bad parameter '{kv}'")))?;
        match k {
            "delta" => params.delta = field(v, ln, k)?,
            "min_area" => params.min_area = field(v, ln, k)?,
            "max_area_fraction" => params.max_area_fraction = field(v, ln, k)?,
            "mode" => params.stability_mode = v.parse().map_err(|_| parse_err(ln, "bad mode"))?,
            "polarity" => params.polarity = v.parse().map_err(|_| parse_err(ln, "bad polarity"))?,
            _ => return Err(parse_err(ln, format!("unknown parameter '{k}'"))),
        }
    }
    let mut regions = Vec::new();
    while let Some((ln, line)) = lines.next() {
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split_ascii_whitespace().collect();
        if f.len() != 12 || f[0] != "region" {
            return Err(parse_err(ln, "expected a region line with 11 fields"));
        }
        let nruns: usize = field(f[11], ln, "run count")?;
        let (rl, runs_line) = lines.next().ok_or_else(|| parse_err(ln + 1, "missing runs line"))?;
        let nums: Vec<usize> = runs_line
            .split_ascii_whitespace()
            .map(|s| field(s, rl, "run value"))
            .collect::<Result<_>>()?;
        if nums.len() != nruns * 3 {
            return Err(parse_err(rl, format!("expected {nruns} runs")));
        }
        let runs: Vec<Run> = nums
            .chunks_exact(3)
            .map(|c| Run {
                y: c[0],
                x: c[1],
                len: c[2],
            })
            .collect();
        let region = StableRegion {
            id: field(f[1], ln, "id")?,
            node: field(f[2], ln, "node")?,
            polarity: f[3].parse().map_err(|_| parse_err(ln, "bad polarity"))?,
            level: field(f[4], ln, "level")?,
            area: field(f[5], ln, "area")?,
            stability: field(f[6], ln, "stability")?,
            bbox: BBox::new(
                field(f[7], ln, "x_min")?,
                field(f[8], ln, "y_min")?,
                field(f[9], ln, "x_max")?,
                field(f[10], ln, "y_max")?,
            ),
            runs,
        };
        let covered: usize = region.runs.iter().map(|r| r.len).sum();
        if covered != region.area {
            return Err(parse_err(ln, format!("area {} but runs cover {covered}", region.area)));
        }
        if region
            .runs
            .iter()
            .any(|r| r.y >= height || r.len == 0 || r.x + r.len > width)
        {
            return Err(parse_err(rl, "run outside the image"));
        }
        regions.push(region);
    }
    Ok(RegionSet {
        width,
        height,
        params,
        regions,
    })
}

/// Ground truth: one `label x_min y_min x_max y_max` box per line,
/// inclusive coordinates. Blank lines and `#` comments are skipped.
pub fn read_ground_truth(text: &str) -> Result<Vec<GroundTruthBox>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let ln = i + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let f: Vec<&str> = line.split_ascii_whitespace().collect();
        if f.len() != 5 {
            return Err(parse_err(ln, "expected 'label x_min y_min x_max y_max'"));
        }
        let bbox = BBox::new(
            field(f[1], ln, "x_min")?,
            field(f[2], ln, "y_min")?,
            field(f[3], ln, "x_max")?,
            field(f[4], ln, "y_max")?,
        );
        if bbox.is_degenerate() {
            return Err(Error::DegenerateBox(format!("{} {bbox}", f[0])));
        }
        out.push(GroundTruthBox {
            label: f[0].to_string(),
            bbox,
        });
    }
    Ok(out)
}

pub fn write_ground_truth(gts: &[GroundTruthBox]) -> String {
    gts.iter()
        .map(|g| {
            format!(
                "{} {} {} {} {}\n",
                g.label, g.bbox.x_min, g.bbox.y_min, g.bbox.x_max, g.bbox.y_max
            )
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain() -> ComponentTree {
        // areas 10 ⊂ 50 ⊂ 100 at levels 0, 5, 10 on a 10x10 image
        let mut owner = vec![0; 100];
        owner[..50].fill(1);
        owner[..10].fill(2);
        ComponentTree::from_parts(10, 10, &[None, Some(0), Some(1)], &[10, 5, 0], owner).unwrap()
    }

    fn gt(x0: usize, y0: usize, x1: usize, y1: usize) -> GroundTruthBox {
        GroundTruthBox {
            label: "g".into(),
            bbox: BBox::new(x0, y0, x1, y1),
        }
    }

    #[test]
    fn single_node_stability_is_zero() {
        let t = ComponentTree::single(4, 4, 0);
        assert_eq!(stability(&t, 0, 5, StabilityMode::Difference).unwrap(), 0.0);
        assert!(matches!(stability(&t, 1, 5, StabilityMode::Difference), Err(Error::InvalidNode(1))));
    }

    #[test]
    fn chain_stability() {
        let t = chain();
        assert_eq!(stability(&t, 1, 5, StabilityMode::Difference).unwrap(), 90.0);
        assert_eq!(stability(&t, 1, 5, StabilityMode::Ratio).unwrap(), 90.0 / 50.0);
        assert_eq!(stability(&t, 1, 5, StabilityMode::Excess).unwrap(), 40.0);
        // a window too small to reach either neighbor sees only the node itself
        assert_eq!(stability(&t, 1, 3, StabilityMode::Difference).unwrap(), 90.0);
    }

    #[test]
    fn rasterize_root_and_pixel() {
        let t = ComponentTree::single(4, 3, 0);
        let (bbox, runs) = rasterize(&t, 0).unwrap();
        assert_eq!(bbox, BBox::new(0, 0, 3, 2));
        assert_eq!(runs, (0..3).map(|y| Run { y, x: 0, len: 4 }).collect::<Vec<_>>());

        let mut owner = vec![0; 12];
        owner[6] = 1;
        let t = ComponentTree::from_parts(4, 3, &[None, Some(0)], &[1, 0], owner).unwrap();
        let (bbox, runs) = rasterize(&t, 1).unwrap();
        assert_eq!(bbox, BBox::new(2, 1, 2, 1));
        assert_eq!(runs, vec![Run { y: 1, x: 2, len: 1 }]);
    }

    #[test]
    fn label_map_policies() {
        let t = chain();
        let params = ExtractParams {
            min_area: 1,
            max_area_fraction: 1.0,
            ..ExtractParams::default()
        };
        let mut set = extract_stable(&t, &params).unwrap();
        set.regions.clear();
        assert!(label_map(&set, LabelPolicy::SmallestOnTop).labels.iter().all(|&l| l == 0));
        for (i, node) in [1usize, 2].into_iter().enumerate() {
            let (bbox, runs) = rasterize(&t, node).unwrap();
            set.regions.push(StableRegion {
                id: i + 1,
                node,
                polarity: Polarity::None,
                level: 0,
                area: t.nodes()[node].area,
                stability: 0.0,
                bbox,
                runs,
            });
        }
        let small = label_map(&set, LabelPolicy::SmallestOnTop);
        assert_eq!(small.labels[0], 2);
        assert_eq!(small.labels[20], 1);
        assert_eq!(small.labels[60], 0);
        let large = label_map(&set, LabelPolicy::LargestOnTop);
        assert_eq!(large.labels[0], 1);
    }

    #[test]
    fn overlap_arithmetic() {
        let a = BBox::new(0, 0, 9, 9);
        assert_eq!(pascal_overlap(&a, &gt(0, 0, 9, 9)).unwrap(), 1.0);
        assert_eq!(pascal_overlap(&a, &gt(20, 20, 29, 29)).unwrap(), 0.0);
        assert_eq!(pascal_overlap(&a, &gt(5, 0, 14, 9)).unwrap(), 1.0 / 3.0);
        assert!(matches!(pascal_overlap(&a, &gt(5, 5, 4, 9)), Err(Error::DegenerateBox(_))));
    }

    #[test]
    fn recall_edge_cases() {
        let set = RegionSet {
            width: 20,
            height: 20,
            params: ExtractParams::default(),
            regions: vec![],
        };
        assert_eq!(recall(&set, &[gt(0, 0, 3, 3)], 0.5).unwrap(), 0.0);
        assert!(matches!(recall(&set, &[], 0.5), Err(Error::EmptyGroundTruth)));
        assert!(recall(&set, &[gt(0, 0, 30, 3)], 0.5).is_err());
    }

    #[test]
    fn param_validation() {
        let bad = [
            ExtractParams { delta: 0, ..ExtractParams::default() },
            ExtractParams { min_area: 0, ..ExtractParams::default() },
            ExtractParams { max_area_fraction: 0.0, ..ExtractParams::default() },
            ExtractParams { max_area_fraction: 1.5, ..ExtractParams::default() },
        ];
        for p in bad {
            assert!(p.validate().is_err(), "{p:?}");
        }
    }

    #[test]
    fn rgn_rejects_inconsistent_area() {
        let text = "RGN1 4 4\nparams delta=5 min_area=1 max_area_fraction=1 mode=difference polarity=none\n\
                    region 1 0 none 0 3 0 0 0 1 0 1\n0 0 2\n";
        assert!(read_rgn(text).is_err());
    }

    #[test]
    fn ground_truth_parsing() {
        let gts = read_ground_truth("# chars\nA 1 2 3 4\n\nB 0 0 0 0\n").unwrap();
        assert_eq!(gts.len(), 2);
        assert_eq!(gts[0].bbox, BBox::new(1, 2, 3, 4));
        assert_eq!(read_ground_truth(&write_ground_truth(&gts)).unwrap(), gts);
        assert!(read_ground_truth("A 3 0 1 1\n").is_err());
        assert!(read_ground_truth("A 3 0 1\n").is_err());
    }

    #[test]
    fn enum_text_roundtrip() {
        for m in [StabilityMode::Difference, StabilityMode::Ratio, StabilityMode::Excess] {
            assert_eq!(m.to_string().parse::<StabilityMode>().unwrap(), m);
        }
        for p in [Polarity::None, Polarity::Light, Polarity::Dark, Polarity::Both] {
            assert_eq!(p.to_string().parse::<Polarity>().unwrap(), p);
        }
        assert!("up".parse::<Polarity>().is_err());
    }
}
