//! Component-trees built by local flooding over a leveled node graph.
//!
//! The engine is generic over [`LeveledGraph`]: on a [`DerivateGrid`](crate::dgraph::DerivateGrid)
//! it yields the derivate-based tree whose components are pixel sets
//! connected through derivates at or below a level; on a [`PixelGrid`] it
//! yields the classical gray-value tree used for MSER.
//!
//! Construction follows the linear-time flooding scheme: start anywhere,
//! descend into strictly lower unvisited neighbors, park visited nodes in a
//! stack with one slot per level, and grow the component of the current level
//! whenever a node has no lower unvisited neighbor left. Equal-level
//! neighbors are parked and merged into the same component, which makes the
//! result independent of the start node and of the neighbor order.

use std::cmp::Reverse;
use std::fmt::Write as _;

use crate::error::{parse_err, Error, Result};
use crate::unionfind::UnionFind;

/// A graph whose nodes carry a level in `0..bins` (anything `>= bins` is a
/// sentinel and never flooded) and cover one or two pixels each.
pub trait LeveledGraph {
    fn width(&self) -> usize;
    fn height(&self) -> usize;

    fn pixel_count(&self) -> usize {
        self.width() * self.height()
    }

    fn node_count(&self) -> usize;
    fn bins(&self) -> u32;
    fn level(&self, node: usize) -> u32;

    /// Number of neighbor slots per node.
    fn degree(&self) -> usize;

    /// Neighbor in `slot`, `None` when the slot is empty (image border).
    fn neighbor(&self, node: usize, slot: usize) -> Option<usize>;

    /// The pixel(s) a node stands for.
    fn pixels(&self, node: usize) -> (usize, Option<usize>);

    fn is_interior(&self, node: usize) -> bool {
        self.level(node) < self.bins()
    }
}

/// Pixels as nodes, 4-connected, one level per pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct PixelGrid {
    width: usize,
    height: usize,
    bins: u32,
    levels: Vec<u32>,
}

impl PixelGrid {
    pub fn new(width: usize, height: usize, bins: u32, levels: Vec<u32>) -> Result<Self> {
        if levels.len() != width * height {
            return Err(Error::Param(format!(
                "expected {} levels, got {}",
                width * height,
                levels.len()
            )));
        }
        if let Some(l) = levels.iter().find(|&&l| l >= bins) {
            return Err(Error::Param(format!("level {l} out of range for {bins} bins")));
        }
        Ok(Self {
            width,
            height,
            bins,
            levels,
        })
    }

    /// Same pixels with every level mirrored (`bins - 1 - level`).
    pub fn inverted(&self) -> PixelGrid {
        PixelGrid {
            levels: self.levels.iter().map(|l| self.bins - 1 - l).collect(),
            ..self.clone()
        }
    }

    pub fn levels(&self) -> &[u32] {
        &self.levels
    }
}

impl LeveledGraph for PixelGrid {
    fn width(&self) -> usize {
        self.width
    }

    fn height(&self) -> usize {
        self.height
    }

    fn node_count(&self) -> usize {
        self.levels.len()
    }

    fn bins(&self) -> u32 {
        self.bins
    }

    #[inline]
    fn level(&self, node: usize) -> u32 {
        self.levels[node]
    }

    fn degree(&self) -> usize {
        4
    }

    #[inline]
    fn neighbor(&self, node: usize, slot: usize) -> Option<usize> {
        let (x, y) = (node % self.width, node / self.width);
        match slot {
            0 if x > 0 => Some(node - 1),
            1 if x + 1 < self.width => Some(node + 1),
            2 if y > 0 => Some(node - self.width),
            3 if y + 1 < self.height => Some(node + self.width),
            _ => None,
        }
    }

    #[inline]
    fn pixels(&self, node: usize) -> (usize, Option<usize>) {
        (node, None)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TreeBuildParams {
    pub bins: u32,
    /// Components smaller than this never become nodes; their pixels stay
    /// with the first emitted ancestor. The root is always emitted.
    pub min_area: usize,
    /// Node to start flooding from; `None` picks the lowest interior id.
    pub start_node: Option<usize>,
}

impl TreeBuildParams {
    pub fn new(bins: u32) -> Self {
        Self {
            bins,
            min_area: 1,
            start_node: None,
        }
    }

    pub fn with_min_area(mut self, min_area: usize) -> Self {
        self.min_area = min_area;
        self
    }

    pub fn with_start(mut self, start: usize) -> Self {
        self.start_node = Some(start);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.bins < 2 {
            return Err(Error::Param(format!("bins must be at least 2, got {}", self.bins)));
        }
        if self.min_area < 1 {
            return Err(Error::Param("min_area must be at least 1".into()));
        }
        Ok(())
    }
}

pub type NodeId = usize;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComponentNode {
    pub id: NodeId,
    pub parent: Option<NodeId>,
    /// Level at which the component came into existence.
    pub level: u32,
    /// Number of distinct pixels.
    pub area: usize,
    /// Smallest pixel index in the component.
    pub first_pixel: usize,
    pub children: Vec<NodeId>,
}

/// A rooted tree of nested components. `pixel_to_node[p]` is the smallest
/// node containing pixel `p`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComponentTree {
    width: usize,
    height: usize,
    nodes: Vec<ComponentNode>,
    root: NodeId,
    pixel_to_node: Vec<NodeId>,
}

impl ComponentTree {
    /// Assemble a tree from parent links, levels and the smallest owning node
    /// of every pixel. Areas, children and representative pixels are derived.
    /// Requires strictly increasing levels along parent links.
    pub fn from_parts(
        width: usize,
        height: usize,
        parents: &[Option<NodeId>],
        levels: &[u32],
        pixel_owner: Vec<NodeId>,
    ) -> Result<ComponentTree> {
        let n = parents.len();
        if n == 0 || levels.len() != n || pixel_owner.len() != width * height {
            return Err(Error::Param("inconsistent tree parts".into()));
        }
        let mut roots = (0..n).filter(|&i| parents[i].is_none());
        let root = roots.next().ok_or_else(|| Error::Param("tree has no root".into()))?;
        if roots.next().is_some() {
            return Err(Error::Param("tree has several roots".into()));
        }
        let mut area = vec![0usize; n];
        let mut first = vec![usize::MAX; n];
        for (p, &o) in pixel_owner.iter().enumerate() {
            if o >= n {
                return Err(Error::InvalidNode(o));
            }
            area[o] += 1;
            first[o] = first[o].min(p);
        }
        let mut children = vec![Vec::new(); n];
        for (i, parent) in parents.iter().enumerate() {
            if let Some(p) = *parent {
                if p >= n {
                    return Err(Error::InvalidNode(p));
                }
                if levels[p] <= levels[i] {
                    return Err(Error::Param(format!(
                        "node {i} (level {}) has parent {p} at level {}",
                        levels[i], levels[p]
                    )));
                }
                children[p].push(i);
            }
        }
        // strict level increase makes ascending level a bottom-up order
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by_key(|&i| levels[i]);
        for &i in &order {
            if let Some(p) = parents[i] {
                area[p] += area[i];
                first[p] = first[p].min(first[i]);
            }
        }
        let nodes = (0..n)
            .map(|i| ComponentNode {
                id: i,
                parent: parents[i],
                level: levels[i],
                area: area[i],
                first_pixel: first[i],
                children: std::mem::take(&mut children[i]),
            })
            .collect();
        Ok(ComponentTree {
            width,
            height,
            nodes,
            root,
            pixel_to_node: pixel_owner,
        })
    }

    /// Tree of a single node holding every pixel.
    pub fn single(width: usize, height: usize, level: u32) -> ComponentTree {
        ComponentTree::from_parts(width, height, &[None], &[level], vec![0; width * height])
            .expect("single node tree")
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn nodes(&self) -> &[ComponentNode] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> Result<&ComponentNode> {
        self.nodes.get(id).ok_or(Error::InvalidNode(id))
    }

    pub fn pixel_to_node(&self) -> &[NodeId] {
        &self.pixel_to_node
    }

    /// Pixels owned directly by each node (not by a descendant), as
    /// `(offsets, pixels)` with node `i` owning `pixels[offsets[i]..offsets[i + 1]]`.
    pub fn owned_pixels(&self) -> (Vec<usize>, Vec<usize>) {
        let mut offsets = vec![0usize; self.nodes.len() + 1];
        for &o in &self.pixel_to_node {
            offsets[o + 1] += 1;
        }
        for i in 0..self.nodes.len() {
            offsets[i + 1] += offsets[i];
        }
        let mut fill = offsets.clone();
        let mut pixels = vec![0usize; self.pixel_to_node.len()];
        for (p, &o) in self.pixel_to_node.iter().enumerate() {
            pixels[fill[o]] = p;
            fill[o] += 1;
        }
        (offsets, pixels)
    }

    /// Ids of `node` and all its descendants.
    pub fn subtree(&self, node: NodeId) -> Result<Vec<NodeId>> {
        self.node(node)?;
        let mut out = vec![node];
        let mut i = 0;
        while i < out.len() {
            out.extend_from_slice(&self.nodes[out[i]].children);
            i += 1;
        }
        Ok(out)
    }

    /// Check the structural invariants; returns a description of the first
    /// violation.
    pub fn validate(&self) -> std::result::Result<(), String> {
        let n = self.nodes.len();
        if self.root >= n || self.nodes[self.root].parent.is_some() {
            return Err("root is missing or has a parent".into());
        }
        if self.nodes[self.root].area != self.pixel_count() {
            return Err(format!(
                "root area {} != pixel count {}",
                self.nodes[self.root].area,
                self.pixel_count()
            ));
        }
        let mut owned = vec![0usize; n];
        for &o in &self.pixel_to_node {
            if o >= n {
                return Err(format!("pixel owner {o} out of range"));
            }
            owned[o] += 1;
        }
        for (i, node) in self.nodes.iter().enumerate() {
            if node.id != i {
                return Err(format!("node {i} carries id {}", node.id));
            }
            if node.area == 0 {
                return Err(format!("node {i} is empty"));
            }
            match node.parent {
                None if i != self.root => return Err(format!("second root {i}")),
                Some(p) if p >= n => return Err(format!("node {i} has invalid parent {p}")),
                Some(p) => {
                    if self.nodes[p].level <= node.level {
                        return Err(format!("level does not increase from {i} to {p}"));
                    }
                    if !self.nodes[p].children.contains(&i) {
                        return Err(format!("{p} does not list child {i}"));
                    }
                }
                None => {}
            }
            let child_sum: usize = node.children.iter().map(|&c| self.nodes[c].area).sum();
            if node.area != child_sum + owned[i] {
                return Err(format!(
                    "node {i}: area {} != children {} + owned {}",
                    node.area, child_sum, owned[i]
                ));
            }
            for &c in &node.children {
                if self.nodes[c].parent != Some(i) {
                    return Err(format!("child {c} of {i} points elsewhere"));
                }
            }
        }
        // reachability from the root rules out cycles
        let reach = self.subtree(self.root).map_err(|e| e.to_string())?;
        if reach.len() != n {
            return Err(format!("{} of {n} nodes reachable from root", reach.len()));
        }
        let mut first = vec![usize::MAX; n];
        for (p, &o) in self.pixel_to_node.iter().enumerate() {
            first[o] = first[o].min(p);
        }
        // reverse breadth-first order visits children before parents
        for &id in reach.iter().rev() {
            for &c in &self.nodes[id].children {
                first[id] = first[id].min(first[c]);
            }
            if first[id] != self.nodes[id].first_pixel {
                return Err(format!(
                    "node {id}: first_pixel {} != {}",
                    self.nodes[id].first_pixel, first[id]
                ));
            }
        }
        Ok(())
    }

    /// True when no node has a single child of equal area and ids follow the
    /// canonical order.
    pub fn is_canonical(&self) -> bool {
        let single_equal = self.nodes.iter().any(|n| {
            n.children.len() == 1 && self.nodes[n.children[0]].area == n.area
        });
        let ordered = self
            .nodes
            .windows(2)
            .all(|w| (Reverse(w[0].level), w[0].first_pixel) < (Reverse(w[1].level), w[1].first_pixel));
        !single_equal && ordered && self.root == 0
    }
}

/// Counters gathered during a flooding build.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BuildStats {
    /// Interior graph nodes in the input.
    pub interior: usize,
    /// Nodes merged into a component; equals `interior` for a complete pass.
    pub merged: usize,
    /// Nodes emitted before canonicalization.
    pub raw_nodes: usize,
}

pub fn build_tree<G: LeveledGraph>(graph: &G, params: &TreeBuildParams) -> Result<ComponentTree> {
    build_tree_with_stats(graph, params).map(|(t, _)| t)
}

pub fn build_tree_with_stats<G: LeveledGraph>(
    graph: &G,
    params: &TreeBuildParams,
) -> Result<(ComponentTree, BuildStats)> {
    params.validate()?;
    if params.bins != graph.bins() {
        return Err(Error::Param(format!(
            "params use {} bins, graph has {}",
            params.bins,
            graph.bins()
        )));
    }
    if graph.pixel_count() == 0 {
        return Err(Error::EmptyGraph);
    }
    let start = match params.start_node {
        Some(s) if s >= graph.node_count() => return Err(Error::InvalidNode(s)),
        Some(s) if !graph.is_interior(s) => return Err(Error::Sentinel(s)),
        Some(s) => Some(s),
        None => (0..graph.node_count()).find(|&n| graph.is_interior(n)),
    };
    let Some(start) = start else {
        // no interior node: a single pixel, or nothing connects
        return Ok((
            ComponentTree::single(graph.width(), graph.height(), 0),
            BuildStats::default(),
        ));
    };
    let mut flooder = Flooder::new(graph, params.min_area);
    let raw = flooder.run(start);
    let stats = BuildStats {
        interior: (0..graph.node_count()).filter(|&n| graph.is_interior(n)).count(),
        merged: flooder.merged,
        raw_nodes: raw.len(),
    };
    Ok((canonicalize(&raw), stats))
}

const NONE: u32 = u32::MAX;

const UNSEEN: u8 = 0;
const QUEUED: u8 = 1;
const MERGED: u8 = 2;

/// A component under construction on the flooding stack. Emitted children
/// and not-yet-owned pixels are kept as intrusive linked lists.
#[derive(Debug, Clone, Copy)]
struct Comp {
    level: u32,
    /// Level of the last growth not yet captured by an emitted node.
    grown: u32,
    rep: u32,
    child_head: u32,
    child_tail: u32,
    pix_head: u32,
    pix_tail: u32,
}

impl Comp {
    fn new(level: u32) -> Self {
        Self {
            level,
            grown: NONE,
            rep: NONE,
            child_head: NONE,
            child_tail: NONE,
            pix_head: NONE,
            pix_tail: NONE,
        }
    }
}

struct Flooder<'g, G> {
    graph: &'g G,
    bins: u32,
    min_area: usize,
    state: Vec<u8>,
    next_slot: Vec<u8>,
    buckets: Vec<Vec<u32>>,
    lowest: usize,
    uf: UnionFind,
    assigned: Vec<bool>,
    pixel_next: Vec<u32>,
    owner: Vec<u32>,
    raw_parent: Vec<u32>,
    raw_level: Vec<u32>,
    raw_sibling: Vec<u32>,
    stack: Vec<Comp>,
    merged: usize,
}

impl<'g, G: LeveledGraph> Flooder<'g, G> {
    fn new(graph: &'g G, min_area: usize) -> Self {
        let pixels = graph.pixel_count();
        let bins = graph.bins();
        Self {
            graph,
            bins,
            min_area,
            state: vec![UNSEEN; graph.node_count()],
            next_slot: vec![0; graph.node_count()],
            buckets: vec![Vec::new(); bins as usize],
            lowest: bins as usize,
            uf: UnionFind::new(pixels),
            assigned: vec![false; pixels],
            pixel_next: vec![NONE; pixels],
            owner: vec![NONE; pixels],
            raw_parent: Vec::new(),
            raw_level: Vec::new(),
            raw_sibling: Vec::new(),
            stack: Vec::new(),
            merged: 0,
        }
    }

    fn run(&mut self, start: usize) -> ComponentTree {
        let degree = self.graph.degree();
        self.stack.push(Comp::new(self.bins));
        let mut cur = start;
        let mut cur_level = self.graph.level(cur);
        self.state[cur] = QUEUED;
        self.stack.push(Comp::new(cur_level));
        loop {
            let mut descended = false;
            while (self.next_slot[cur] as usize) < degree {
                let slot = self.next_slot[cur] as usize;
                self.next_slot[cur] += 1;
                let Some(nb) = self.graph.neighbor(cur, slot) else {
                    continue;
                };
                if self.state[nb] != UNSEEN {
                    continue;
                }
                let level = self.graph.level(nb);
                if level >= self.bins {
                    continue;
                }
                self.state[nb] = QUEUED;
                if level >= cur_level {
                    self.park(nb, level);
                } else {
                    self.park(cur, cur_level);
                    cur = nb;
                    cur_level = level;
                    self.stack.push(Comp::new(level));
                    descended = true;
                    break;
                }
            }
            if descended {
                continue;
            }
            self.accumulate(cur);
            let Some((node, level)) = self.pop_lowest() else {
                break;
            };
            if level > cur_level {
                self.process_stack(level);
            }
            cur = node;
            cur_level = level;
        }
        debug_assert_eq!(self.stack.len(), 2, "flooding left unmerged components");
        while self.stack.len() > 2 {
            let top = self.stack.pop().unwrap();
            self.merge_into_top(top);
        }
        let mut root = self.stack.pop().unwrap();
        // a suppressed root may have been raised past the level it completed at
        if root.grown != NONE {
            root.level = root.grown;
        }
        let root_id = self.emit(&mut root, true).expect("root is always emitted");
        let pixel_owner = self
            .owner
            .iter()
            .map(|&o| if o == NONE { root_id } else { o } as usize)
            .collect();
        let parents: Vec<Option<usize>> = self
            .raw_parent
            .iter()
            .map(|&p| (p != NONE).then_some(p as usize))
            .collect();
        ComponentTree::from_parts(
            self.graph.width(),
            self.graph.height(),
            &parents,
            &self.raw_level,
            pixel_owner,
        )
        .expect("flooding produces a well-formed tree")
    }

    #[inline]
    fn park(&mut self, node: usize, level: u32) {
        self.buckets[level as usize].push(node as u32);
        self.lowest = self.lowest.min(level as usize);
    }

    #[inline]
    fn pop_lowest(&mut self) -> Option<(usize, u32)> {
        while self.lowest < self.buckets.len() {
            if let Some(n) = self.buckets[self.lowest].pop() {
                return Some((n as usize, self.lowest as u32));
            }
            self.lowest += 1;
        }
        None
    }

    /// Merge the pixels of `node` into the component on top of the stack.
    fn accumulate(&mut self, node: usize) {
        debug_assert_eq!(self.state[node], QUEUED, "node {node} merged twice");
        self.state[node] = MERGED;
        self.merged += 1;
        let (a, b) = self.graph.pixels(node);
        self.add_pixel(a);
        if let Some(b) = b {
            self.add_pixel(b);
        }
    }

    #[inline]
    fn add_pixel(&mut self, p: usize) {
        let top = self.stack.len() - 1;
        if !self.assigned[p] {
            self.assigned[p] = true;
            let comp = &mut self.stack[top];
            comp.grown = comp.level;
            if comp.pix_tail == NONE {
                comp.pix_head = p as u32;
            } else {
                self.pixel_next[comp.pix_tail as usize] = p as u32;
            }
            comp.pix_tail = p as u32;
        }
        let rep = self.stack[top].rep;
        self.stack[top].rep = if rep == NONE {
            self.uf.find(p) as u32
        } else {
            self.uf.union(rep as usize, p) as u32
        };
    }

    fn area(&mut self, comp: &Comp) -> usize {
        if comp.rep == NONE {
            0
        } else {
            self.uf.set_size(comp.rep as usize)
        }
    }

    /// Turn the current state of `comp` into a tree node unless it is below
    /// the minimum area. Children and pending pixels are handed to the node.
    fn emit(&mut self, comp: &mut Comp, force: bool) -> Option<u32> {
        let area = self.area(comp);
        if !force && (area == 0 || area < self.min_area) {
            return None;
        }
        let id = self.raw_level.len() as u32;
        self.raw_level.push(comp.level);
        self.raw_parent.push(NONE);
        self.raw_sibling.push(NONE);
        let mut c = comp.child_head;
        while c != NONE {
            self.raw_parent[c as usize] = id;
            c = self.raw_sibling[c as usize];
        }
        let mut p = comp.pix_head;
        while p != NONE {
            self.owner[p as usize] = id;
            p = self.pixel_next[p as usize];
        }
        comp.grown = NONE;
        comp.child_head = NONE;
        comp.child_tail = NONE;
        comp.pix_head = NONE;
        comp.pix_tail = NONE;
        Some(id)
    }

    fn push_child(&mut self, comp: &mut Comp, id: u32) {
        if comp.child_tail == NONE {
            comp.child_head = id;
        } else {
            self.raw_sibling[comp.child_tail as usize] = id;
        }
        comp.child_tail = id;
    }

    /// Called when flooding moves up to `new_level`: finalize every
    /// component below it.
    fn process_stack(&mut self, new_level: u32) {
        loop {
            let mut top = self.stack.pop().expect("component stack underflow");
            let second_level = self.stack.last().expect("sentinel component").level;
            if new_level < second_level {
                if let Some(id) = self.emit(&mut top, false) {
                    self.push_child(&mut top, id);
                }
                top.level = new_level;
                self.stack.push(top);
                return;
            }
            self.merge_into_top(top);
            if new_level <= second_level {
                return;
            }
        }
    }

    fn merge_into_top(&mut self, mut top: Comp) {
        let emitted = self.emit(&mut top, false);
        let mut second = *self.stack.last().unwrap();
        match emitted {
            Some(id) => self.push_child(&mut second, id),
            None => {
                if top.child_head != NONE {
                    if second.child_tail == NONE {
                        second.child_head = top.child_head;
                    } else {
                        self.raw_sibling[second.child_tail as usize] = top.child_head;
                    }
                    second.child_tail = top.child_tail;
                }
                if top.pix_head != NONE {
                    if second.pix_tail == NONE {
                        second.pix_head = top.pix_head;
                    } else {
                        self.pixel_next[second.pix_tail as usize] = top.pix_head;
                    }
                    second.pix_tail = top.pix_tail;
                }
            }
        }
        if top.rep != NONE {
            // merging into an empty placeholder adds no pixels to the set
            second.grown = if second.rep == NONE { top.grown } else { second.level };
            second.rep = if second.rep == NONE {
                top.rep
            } else {
                self.uf.union(second.rep as usize, top.rep as usize) as u32
            };
        }
        *self.stack.last_mut().unwrap() = second;
    }
}

/// Normal form used for every tree comparison: nodes with a single child of
/// equal area are folded into that child (which keeps the lower level) and
/// ids are assigned by descending level, then ascending first pixel, so the
/// root is node 0.
pub fn canonicalize(tree: &ComponentTree) -> ComponentTree {
    let n = tree.nodes.len();
    let removed: Vec<bool> = tree
        .nodes
        .iter()
        .map(|node| node.children.len() == 1 && tree.nodes[node.children[0]].area == node.area)
        .collect();
    let kept_parent = |mut id: NodeId| -> Option<NodeId> {
        loop {
            match tree.nodes[id].parent {
                None => return None,
                Some(p) if removed[p] => id = p,
                Some(p) => return Some(p),
            }
        }
    };
    let mut kept: Vec<NodeId> = (0..n).filter(|&i| !removed[i]).collect();
    kept.sort_by_key(|&i| (Reverse(tree.nodes[i].level), tree.nodes[i].first_pixel));
    let mut new_id = vec![usize::MAX; n];
    for (new, &old) in kept.iter().enumerate() {
        new_id[old] = new;
    }
    // a removed node owns no pixels, but map defensively to its kept descendant
    let resolve = |mut id: NodeId| {
        while removed[id] {
            id = tree.nodes[id].children[0];
        }
        new_id[id]
    };
    let parents: Vec<Option<NodeId>> = kept
        .iter()
        .map(|&old| kept_parent(old).map(|p| new_id[p]))
        .collect();
    let levels: Vec<u32> = kept.iter().map(|&old| tree.nodes[old].level).collect();
    let owner = tree.pixel_to_node.iter().map(|&o| resolve(o)).collect();
    let mut out = ComponentTree::from_parts(tree.width, tree.height, &parents, &levels, owner)
        .expect("canonicalization preserves structure");
    for node in &mut out.nodes {
        node.children.sort_unstable();
    }
    out
}

/// Pixel indices of a node's component, ascending.
pub fn node_region(tree: &ComponentTree, node: NodeId) -> Result<Vec<usize>> {
    let members = tree.subtree(node)?;
    let mut inside = vec![false; tree.len()];
    for m in members {
        inside[m] = true;
    }
    Ok(tree
        .pixel_to_node
        .iter()
        .enumerate()
        .filter(|(_, &o)| inside[o])
        .map(|(p, _)| p)
        .collect())
}

/// Deterministic text form: one node per line (`id parent level area
/// first_pixel`, parent `-1` for the root, root first), followed by
/// `r node start length` runs of consecutive pixels whose smallest node is
/// not the root.
pub fn serialize_tree(tree: &ComponentTree) -> String {
    let mut out = String::new();
    let mut order: Vec<&ComponentNode> = tree.nodes.iter().collect();
    order.sort_by_key(|n| (n.id != tree.root, n.id));
    for n in order {
        let parent = n.parent.map_or(-1, |p| p as i64);
        let _ = writeln!(out, "{} {} {} {} {}", n.id, parent, n.level, n.area, n.first_pixel);
    }
    let owners = &tree.pixel_to_node;
    let mut p = 0;
    while p < owners.len() {
        let o = owners[p];
        let start = p;
        while p < owners.len() && owners[p] == o {
            p += 1;
        }
        if o != tree.root {
            let _ = writeln!(out, "r {} {} {}", o, start, p - start);
        }
    }
    out
}

/// Inverse of [`serialize_tree`]; rejects text whose declared areas or
/// representative pixels disagree with the structure.
pub fn parse_tree(text: &str, width: usize, height: usize) -> Result<ComponentTree> {
    let mut declared = Vec::new();
    let mut runs = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        let fields: Vec<&str> = line.split_ascii_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        let num = |s: &str| -> Result<i64> {
            s.parse().map_err(|_| parse_err(lineno, format!("bad number '{s}'")))
        };
        if fields[0] == "r" {
            if fields.len() != 4 {
                return Err(parse_err(lineno, "run needs 3 fields"));
            }
            let v: Vec<i64> = fields[1..].iter().map(|s| num(s)).collect::<Result<_>>()?;
            if v.iter().any(|&x| x < 0) {
                return Err(parse_err(lineno, "negative run field"));
            }
            runs.push((v[0] as usize, v[1] as usize, v[2] as usize, lineno));
        } else {
            if fields.len() != 5 {
                return Err(parse_err(lineno, "node needs 5 fields"));
            }
            let v: Vec<i64> = fields.iter().map(|s| num(s)).collect::<Result<_>>()?;
            if v[0] < 0 || v[1] < -1 || v[2] < 0 || v[3] < 0 || v[4] < 0 || v[2] > u32::MAX as i64 {
                return Err(parse_err(lineno, "field out of range"));
            }
            declared.push((v[0] as usize, v[1], v[2] as u32, v[3] as usize, v[4] as usize, lineno));
        }
    }
    let n = declared.len();
    if n == 0 {
        return Err(parse_err(1, "no nodes"));
    }
    let mut parents = vec![None; n];
    let mut levels = vec![0; n];
    let mut seen = vec![false; n];
    for &(id, parent, level, _, _, lineno) in &declared {
        if id >= n || seen[id] {
            return Err(parse_err(lineno, format!("unexpected node id {id}")));
        }
        seen[id] = true;
        if parent >= n as i64 {
            return Err(parse_err(lineno, format!("parent {parent} out of range")));
        }
        parents[id] = (parent >= 0).then_some(parent as usize);
        levels[id] = level;
    }
    let root = parents
        .iter()
        .position(Option::is_none)
        .ok_or_else(|| parse_err(1, "no root"))?;
    let mut owner = vec![root; width * height];
    for (node, start, len, lineno) in runs {
        if node >= n || start + len > owner.len() {
            return Err(parse_err(lineno, "run out of range"));
        }
        owner[start..start + len].fill(node);
    }
    let tree = ComponentTree::from_parts(width, height, &parents, &levels, owner)?;
    for &(id, _, _, area, first, lineno) in &declared {
        let node = &tree.nodes[id];
        if node.area != area || node.first_pixel != first {
            return Err(parse_err(lineno, format!("node {id} disagrees with pixel runs")));
        }
    }
    Ok(tree)
}

/// `.ctt` file body: a `CTT1 width height` header line, then [`serialize_tree`].
pub fn write_ctt(tree: &ComponentTree) -> String {
    format!("CTT1 {} {}\n{}", tree.width, tree.height, serialize_tree(tree))
}

pub fn read_ctt(text: &str) -> Result<ComponentTree> {
    let (header, body) = text.split_once('\n').unwrap_or((text, ""));
    let fields: Vec<&str> = header.split_ascii_whitespace().collect();
    if fields.len() != 3 || fields[0] != "CTT1" {
        return Err(Error::Header("expected 'CTT1 width height'".into()));
    }
    let dim = |s: &str| -> Result<usize> {
        s.parse()
            .map_err(|_| Error::Header(format!("invalid dimension '{s}'")))
    };
    let (w, h) = (dim(fields[1])?, dim(fields[2])?);
    if w == 0 || h == 0 {
        return Err(Error::Dimensions {
            width: w,
            height: h,
            channels: 1,
        });
    }
    parse_tree(body, w, h).map_err(|e| match e {
        Error::Parse { line, msg } => Error::Parse { line: line + 1, msg },
        other => other,
    })
}
