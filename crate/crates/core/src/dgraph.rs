//! The derivate graph: every horizontal and vertical pixel difference is a
//! node, border derivates are stored as sentinels with level `bins`, and each
//! derivate has exactly six neighbors (the derivates sharing one of its two
//! pixels).
//!
//! Ids are flat: all horizontal derivates row-major (`width + 1` per row),
//! followed by all vertical derivates row-major (`width` per gap row,
//! `height + 1` gap rows). Pixel indices are `y * width + x`.

use crate::ctree::LeveledGraph;
use crate::error::{Error, Result};
use crate::preprocess::QuantizedDerivates;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Orientation {
    Horizontal,
    Vertical,
}

/// Coordinate view of a derivate. For horizontal derivates `row` is the pixel
/// row and `col` ranges over `0..=width`; for vertical ones `row` is the gap
/// row in `0..=height` and `col` the pixel column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DerivateId {
    pub orientation: Orientation,
    pub row: usize,
    pub col: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DerivateGrid {
    width: usize,
    height: usize,
    bins: u32,
    levels: Vec<u32>,
}

impl DerivateGrid {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bins(&self) -> u32 {
        self.bins
    }

    pub fn sentinel(&self) -> u32 {
        self.bins
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    pub fn horizontal_count(&self) -> usize {
        (self.width + 1) * self.height
    }

    pub fn levels(&self) -> &[u32] {
        &self.levels
    }

    pub fn level(&self, id: usize) -> u32 {
        self.levels[id]
    }

    pub fn is_sentinel(&self, id: usize) -> bool {
        self.levels[id] >= self.bins
    }

    pub fn interior_count(&self) -> usize {
        self.levels.iter().filter(|&&l| l < self.bins).count()
    }

    pub fn id_of(&self, d: DerivateId) -> usize {
        match d.orientation {
            Orientation::Horizontal => d.row * (self.width + 1) + d.col,
            Orientation::Vertical => self.horizontal_count() + d.row * self.width + d.col,
        }
    }

    pub fn derivate(&self, id: usize) -> DerivateId {
        let hcount = self.horizontal_count();
        if id < hcount {
            DerivateId {
                orientation: Orientation::Horizontal,
                row: id / (self.width + 1),
                col: id % (self.width + 1),
            }
        } else {
            let v = id - hcount;
            DerivateId {
                orientation: Orientation::Vertical,
                row: v / self.width,
                col: v % self.width,
            }
        }
    }

    /// Six neighbors of an interior derivate, sentinels included.
    pub fn neighbors(&self, d: DerivateId) -> Result<[DerivateId; 6]> {
        let id = self.id_of(d);
        if self.is_sentinel(id) {
            return Err(Error::Sentinel(id));
        }
        Ok(self.neighbor_ids(id).map(|n| self.derivate(n)))
    }

    /// The two pixels `((x, y), (x, y))` an interior derivate separates.
    pub fn pixels_of(&self, d: DerivateId) -> Result<((usize, usize), (usize, usize))> {
        let id = self.id_of(d);
        if self.is_sentinel(id) {
            return Err(Error::Sentinel(id));
        }
        Ok(match d.orientation {
            Orientation::Horizontal => ((d.col - 1, d.row), (d.col, d.row)),
            Orientation::Vertical => ((d.col, d.row - 1), (d.col, d.row)),
        })
    }

    #[inline]
    fn neighbor_ids(&self, id: usize) -> [usize; 6] {
        let w = self.width;
        let hcount = self.horizontal_count();
        let h_id = |row: usize, col: usize| row * (w + 1) + col;
        let v_id = |row: usize, col: usize| hcount + row * w + col;
        if id < hcount {
            let (row, col) = (id / (w + 1), id % (w + 1));
            [
                h_id(row, col - 1),
                h_id(row, col + 1),
                v_id(row, col - 1),
                v_id(row + 1, col - 1),
                v_id(row, col),
                v_id(row + 1, col),
            ]
        } else {
            let v = id - hcount;
            let (row, col) = (v / w, v % w);
            [
                v_id(row - 1, col),
                v_id(row + 1, col),
                h_id(row - 1, col),
                h_id(row - 1, col + 1),
                h_id(row, col),
                h_id(row, col + 1),
            ]
        }
    }
}

/// Lay out quantized derivates on the bordered grid.
pub fn build_grid(q: &QuantizedDerivates) -> DerivateGrid {
    let (w, h) = (q.width, q.height);
    let sentinel = q.bins;
    let mut levels = Vec::with_capacity((w + 1) * h + w * (h + 1));
    for y in 0..h {
        levels.push(sentinel);
        levels.extend_from_slice(&q.horiz[y * (w - 1)..(y + 1) * (w - 1)]);
        levels.push(sentinel);
    }
    levels.extend(std::iter::repeat_n(sentinel, w));
    levels.extend_from_slice(&q.vert);
    levels.extend(std::iter::repeat_n(sentinel, w));
    DerivateGrid {
        width: w,
        height: h,
        bins: q.bins,
        levels,
    }
}

impl LeveledGraph for DerivateGrid {
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
        6
    }

    #[inline]
    fn neighbor(&self, node: usize, slot: usize) -> Option<usize> {
        // same slot order as neighbor_ids, one id at a time
        let w = self.width;
        let hcount = self.horizontal_count();
        Some(if node < hcount {
            let (row, col) = (node / (w + 1), node % (w + 1));
            match slot {
                0 => node - 1,
                1 => node + 1,
                2 => hcount + row * w + col - 1,
                3 => hcount + (row + 1) * w + col - 1,
                4 => hcount + row * w + col,
                _ => hcount + (row + 1) * w + col,
            }
        } else {
            let v = node - hcount;
            let (row, col) = (v / w, v % w);
            match slot {
                0 => node - w,
                1 => node + w,
                2 => (row - 1) * (w + 1) + col,
                3 => (row - 1) * (w + 1) + col + 1,
                4 => row * (w + 1) + col,
                _ => row * (w + 1) + col + 1,
            }
        })
    }

    #[inline]
    fn pixels(&self, node: usize) -> (usize, Option<usize>) {
        let w = self.width;
        let hcount = self.horizontal_count();
        if node < hcount {
            let (row, col) = (node / (w + 1), node % (w + 1));
            let b = row * w + col;
            (b - 1, Some(b))
        } else {
            let v = node - hcount;
            let b = v;
            (b - w, Some(b))
        }
    }
}
