//! End-to-end helpers: image to derivate tree to MSHR, and image to gray
//! trees to MSER.

use std::time::{Duration, Instant};

use crate::ctree::{build_tree, ComponentTree, PixelGrid, TreeBuildParams};
use crate::dgraph::build_grid;
use crate::error::{Error, Result};
use crate::mcimage::MultiChannelImage;
use crate::preprocess::{compute_derivates, quantize, quantize_gray, MaxMagnitude, Norm, SmoothingParams};
use crate::regions::{extract_stable, extract_tagged, ExtractParams, Polarity, RegionSet};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipelineParams {
    pub smoothing: SmoothingParams,
    pub norm: Norm,
    pub bins: u32,
    pub max_magnitude: MaxMagnitude,
    pub min_area: usize,
}

impl Default for PipelineParams {
    fn default() -> Self {
        Self {
            smoothing: SmoothingParams::default(),
            norm: Norm::L2,
            bins: 256,
            max_magnitude: MaxMagnitude::Auto,
            min_area: 30,
        }
    }
}

impl PipelineParams {
    pub fn tree_params(&self) -> TreeBuildParams {
        TreeBuildParams::new(self.bins).with_min_area(self.min_area)
    }

    pub fn validate(&self) -> Result<()> {
        self.smoothing.validate()?;
        self.tree_params().validate()
    }
}

/// Wall-clock time spent per phase.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Timings {
    /// Smoothing, derivates and quantization.
    pub preprocess: Duration,
    /// Grid layout and flooding.
    pub construct: Duration,
    /// Stability evaluation and region rasterization.
    pub traverse: Duration,
}

pub fn derivate_tree(image: &MultiChannelImage, params: &PipelineParams) -> Result<(ComponentTree, Timings)> {
    params.validate()?;
    let t0 = Instant::now();
    let smoothed = crate::preprocess::smooth(image, &params.smoothing)?;
    let q = quantize(&compute_derivates(&smoothed, params.norm), params.bins, params.max_magnitude)?;
    let t1 = Instant::now();
    let tree = build_tree(&build_grid(&q), &params.tree_params())?;
    let t2 = Instant::now();
    Ok((
        tree,
        Timings {
            preprocess: t1 - t0,
            construct: t2 - t1,
            traverse: Duration::ZERO,
        },
    ))
}

/// Derivate tree plus MSHR extraction.
pub fn mshr(image: &MultiChannelImage, params: &PipelineParams, extract: &ExtractParams) -> Result<(RegionSet, Timings)> {
    let (tree, mut timings) = derivate_tree(image, params)?;
    let t = Instant::now();
    let regions = extract_stable(&tree, extract)?;
    timings.traverse = t.elapsed();
    Ok((regions, timings))
}

/// Gray-value tree for one polarity. Dark regions are the components of
/// the lower threshold sets, light ones those of the mirrored levels.
pub fn gray_tree(image: &MultiChannelImage, bins: u32, polarity: Polarity, min_area: usize) -> Result<ComponentTree> {
    if image.channels() != 1 {
        return Err(Error::Param(format!(
            "MSER works on single-channel images, got {} channels",
            image.channels()
        )));
    }
    let grid = PixelGrid::new(image.width(), image.height(), bins, quantize_gray(image, bins, None)?)?;
    let params = TreeBuildParams::new(bins).with_min_area(min_area);
    match polarity {
        Polarity::Dark => build_tree(&grid, &params),
        Polarity::Light => build_tree(&grid.inverted(), &params),
        other => Err(Error::Param(format!("gray tree needs light or dark polarity, got {other}"))),
    }
}

/// MSER baseline with the same extraction parameters as MSHR. `both` is the
/// dark pass followed by the light pass, ids renumbered.
pub fn mser(image: &MultiChannelImage, bins: u32, min_area: usize, extract: &ExtractParams) -> Result<RegionSet> {
    extract.validate()?;
    let passes: &[Polarity] = match extract.polarity {
        Polarity::Dark => &[Polarity::Dark],
        Polarity::Light => &[Polarity::Light],
        Polarity::Both => &[Polarity::Dark, Polarity::Light],
        Polarity::None => return Err(Error::Param("MSER needs polarity light, dark or both".into())),
    };
    let mut out = RegionSet {
        width: image.width(),
        height: image.height(),
        params: *extract,
        regions: Vec::new(),
    };
    for &p in passes {
        let tree = gray_tree(image, bins, p, min_area)?;
        out.regions.extend(extract_tagged(&tree, extract, p)?.regions);
    }
    for (i, r) in out.regions.iter_mut().enumerate() {
        r.id = i + 1;
    }
    Ok(out)
}
