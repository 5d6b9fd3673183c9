//! Channel-scaling benchmark: per-phase runtimes as the channel count grows.

use std::fmt::Write as _;
use std::time::{Duration, Instant};

use anyhow::{ensure, Result};
use dctree::fixtures::synthesize_channels;
use dctree::mcimage::MultiChannelImage;
use dctree::ctree::build_tree;
use dctree::dgraph::build_grid;
use dctree::pipeline::PipelineParams;
use dctree::preprocess::{compute_derivates, quantize, smooth, QuantizedDerivates};
use dctree::regions::{extract_stable, ExtractParams};

/// Mean and variance of one phase, in milliseconds.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PhaseStats {
    pub mean: f64,
    pub variance: f64,
}

impl PhaseStats {
    pub fn from_samples(ms: &[f64]) -> Self {
        let n = ms.len() as f64;
        let mean = ms.iter().sum::<f64>() / n;
        let variance = if ms.len() > 1 {
            ms.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        Self { mean, variance }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub channels: usize,
    pub preprocess: PhaseStats,
    pub construct: PhaseStats,
    pub traverse: PhaseStats,
    /// Construction plus traversal, paired by repetition.
    pub tree: PhaseStats,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub width: usize,
    pub height: usize,
    pub repetitions: usize,
    pub rows: Vec<BenchRow>,
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub channels: Vec<usize>,
    pub repetitions: usize,
    pub noise_sigma: f64,
    pub seed: u64,
    pub pipeline: PipelineParams,
    pub extract: ExtractParams,
}

fn ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let t = Instant::now();
    let out = f();
    (out, ms(t.elapsed()))
}

/// Each phase is timed in its own pass over all repetitions, on the
/// previous phase's output and after one untimed warm-up, so no phase pays
/// for another's cache traffic. Within a pass the channel counts are
/// visited round-robin, so slow stretches of a shared machine hit every
/// channel count alike instead of a few consecutive ones.
pub fn run_bench(base: &MultiChannelImage, config: &BenchConfig) -> Result<BenchReport> {
    ensure!(config.repetitions >= 3, "need at least 3 repetitions, got {}", config.repetitions);
    ensure!(!config.channels.is_empty(), "no channel counts given");
    let p = &config.pipeline;
    p.validate()?;
    config.extract.validate()?;
    let preprocess = |image: &MultiChannelImage| -> Result<QuantizedDerivates> {
        let smoothed = smooth(image, &p.smoothing)?;
        Ok(quantize(&compute_derivates(&smoothed, p.norm), p.bins, p.max_magnitude)?)
    };
    let construct = |q: &QuantizedDerivates| build_tree(&build_grid(q), &p.tree_params());
    let (reps, n) = (config.repetitions, config.channels.len());
    let mut samples = vec![[Vec::with_capacity(reps), Vec::with_capacity(reps), Vec::with_capacity(reps)]; n];

    let images = config
        .channels
        .iter()
        .map(|&c| synthesize_channels(base, c, config.noise_sigma, config.seed ^ c as u64))
        .collect::<dctree::Result<Vec<_>>>()?;
    let mut quantized = images.iter().map(preprocess).collect::<Result<Vec<_>>>()?;
    for _ in 0..reps {
        for (i, image) in images.iter().enumerate() {
            let (q, t) = timed(|| preprocess(image));
            quantized[i] = q?;
            samples[i][0].push(t);
        }
    }
    drop(images);

    let mut trees = quantized.iter().map(construct).collect::<dctree::Result<Vec<_>>>()?;
    for _ in 0..reps {
        for (i, q) in quantized.iter().enumerate() {
            let (tree, t) = timed(|| construct(q));
            trees[i] = tree?;
            samples[i][1].push(t);
        }
    }

    for tree in &trees {
        extract_stable(tree, &config.extract)?;
    }
    for _ in 0..reps {
        for (i, tree) in trees.iter().enumerate() {
            let (set, t) = timed(|| extract_stable(tree, &config.extract));
            set?;
            samples[i][2].push(t);
        }
    }

    let rows = config
        .channels
        .iter()
        .zip(&samples)
        .map(|(&channels, [pre, con, tra])| {
            let both: Vec<f64> = con.iter().zip(tra).map(|(a, b)| a + b).collect();
            BenchRow {
                channels,
                preprocess: PhaseStats::from_samples(pre),
                construct: PhaseStats::from_samples(con),
                traverse: PhaseStats::from_samples(tra),
                tree: PhaseStats::from_samples(&both),
            }
        })
        .collect();
    Ok(BenchReport {
        width: base.width(),
        height: base.height(),
        repetitions: reps,
        rows,
    })
}

/// `(max - min) / mean` over a set of means.
pub fn relative_spread(means: &[f64]) -> f64 {
    let max = means.iter().cloned().fold(f64::MIN, f64::max);
    let min = means.iter().cloned().fold(f64::MAX, f64::min);
    let mean = means.iter().sum::<f64>() / means.len() as f64;
    if mean > 0.0 {
        (max - min) / mean
    } else {
        0.0
    }
}

/// Least-squares line through `(x, y)`: returns `(slope, intercept, r2)`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    if sxx == 0.0 {
        return (0.0, my, 0.0);
    }
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    (slope, my - slope * mx, r2)
}

impl BenchReport {
    /// Spread of the construction+traversal means across channel counts.
    pub fn tree_spread(&self) -> f64 {
        relative_spread(&self.rows.iter().map(|r| r.tree.mean).collect::<Vec<_>>())
    }

    pub fn construct_spread(&self) -> f64 {
        relative_spread(&self.rows.iter().map(|r| r.construct.mean).collect::<Vec<_>>())
    }

    /// Linear fit of mean preprocessing time against channel count.
    pub fn preprocess_fit(&self) -> (f64, f64, f64) {
        let xs: Vec<f64> = self.rows.iter().map(|r| r.channels as f64).collect();
        let ys: Vec<f64> = self.rows.iter().map(|r| r.preprocess.mean).collect();
        linear_fit(&xs, &ys)
    }

    /// Tab-separated rows, one per channel count.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from(
            "channels\tpreprocess_mean_ms\tpreprocess_var\tconstruct_mean_ms\tconstruct_var\ttraverse_mean_ms\ttraverse_var\n",
        );
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{}\t{:.4}\t{:.4}\t{:.4}\t{:.4}\t{:.4}\t{:.4}",
                r.channels,
                r.preprocess.mean,
                r.preprocess.variance,
                r.construct.mean,
                r.construct.variance,
                r.traverse.mean,
                r.traverse.variance
            );
        }
        out
    }

    pub fn to_table(&self) -> String {
        let mut out = format!(
            "{}x{} image, {} repetitions (mean ± std, ms)\n",
            self.width, self.height, self.repetitions
        );
        let _ = writeln!(out, "{:>8}  {:>18}  {:>18}  {:>18}", "channels", "preprocess", "construct", "traverse");
        let cell = |s: &PhaseStats| format!("{:.2} ± {:.2}", s.mean, s.variance.sqrt());
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{:>8}  {:>18}  {:>18}  {:>18}",
                r.channels,
                cell(&r.preprocess),
                cell(&r.construct),
                cell(&r.traverse)
            );
        }
        let (slope, _, r2) = self.preprocess_fit();
        let _ = writeln!(out, "construct+traverse spread: {:.1}%", self.tree_spread() * 100.0);
        let _ = writeln!(out, "preprocess: {slope:.3} ms per channel, R^2 = {r2:.4}");
        out
    }
}
