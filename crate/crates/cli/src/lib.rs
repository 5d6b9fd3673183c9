//! Command implementations behind the `dctree` binary.

pub mod bench;
pub mod render;

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use anyhow::{bail, ensure, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use dctree::ctree::{read_ctt, write_ctt, ComponentTree};
use dctree::dgraph::build_grid;
use dctree::mcimage::{load_image, save_image, save_labels, ImageFormat, MultiChannelImage};
use dctree::oracle::oracle_tree;
use dctree::pipeline::{derivate_tree, mser, PipelineParams, Timings};
use dctree::preprocess::{compute_derivates, quantize, smooth, MaxMagnitude, Norm, SmoothingMethod, SmoothingParams};
use dctree::regions::{
    extract_stable, match_boxes, read_ground_truth, read_rgn, write_rgn, ExtractParams, GroundTruthBox, LabelPolicy,
    Polarity, RegionSet, StabilityMode,
};
use rayon::prelude::*;

use crate::bench::{run_bench, BenchConfig};

#[derive(Debug, Parser)]
#[command(name = "dctree", version, about = "Derivate-based component-trees and stable regions for multi-channel images")]
pub struct RunConfig {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build the canonical derivate tree of each input and write it as .ctt.
    Build(BuildArgs),
    /// Extract maximally stable homogeneous regions.
    Mshr(MshrArgs),
    /// Same as mshr, writing a label image and an overlay by default.
    Segment(MshrArgs),
    /// Extract gray-value MSER from single-channel images.
    Mser(MserArgs),
    /// Time every pipeline phase for a range of channel counts.
    Bench(BenchArgs),
    /// Recall of a region file against ground-truth boxes.
    Eval(EvalArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SmoothingArg {
    None,
    Bilateral,
    Guided,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NormArg {
    L1,
    L2,
    Linf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PolicyArg {
    Smallest,
    Largest,
}

fn parse_max_magnitude(s: &str) -> std::result::Result<MaxMagnitude, String> {
    if s == "auto" {
        return Ok(MaxMagnitude::Auto);
    }
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(MaxMagnitude::Fixed(v)),
        _ => Err(format!("expected 'auto' or a positive number, got '{s}'")),
    }
}

fn parse_fraction(s: &str) -> std::result::Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v <= 1.0 => Ok(v),
        _ => Err(format!("expected a number in (0, 1], got '{s}'")),
    }
}

#[derive(Debug, Clone, Args)]
pub struct TreeArgs {
    #[arg(long, value_enum, default_value = "guided")]
    pub smoothing: SmoothingArg,
    #[arg(long, default_value_t = 2)]
    pub spatial_radius: usize,
    /// Bilateral range kernel width, in sample units.
    #[arg(long, default_value_t = 10.0)]
    pub range_sigma: f64,
    /// Guided filter regularization; default (0.02 * value range)^2.
    #[arg(long)]
    pub regularization_eps: Option<f64>,
    #[arg(long, value_enum, default_value = "l2")]
    pub norm: NormArg,
    #[arg(long, default_value_t = 256, value_parser = clap::value_parser!(u32).range(2..))]
    pub bins: u32,
    /// Magnitude mapped to the last bin: 'auto' or a number.
    #[arg(long, default_value = "auto", value_parser = parse_max_magnitude)]
    pub max_magnitude: MaxMagnitude,
    /// Smallest component that becomes a tree node or a region.
    #[arg(long, default_value_t = 30, value_parser = clap::value_parser!(u64).range(1..))]
    pub min_area: u64,
}

impl TreeArgs {
    pub fn pipeline(&self) -> PipelineParams {
        PipelineParams {
            smoothing: SmoothingParams {
                method: match self.smoothing {
                    SmoothingArg::None => SmoothingMethod::None,
                    SmoothingArg::Bilateral => SmoothingMethod::Bilateral,
                    SmoothingArg::Guided => SmoothingMethod::Guided,
                },
                spatial_radius: self.spatial_radius,
                range_sigma: self.range_sigma,
                regularization_eps: self.regularization_eps,
            },
            norm: match self.norm {
                NormArg::L1 => Norm::L1,
                NormArg::L2 => Norm::L2,
                NormArg::Linf => Norm::Linf,
            },
            bins: self.bins,
            max_magnitude: self.max_magnitude,
            min_area: self.min_area as usize,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct StabilityArgs {
    /// Stability window in levels.
    #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u32).range(1..))]
    pub delta: u32,
    #[arg(long, default_value_t = 0.75, value_parser = parse_fraction)]
    pub max_area_fraction: f64,
    /// difference, ratio or excess.
    #[arg(long, default_value = "difference")]
    pub stability_mode: StabilityMode,
}

impl StabilityArgs {
    pub fn extract(&self, min_area: u64, polarity: Polarity) -> ExtractParams {
        ExtractParams {
            delta: self.delta,
            min_area: min_area as usize,
            max_area_fraction: self.max_area_fraction,
            stability_mode: self.stability_mode,
            polarity,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct BuildArgs {
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    /// Output file, or a directory when several inputs are given.
    #[arg(short, long)]
    pub output: PathBuf,
    #[command(flatten)]
    pub tree: TreeArgs,
    /// Interior derivate id to start flooding from.
    #[arg(long)]
    pub start_node: Option<usize>,
    /// Build with the brute-force threshold decomposition instead.
    #[arg(long, hide = true)]
    pub oracle: bool,
    /// Worker threads, one input file per worker.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
}

#[derive(Debug, Clone, Args)]
pub struct MshrArgs {
    /// Input images; optional with --from-tree unless an overlay is wanted.
    pub inputs: Vec<PathBuf>,
    /// Read a prebuilt .ctt instead of building the tree.
    #[arg(long, conflicts_with = "jobs")]
    pub from_tree: Option<PathBuf>,
    /// Region file, or a directory when several inputs are given.
    #[arg(short, long)]
    pub output: PathBuf,
    /// 16-bit PGM with one label per region.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// RGB copy of the input with region outlines.
    #[arg(long)]
    pub overlay: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "smallest")]
    pub policy: PolicyArg,
    #[command(flatten)]
    pub tree: TreeArgs,
    #[command(flatten)]
    pub stability: StabilityArgs,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
}

#[derive(Debug, Clone, Args)]
pub struct MserArgs {
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    #[arg(short, long)]
    pub output: PathBuf,
    /// light, dark or both.
    #[arg(long, default_value = "both")]
    pub polarity: Polarity,
    #[arg(long, default_value_t = 256, value_parser = clap::value_parser!(u32).range(2..))]
    pub bins: u32,
    #[arg(long, default_value_t = 30, value_parser = clap::value_parser!(u64).range(1..))]
    pub min_area: u64,
    #[command(flatten)]
    pub stability: StabilityArgs,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
}

#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    /// Base image; a synthetic scene is used when omitted.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Side of the synthetic scene.
    #[arg(long, default_value_t = 256)]
    pub size: usize,
    #[arg(long, value_delimiter = ',', default_value = "1,2,4,8,16,32")]
    pub channels: Vec<usize>,
    #[arg(long, default_value_t = 5)]
    pub reps: usize,
    /// Deviation of the noise added to every synthesized channel.
    #[arg(long, default_value_t = 2.0)]
    pub noise_sigma: f64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Also write the tab-separated report here.
    #[arg(long)]
    pub tsv: Option<PathBuf>,
    #[command(flatten)]
    pub tree: TreeArgs,
    #[command(flatten)]
    pub stability: StabilityArgs,
}

#[derive(Debug, Clone, Args)]
pub struct EvalArgs {
    /// Region file (.rgn).
    #[arg(long)]
    pub regions: PathBuf,
    /// One 'label x_min y_min x_max y_max' box per line.
    #[arg(long)]
    pub ground_truth: PathBuf,
    #[arg(long, default_value_t = 0.5)]
    pub threshold: f64,
}

pub fn run(config: RunConfig, out: &mut dyn Write) -> Result<()> {
    let text = match config.command {
        Command::Build(a) => cmd_build(&a)?,
        Command::Mshr(a) => cmd_mshr(&a, false)?,
        Command::Segment(a) => cmd_mshr(&a, true)?,
        Command::Mser(a) => cmd_mser(&a)?,
        Command::Bench(a) => cmd_bench(&a)?,
        Command::Eval(a) => cmd_eval(&a)?,
    };
    out.write_all(text.as_bytes())?;
    Ok(())
}

fn millis(d: Duration) -> String {
    format!("{:.3}", d.as_secs_f64() * 1e3)
}

/// Where the result for `input` goes: `output` itself for a single input,
/// `output/<stem>.<ext>` otherwise.
fn output_for(inputs: &[PathBuf], input: &Path, output: &Path, ext: &str) -> Result<PathBuf> {
    if inputs.len() <= 1 {
        return Ok(output.to_path_buf());
    }
    fs::create_dir_all(output).with_context(|| format!("creating {}", output.display()))?;
    let stem = input.file_stem().context("input without a file name")?;
    Ok(output.join(stem).with_extension(ext))
}

/// Run `job` over every input on `jobs` workers; reports come back in input
/// order.
fn for_each_input<F>(inputs: &[PathBuf], jobs: usize, job: F) -> Result<String>
where
    F: Fn(&Path) -> Result<String> + Sync,
{
    ensure!(jobs >= 1, "--jobs must be at least 1");
    let run = |p: &PathBuf| job(p).with_context(|| p.display().to_string());
    let reports: Vec<Result<String>> = if jobs == 1 {
        inputs.iter().map(run).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs).build()?;
        pool.install(|| inputs.par_iter().map(run).collect())
    };
    let mut out = String::new();
    for r in reports {
        out.push_str(&r?);
    }
    Ok(out)
}

fn load(path: &Path) -> Result<MultiChannelImage> {
    load_image(path).with_context(|| format!("reading {}", path.display()))
}

pub fn cmd_build(args: &BuildArgs) -> Result<String> {
    let params = args.tree.pipeline();
    params.validate()?;
    for_each_input(&args.inputs, args.jobs, |input| {
        let image = load(input)?;
        let (tree, timings) = if args.oracle {
            let t0 = Instant::now();
            let smoothed = smooth(&image, &params.smoothing)?;
            let q = quantize(&compute_derivates(&smoothed, params.norm), params.bins, params.max_magnitude)?;
            let t1 = Instant::now();
            let tree = oracle_tree(&q, params.min_area);
            let timings = Timings {
                preprocess: t1 - t0,
                construct: t1.elapsed(),
                ..Timings::default()
            };
            (tree, timings)
        } else if let Some(start) = args.start_node {
            let t0 = Instant::now();
            let smoothed = smooth(&image, &params.smoothing)?;
            let q = quantize(&compute_derivates(&smoothed, params.norm), params.bins, params.max_magnitude)?;
            let t1 = Instant::now();
            let tree = dctree::ctree::build_tree(&build_grid(&q), &params.tree_params().with_start(start))?;
            let timings = Timings {
                preprocess: t1 - t0,
                construct: t1.elapsed(),
                ..Timings::default()
            };
            (tree, timings)
        } else {
            derivate_tree(&image, &params)?
        };
        let path = output_for(&args.inputs, input, &args.output, "ctt")?;
        fs::write(&path, write_ctt(&tree)).with_context(|| format!("writing {}", path.display()))?;
        Ok(format!(
            "input={}\noutput={}\nwidth={}\nheight={}\nchannels={}\nnodes={}\npreprocess_ms={}\nconstruct_ms={}\n",
            input.display(),
            path.display(),
            image.width(),
            image.height(),
            image.channels(),
            tree.len(),
            millis(timings.preprocess),
            millis(timings.construct)
        ))
    })
}

fn write_outputs(
    set: &RegionSet,
    image: Option<&MultiChannelImage>,
    rgn: &Path,
    labels: Option<&Path>,
    overlay: Option<&Path>,
    policy: PolicyArg,
) -> Result<()> {
    fs::write(rgn, write_rgn(set)).with_context(|| format!("writing {}", rgn.display()))?;
    if let Some(path) = labels {
        let policy = match policy {
            PolicyArg::Smallest => LabelPolicy::SmallestOnTop,
            PolicyArg::Largest => LabelPolicy::LargestOnTop,
        };
        save_labels(&dctree::regions::label_map(set, policy), path)
            .with_context(|| format!("writing {}", path.display()))?;
    }
    if let Some(path) = overlay {
        let image = image.context("an overlay needs the input image")?;
        save_image(&render::overlay(image, set), path, ImageFormat::from_path(path).unwrap_or(ImageFormat::Ppm))
            .with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn region_report(input: &str, output: &Path, set: &RegionSet, timings: &Timings, built: bool) -> String {
    let mut s = format!("input={input}\noutput={}\nregions={}\n", output.display(), set.len());
    if built {
        let _ = write!(
            s,
            "preprocess_ms={}\nconstruct_ms={}\n",
            millis(timings.preprocess),
            millis(timings.construct)
        );
    }
    let _ = writeln!(s, "traverse_ms={}", millis(timings.traverse));
    s
}

pub fn cmd_mshr(args: &MshrArgs, segment: bool) -> Result<String> {
    let params = args.tree.pipeline();
    params.validate()?;
    let extract = args.stability.extract(args.tree.min_area, Polarity::None);
    extract.validate()?;
    let side_outputs = |rgn: &Path| -> (Option<PathBuf>, Option<PathBuf>) {
        if segment {
            (
                Some(args.labels.clone().unwrap_or_else(|| rgn.with_extension("labels.pgm"))),
                Some(args.overlay.clone().unwrap_or_else(|| rgn.with_extension("overlay.ppm"))),
            )
        } else {
            (args.labels.clone(), args.overlay.clone())
        }
    };

    if let Some(ctt) = &args.from_tree {
        ensure!(args.inputs.len() <= 1, "--from-tree takes at most one image (for overlays)");
        let text = fs::read_to_string(ctt).with_context(|| format!("reading {}", ctt.display()))?;
        let tree: ComponentTree = read_ctt(&text).with_context(|| ctt.display().to_string())?;
        let image = args.inputs.first().map(|p| load(p)).transpose()?;
        if let Some(img) = &image {
            ensure!(
                (img.width(), img.height()) == (tree.width(), tree.height()),
                "image is {}x{} but the tree is {}x{}",
                img.width(),
                img.height(),
                tree.width(),
                tree.height()
            );
        }
        let t = Instant::now();
        let set = extract_stable(&tree, &extract)?;
        let timings = Timings {
            traverse: t.elapsed(),
            ..Timings::default()
        };
        let (labels, overlay) = side_outputs(&args.output);
        let overlay = if image.is_none() && segment && args.overlay.is_none() { None } else { overlay };
        write_outputs(&set, image.as_ref(), &args.output, labels.as_deref(), overlay.as_deref(), args.policy)?;
        return Ok(region_report(&ctt.display().to_string(), &args.output, &set, &timings, false));
    }

    ensure!(!args.inputs.is_empty(), "give an input image or --from-tree");
    if args.inputs.len() > 1 && (args.labels.is_some() || args.overlay.is_some()) {
        bail!("--labels and --overlay take a single input");
    }
    for_each_input(&args.inputs, args.jobs, |input| {
        let image = load(input)?;
        let (tree, mut timings) = derivate_tree(&image, &params)?;
        let t = Instant::now();
        let set = extract_stable(&tree, &extract)?;
        timings.traverse = t.elapsed();
        let rgn = output_for(&args.inputs, input, &args.output, "rgn")?;
        let (labels, overlay) = side_outputs(&rgn);
        write_outputs(&set, Some(&image), &rgn, labels.as_deref(), overlay.as_deref(), args.policy)?;
        Ok(region_report(&input.display().to_string(), &rgn, &set, &timings, true))
    })
}

pub fn cmd_mser(args: &MserArgs) -> Result<String> {
    ensure!(args.polarity != Polarity::None, "MSER needs --polarity light, dark or both");
    let extract = args.stability.extract(args.min_area, args.polarity);
    extract.validate()?;
    for_each_input(&args.inputs, args.jobs, |input| {
        let image = load(input)?;
        ensure!(
            image.channels() == 1,
            "MSER needs a single-channel image, {} has {} channels",
            input.display(),
            image.channels()
        );
        let t = Instant::now();
        let set = mser(&image, args.bins, 1, &extract)?;
        let timings = Timings {
            traverse: t.elapsed(),
            ..Timings::default()
        };
        let rgn = output_for(&args.inputs, input, &args.output, "rgn")?;
        fs::write(&rgn, write_rgn(&set)).with_context(|| format!("writing {}", rgn.display()))?;
        Ok(region_report(&input.display().to_string(), &rgn, &set, &timings, false))
    })
}

pub fn cmd_bench(args: &BenchArgs) -> Result<String> {
    let base = match &args.input {
        Some(p) => load(p)?,
        None => {
            ensure!(args.size >= 2, "--size must be at least 2");
            dctree::fixtures::scene(args.size, args.size, args.seed)
        }
    };
    let config = BenchConfig {
        channels: args.channels.clone(),
        repetitions: args.reps,
        noise_sigma: args.noise_sigma,
        seed: args.seed,
        pipeline: args.tree.pipeline(),
        extract: args.stability.extract(args.tree.min_area, Polarity::None),
    };
    ensure!(config.channels.iter().all(|&c| c >= 1), "channel counts must be positive");
    let report = run_bench(&base, &config)?;
    if let Some(path) = &args.tsv {
        fs::write(path, report.to_tsv()).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(format!("{}\n{}", report.to_table(), report.to_tsv()))
}

/// Recall summary followed by one line per ground-truth box.
pub fn eval_report(set: &RegionSet, gts: &[GroundTruthBox], threshold: f64) -> Result<String> {
    let matches = match_boxes(set, gts, threshold)?;
    let found = matches.iter().filter(|m| m.matched).count();
    let mut out = format!(
        "recall={:.3}\nmatched={found}\nboxes={}\nthreshold={threshold}\n",
        found as f64 / matches.len() as f64,
        matches.len()
    );
    for m in &matches {
        let b = &m.bbox;
        let _ = writeln!(
            out,
            "{} {} {} {} {} {} overlap={:.3} region={}",
            if m.matched { "matched" } else { "unmatched" },
            m.label,
            b.x_min,
            b.y_min,
            b.x_max,
            b.y_max,
            m.best_overlap,
            m.best_region.map_or("-".to_string(), |r| r.to_string())
        );
    }
    Ok(out)
}

pub fn cmd_eval(args: &EvalArgs) -> Result<String> {
    ensure!((0.0..1.0).contains(&args.threshold), "--threshold must be in [0, 1)");
    let rgn = fs::read_to_string(&args.regions).with_context(|| format!("reading {}", args.regions.display()))?;
    let set = read_rgn(&rgn).with_context(|| args.regions.display().to_string())?;
    let gt = fs::read_to_string(&args.ground_truth)
        .with_context(|| format!("reading {}", args.ground_truth.display()))?;
    let gts = read_ground_truth(&gt).with_context(|| args.ground_truth.display().to_string())?;
    eval_report(&set, &gts, args.threshold)
}
