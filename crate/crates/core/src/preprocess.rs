//! Edge-preserving smoothing, derivate magnitudes and their quantization.
//!
//! This is the only stage whose cost depends on the channel count: every
//! other stage works on the scalar derivate levels produced here.

use crate::error::{Error, Result};
use crate::mcimage::{Depth, MultiChannelImage, Samples};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SmoothingMethod {
    None,
    Bilateral,
    Guided,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothingParams {
    pub method: SmoothingMethod,
    pub spatial_radius: usize,
    /// Range kernel width in sample units (bilateral only).
    pub range_sigma: f64,
    /// Regularization in squared sample units (guided only). `None` picks
    /// `(0.02 * range)^2` from the image's value range.
    pub regularization_eps: Option<f64>,
}

impl Default for SmoothingParams {
    fn default() -> Self {
        Self {
            method: SmoothingMethod::Guided,
            spatial_radius: 2,
            range_sigma: 10.0,
            regularization_eps: None,
        }
    }
}

impl SmoothingParams {
    pub fn none() -> Self {
        Self {
            method: SmoothingMethod::None,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.method {
            SmoothingMethod::Bilateral if !(self.range_sigma > 0.0) => Err(Error::Param(
                "range_sigma must be positive for bilateral smoothing".into(),
            )),
            SmoothingMethod::Guided if matches!(self.regularization_eps, Some(e) if !(e > 0.0)) => {
                Err(Error::Param(
                    "regularization_eps must be positive for guided smoothing".into(),
                ))
            }
            _ => Ok(()),
        }
    }
}

/// Smooth every channel while keeping edges. `None` returns the input as is;
/// the other methods produce `f32` output.
pub fn smooth(image: &MultiChannelImage, params: &SmoothingParams) -> Result<MultiChannelImage> {
    params.validate()?;
    match params.method {
        SmoothingMethod::None => Ok(image.clone()),
        SmoothingMethod::Guided => {
            let range = image
                .depth()
                .nominal_max()
                .unwrap_or_else(|| image.value_range());
            let eps = params
                .regularization_eps
                .unwrap_or_else(|| (0.02 * range).powi(2))
                .max(f64::MIN_POSITIVE);
            Ok(guided_filter(image, params.spatial_radius, eps))
        }
        SmoothingMethod::Bilateral => Ok(bilateral_filter(
            image,
            params.spatial_radius,
            params.range_sigma,
        )),
    }
}

/// Mean over the `(2r+1)^2` window clamped to the image, computed with
/// separable running sums. `tmp` and `dst` must hold `w * h` values.
fn box_mean(src: &[f64], w: usize, h: usize, r: usize, tmp: &mut [f64], dst: &mut [f64]) {
    for (row, out) in src.chunks_exact(w).zip(tmp.chunks_exact_mut(w)) {
        let mut sum: f64 = row[..(r + 1).min(w)].iter().sum();
        for x in 0..w {
            out[x] = sum;
            if x + r + 1 < w {
                sum += row[x + r + 1];
            }
            if x >= r {
                sum -= row[x - r];
            }
        }
    }
    let mut col = vec![0.0; w];
    for row in tmp.chunks_exact(w).take(r + 1) {
        col.iter_mut().zip(row).for_each(|(c, v)| *c += v);
    }
    let span = |i: usize, n: usize| ((i + r + 1).min(n) - i.saturating_sub(r)) as f64;
    let nx: Vec<f64> = (0..w).map(|x| span(x, w)).collect();
    for y in 0..h {
        let ny = span(y, h);
        let out = &mut dst[y * w..(y + 1) * w];
        for x in 0..w {
            out[x] = col[x] / (nx[x] * ny);
        }
        if y + r + 1 < h {
            let add = &tmp[(y + r + 1) * w..(y + r + 2) * w];
            col.iter_mut().zip(add).for_each(|(c, v)| *c += v);
        }
        if y >= r {
            let sub = &tmp[(y - r) * w..(y - r + 1) * w];
            col.iter_mut().zip(sub).for_each(|(c, v)| *c -= v);
        }
    }
}

/// Self-guided filter applied to each channel independently.
fn guided_filter(image: &MultiChannelImage, radius: usize, eps: f64) -> MultiChannelImage {
    let (w, h, channels) = (image.width(), image.height(), image.channels());
    let n = w * h;
    let samples = image.to_f32_vec();
    let mut out = vec![0f32; n * channels];
    let [mut plane, mut sq, mut mean, mut mean_sq, mut tmp] = std::array::from_fn(|_| vec![0f64; n]);
    for c in 0..channels {
        for (i, p) in plane.iter_mut().enumerate() {
            *p = samples[i * channels + c] as f64;
        }
        for (s, p) in sq.iter_mut().zip(&plane) {
            *s = p * p;
        }
        box_mean(&plane, w, h, radius, &mut tmp, &mut mean);
        box_mean(&sq, w, h, radius, &mut tmp, &mut mean_sq);
        // a into mean_sq, b into mean
        for (m, m2) in mean.iter_mut().zip(mean_sq.iter_mut()) {
            let var = (*m2 - *m * *m).max(0.0);
            let a = var / (var + eps);
            *m2 = a;
            *m -= a * *m;
        }
        box_mean(&mean_sq, w, h, radius, &mut tmp, &mut sq);
        box_mean(&mean, w, h, radius, &mut tmp, &mut mean_sq);
        for i in 0..n {
            out[i * channels + c] = (sq[i] * plane[i] + mean_sq[i]) as f32;
        }
    }
    MultiChannelImage::from_f32(w, h, channels, out).expect("geometry preserved")
}

/// Joint bilateral filter: the range kernel uses the Euclidean distance
/// between full channel vectors so all channels share one set of weights.
fn bilateral_filter(image: &MultiChannelImage, radius: usize, range_sigma: f64) -> MultiChannelImage {
    let (w, h, channels) = (image.width(), image.height(), image.channels());
    let data = image.to_f32_vec();
    let spatial_sigma = (radius.max(1) as f64) / 2.0;
    let r = radius as isize;
    let side = 2 * radius + 1;
    let mut spatial = Vec::with_capacity(side * side);
    for dy in -r..=r {
        for dx in -r..=r {
            let d2 = (dx * dx + dy * dy) as f64;
            spatial.push((-d2 / (2.0 * spatial_sigma * spatial_sigma)).exp());
        }
    }
    let range_k = -1.0 / (2.0 * range_sigma * range_sigma);
    let mut out = vec![0f32; data.len()];
    let mut acc = vec![0f64; channels];
    for y in 0..h as isize {
        for x in 0..w as isize {
            let center = &data[((y as usize) * w + x as usize) * channels..][..channels];
            acc.iter_mut().for_each(|a| *a = 0.0);
            let mut total = 0.0;
            for dy in -r..=r {
                let yy = y + dy;
                if yy < 0 || yy >= h as isize {
                    continue;
                }
                for dx in -r..=r {
                    let xx = x + dx;
                    if xx < 0 || xx >= w as isize {
                        continue;
                    }
                    let other = &data[((yy as usize) * w + xx as usize) * channels..][..channels];
                    let d2: f64 = center
                        .iter()
                        .zip(other)
                        .map(|(&a, &b)| {
                            let d = (a - b) as f64;
                            d * d
                        })
                        .sum();
                    let weight =
                        spatial[((dy + r) as usize) * side + (dx + r) as usize] * (d2 * range_k).exp();
                    total += weight;
                    for (a, &v) in acc.iter_mut().zip(other) {
                        *a += weight * v as f64;
                    }
                }
            }
            let base = ((y as usize) * w + x as usize) * channels;
            for c in 0..channels {
                out[base + c] = (acc[c] / total) as f32;
            }
        }
    }
    MultiChannelImage::from_f32(w, h, channels, out).expect("geometry preserved")
}

/// Vector norm used to turn a channel difference into a magnitude.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Norm {
    L1,
    #[default]
    L2,
    Linf,
}

impl Norm {
    /// Upper bound of the magnitude for samples spanning `range` over `channels`.
    pub fn bound(self, range: f64, channels: usize) -> f64 {
        match self {
            Norm::L1 => range * channels as f64,
            Norm::L2 => range * (channels as f64).sqrt(),
            Norm::Linf => range,
        }
    }
}

/// Magnitudes of all differences between 4-adjacent pixels.
///
/// `horiz[y * (width - 1) + x]` separates `(x, y)` and `(x + 1, y)`;
/// `vert[y * width + x]` separates `(x, y)` and `(x, y + 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivateField {
    pub width: usize,
    pub height: usize,
    pub horiz: Vec<f32>,
    pub vert: Vec<f32>,
}

impl DerivateField {
    pub fn horiz_at(&self, x: usize, y: usize) -> f32 {
        self.horiz[y * (self.width - 1) + x]
    }

    pub fn vert_at(&self, x: usize, y: usize) -> f32 {
        self.vert[y * self.width + x]
    }

    pub fn max_magnitude(&self) -> f32 {
        self.horiz
            .iter()
            .chain(&self.vert)
            .copied()
            .fold(0.0, f32::max)
    }

    /// Multiply every magnitude by `factor`.
    pub fn scaled(&self, factor: f32) -> DerivateField {
        DerivateField {
            width: self.width,
            height: self.height,
            horiz: self.horiz.iter().map(|m| m * factor).collect(),
            vert: self.vert.iter().map(|m| m * factor).collect(),
        }
    }
}

pub fn compute_derivates(image: &MultiChannelImage, norm: Norm) -> DerivateField {
    let mut unused = 0;
    dispatch_derivates::<false>(image, norm, &mut unused)
}

/// Same as [`compute_derivates`], also returning how many channel samples
/// were compared (one per channel per pixel pair).
pub fn compute_derivates_counted(image: &MultiChannelImage, norm: Norm) -> (DerivateField, u64) {
    let mut count = 0;
    let field = dispatch_derivates::<true>(image, norm, &mut count);
    (field, count)
}

fn dispatch_derivates<const COUNT: bool>(
    image: &MultiChannelImage,
    norm: Norm,
    count: &mut u64,
) -> DerivateField {
    let (w, h, c) = (image.width(), image.height(), image.channels());
    match image.samples() {
        Samples::U8(v) => derivates_typed::<u8, COUNT>(v, w, h, c, norm, count),
        Samples::U16(v) => derivates_typed::<u16, COUNT>(v, w, h, c, norm, count),
        Samples::F32(v) => derivates_typed::<f32, COUNT>(v, w, h, c, norm, count),
    }
}

#[inline]
fn magnitude<T: Copy + Into<f64>, const COUNT: bool>(a: &[T], b: &[T], norm: Norm, count: &mut u64) -> f32 {
    if COUNT {
        *count += a.len() as u64;
    }
    let diffs = a.iter().zip(b).map(|(&p, &q)| p.into() - q.into());
    match norm {
        Norm::L1 => diffs.map(f64::abs).sum::<f64>() as f32,
        Norm::L2 => diffs.map(|d| d * d).sum::<f64>().sqrt() as f32,
        Norm::Linf => diffs.map(f64::abs).fold(0.0, f64::max) as f32,
    }
}

fn derivates_typed<T: Copy + Into<f64>, const COUNT: bool>(
    data: &[T],
    w: usize,
    h: usize,
    c: usize,
    norm: Norm,
    count: &mut u64,
) -> DerivateField {
    let px = |x: usize, y: usize| &data[(y * w + x) * c..][..c];
    let mut horiz = Vec::with_capacity((w - 1) * h);
    for y in 0..h {
        for x in 0..w - 1 {
            horiz.push(magnitude::<T, COUNT>(px(x, y), px(x + 1, y), norm, count));
        }
    }
    let mut vert = Vec::with_capacity(w * (h - 1));
    for y in 0..h - 1 {
        for x in 0..w {
            vert.push(magnitude::<T, COUNT>(px(x, y), px(x, y + 1), norm, count));
        }
    }
    DerivateField {
        width: w,
        height: h,
        horiz,
        vert,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum MaxMagnitude {
    /// Largest observed magnitude, or 1 when everything is zero.
    #[default]
    Auto,
    Fixed(f64),
}

/// Bin indices for every derivate of a [`DerivateField`], same layout.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizedDerivates {
    pub width: usize,
    pub height: usize,
    pub bins: u32,
    pub bin_width: f64,
    pub horiz: Vec<u32>,
    pub vert: Vec<u32>,
}

#[inline]
fn bin_of(m: f64, max: f64, bins: u32) -> u32 {
    let b = (m / max * bins as f64).floor();
    if b <= 0.0 {
        0
    } else {
        (b as u64).min(bins as u64 - 1) as u32
    }
}

pub fn quantize(field: &DerivateField, bins: u32, max: MaxMagnitude) -> Result<QuantizedDerivates> {
    if bins < 2 {
        return Err(Error::Param(format!("bins must be at least 2, got {bins}")));
    }
    let max = match max {
        MaxMagnitude::Fixed(m) if m > 0.0 && m.is_finite() => m,
        MaxMagnitude::Fixed(m) => {
            return Err(Error::Param(format!("max_magnitude must be positive, got {m}")))
        }
        MaxMagnitude::Auto => match field.max_magnitude() as f64 {
            m if m > 0.0 => m,
            _ => 1.0,
        },
    };
    let q = |v: &[f32]| v.iter().map(|&m| bin_of(m as f64, max, bins)).collect();
    Ok(QuantizedDerivates {
        width: field.width,
        height: field.height,
        bins,
        bin_width: max / bins as f64,
        horiz: q(&field.horiz),
        vert: q(&field.vert),
    })
}

/// Gray levels of a single-channel image mapped into `bins` levels over
/// `range = (lo, hi)`. With `range = None` integer depths use their nominal
/// range and float images the observed one.
pub fn quantize_gray(image: &MultiChannelImage, bins: u32, range: Option<(f64, f64)>) -> Result<Vec<u32>> {
    if bins < 2 {
        return Err(Error::Param(format!("bins must be at least 2, got {bins}")));
    }
    if image.channels() != 1 {
        return Err(Error::Param(format!(
            "gray quantization needs 1 channel, image has {}",
            image.channels()
        )));
    }
    let plane = image.channel_plane(0);
    let (lo, hi) = range.unwrap_or_else(|| match image.depth() {
        Depth::U8 | Depth::U16 => (0.0, image.depth().nominal_max().unwrap()),
        Depth::F32 => plane.iter().fold((f64::MAX, f64::MIN), |(lo, hi), &v| {
            (lo.min(v as f64), hi.max(v as f64))
        }),
    });
    let span = hi - lo;
    Ok(plane
        .iter()
        .map(|&v| {
            if span > 0.0 {
                bin_of(v as f64 - lo, span, bins)
            } else {
                0
            }
        })
        .collect())
}
