//! Multi-channel raster container and the file formats the toolkit reads and writes.
//!
//! Three formats are supported:
//!
//! * binary PGM (`P5`), one channel, maxval 255 or 65535;
//! * binary PPM (`P6`), three channels, maxval 255 or 65535;
//! * MCI, a minimal container for any channel count:
//!
//! ```text
//! MCI1
//! <width> <height> <channels> <u8|u16|f32>
//! <raw little-endian samples, row-major, channel-interleaved>
//! ```
//!
//! Netpbm 16-bit samples are big-endian, MCI samples are little-endian.
//! Loading never rescales or clamps sample values.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// Sample type of an image.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Depth {
    U8,
    U16,
    F32,
}

impl Depth {
    pub fn tag(self) -> &'static str {
        match self {
            Depth::U8 => "u8",
            Depth::U16 => "u16",
            Depth::F32 => "f32",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Depth> {
        match tag {
            "u8" => Some(Depth::U8),
            "u16" => Some(Depth::U16),
            "f32" => Some(Depth::F32),
            _ => None,
        }
    }

    pub fn byte_size(self) -> usize {
        match self {
            Depth::U8 => 1,
            Depth::U16 => 2,
            Depth::F32 => 4,
        }
    }

    /// Nominal maximum of an integer depth. `None` for float samples.
    pub fn nominal_max(self) -> Option<f64> {
        match self {
            Depth::U8 => Some(255.0),
            Depth::U16 => Some(65535.0),
            Depth::F32 => None,
        }
    }
}

/// Interleaved sample storage.
#[derive(Debug, Clone, PartialEq)]
pub enum Samples {
    U8(Vec<u8>),
    U16(Vec<u16>),
    F32(Vec<f32>),
}

impl Samples {
    pub fn len(&self) -> usize {
        match self {
            Samples::U8(v) => v.len(),
            Samples::U16(v) => v.len(),
            Samples::F32(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn depth(&self) -> Depth {
        match self {
            Samples::U8(_) => Depth::U8,
            Samples::U16(_) => Depth::U16,
            Samples::F32(_) => Depth::F32,
        }
    }

    #[inline]
    pub fn get_f32(&self, idx: usize) -> f32 {
        match self {
            Samples::U8(v) => v[idx] as f32,
            Samples::U16(v) => v[idx] as f32,
            Samples::F32(v) => v[idx],
        }
    }
}

/// Row-major, channel-interleaved image with `channels >= 1` samples per pixel.
///
/// Immutable once constructed: all constructors validate the geometry and
/// reject non-finite float samples.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiChannelImage {
    width: usize,
    height: usize,
    channels: usize,
    samples: Samples,
}

impl MultiChannelImage {
    pub fn new(width: usize, height: usize, channels: usize, samples: Samples) -> Result<Self> {
        if width == 0 || height == 0 || channels == 0 {
            return Err(Error::Dimensions {
                width,
                height,
                channels,
            });
        }
        let expected = width
            .checked_mul(height)
            .and_then(|n| n.checked_mul(channels))
            .ok_or(Error::Dimensions {
                width,
                height,
                channels,
            })?;
        if samples.len() != expected {
            return Err(Error::Truncated {
                expected,
                actual: samples.len(),
            });
        }
        if let Samples::F32(v) = &samples {
            if let Some(idx) = v.iter().position(|s| !s.is_finite()) {
                return Err(Error::NonFinite(idx));
            }
        }
        Ok(Self {
            width,
            height,
            channels,
            samples,
        })
    }

    pub fn from_u8(width: usize, height: usize, channels: usize, data: Vec<u8>) -> Result<Self> {
        Self::new(width, height, channels, Samples::U8(data))
    }

    pub fn from_u16(width: usize, height: usize, channels: usize, data: Vec<u16>) -> Result<Self> {
        Self::new(width, height, channels, Samples::U16(data))
    }

    pub fn from_f32(width: usize, height: usize, channels: usize, data: Vec<f32>) -> Result<Self> {
        Self::new(width, height, channels, Samples::F32(data))
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    pub fn depth(&self) -> Depth {
        self.samples.depth()
    }

    pub fn samples(&self) -> &Samples {
        &self.samples
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, c: usize) -> f32 {
        self.samples
            .get_f32((y * self.width + x) * self.channels + c)
    }

    /// All samples converted to `f32`, keeping the interleaved layout.
    pub fn to_f32_vec(&self) -> Vec<f32> {
        match &self.samples {
            Samples::U8(v) => v.iter().map(|&s| s as f32).collect(),
            Samples::U16(v) => v.iter().map(|&s| s as f32).collect(),
            Samples::F32(v) => v.clone(),
        }
    }

    /// One channel as a dense plane of `f32`.
    pub fn channel_plane(&self, c: usize) -> Vec<f32> {
        (0..self.pixel_count())
            .map(|p| self.samples.get_f32(p * self.channels + c))
            .collect()
    }

    /// Largest minus smallest sample over the whole image.
    pub fn value_range(&self) -> f64 {
        let (lo, hi) = (0..self.samples.len()).fold((f64::MAX, f64::MIN), |(lo, hi), i| {
            let v = self.samples.get_f32(i) as f64;
            (lo.min(v), hi.max(v))
        });
        hi - lo
    }
}

/// Per-pixel region identifiers, 0 meaning unlabeled.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelImage {
    pub width: usize,
    pub height: usize,
    pub labels: Vec<u32>,
}

impl LabelImage {
    pub fn zeros(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            labels: vec![0; width * height],
        }
    }

    pub fn max_label(&self) -> u32 {
        self.labels.iter().copied().max().unwrap_or(0)
    }

    pub fn get(&self, x: usize, y: usize) -> u32 {
        self.labels[y * self.width + x]
    }
}

/// On-disk raster formats.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ImageFormat {
    Pgm,
    Ppm,
    Mci,
}

impl ImageFormat {
    pub fn name(self) -> &'static str {
        match self {
            ImageFormat::Pgm => "PGM",
            ImageFormat::Ppm => "PPM",
            ImageFormat::Mci => "MCI",
        }
    }

    /// Guess the format from a file extension.
    pub fn from_path(path: &Path) -> Option<ImageFormat> {
        let ext = path.extension()?.to_str()?.to_ascii_lowercase();
        match ext.as_str() {
            "pgm" => Some(ImageFormat::Pgm),
            "ppm" => Some(ImageFormat::Ppm),
            "mci" => Some(ImageFormat::Mci),
            _ => None,
        }
    }
}

pub fn load_image(path: impl AsRef<Path>) -> Result<MultiChannelImage> {
    let bytes = fs::read(path)?;
    decode_image(&bytes)
}

/// Decode PGM, PPM or MCI bytes, dispatching on the magic number.
pub fn decode_image(bytes: &[u8]) -> Result<MultiChannelImage> {
    if bytes.starts_with(b"P5") {
        decode_netpbm(bytes, 1)
    } else if bytes.starts_with(b"P6") {
        decode_netpbm(bytes, 3)
    } else if bytes.starts_with(b"MCI1") {
        decode_mci(bytes)
    } else {
        Err(Error::Header("unknown magic number".into()))
    }
}

pub fn save_image(image: &MultiChannelImage, path: impl AsRef<Path>, format: ImageFormat) -> Result<()> {
    let bytes = encode_image(image, format)?;
    fs::write(path, bytes)?;
    Ok(())
}

pub fn encode_image(image: &MultiChannelImage, format: ImageFormat) -> Result<Vec<u8>> {
    match format {
        ImageFormat::Pgm | ImageFormat::Ppm => encode_netpbm(image, format),
        ImageFormat::Mci => Ok(encode_mci(image)),
    }
}

/// Save a label image as a 16-bit PGM.
pub fn save_labels(labels: &LabelImage, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, encode_labels(labels)?)?;
    Ok(())
}

pub fn encode_labels(labels: &LabelImage) -> Result<Vec<u8>> {
    let max = labels.max_label();
    if max > u16::MAX as u32 {
        return Err(Error::LabelOverflow(max));
    }
    let data = labels.labels.iter().map(|&l| l as u16).collect();
    let image = MultiChannelImage::from_u16(labels.width, labels.height, 1, data)?;
    encode_netpbm(&image, ImageFormat::Pgm)
}

struct HeaderCursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> HeaderCursor<'a> {
    fn skip_space_and_comments(&mut self) {
        while self.pos < self.bytes.len() {
            let b = self.bytes[self.pos];
            if b == b'#' {
                while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                    self.pos += 1;
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<usize> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(Error::Header(format!("missing {what}")));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Header(format!("invalid {what}")))
    }
}

fn decode_netpbm(bytes: &[u8], channels: usize) -> Result<MultiChannelImage> {
    let mut cur = HeaderCursor { bytes, pos: 2 };
    let width = cur.number("width")?;
    let height = cur.number("height")?;
    let maxval = cur.number("maxval")?;
    // exactly one whitespace byte separates the header from the raster
    match bytes.get(cur.pos) {
        Some(b) if b.is_ascii_whitespace() => cur.pos += 1,
        _ => return Err(Error::Header("missing separator after maxval".into())),
    }
    if width == 0 || height == 0 {
        return Err(Error::Dimensions {
            width,
            height,
            channels,
        });
    }
    let count = width * height * channels;
    let data = &bytes[cur.pos..];
    match maxval {
        255 => {
            check_len(count, data.len())?;
            MultiChannelImage::from_u8(width, height, channels, data[..count].to_vec())
        }
        65535 => {
            check_len(count * 2, data.len())?;
            let samples = data[..count * 2]
                .chunks_exact(2)
                .map(|c| u16::from_be_bytes([c[0], c[1]]))
                .collect();
            MultiChannelImage::from_u16(width, height, channels, samples)
        }
        other => Err(Error::Header(format!(
            "unsupported maxval {other} (expected 255 or 65535)"
        ))),
    }
}

fn check_len(expected: usize, actual: usize) -> Result<()> {
    if actual < expected {
        Err(Error::Truncated { expected, actual })
    } else if actual > expected {
        Err(Error::Header(format!(
            "{} trailing bytes after raster",
            actual - expected
        )))
    } else {
        Ok(())
    }
}

fn encode_netpbm(image: &MultiChannelImage, format: ImageFormat) -> Result<Vec<u8>> {
    let (magic, channels) = match format {
        ImageFormat::Pgm => ("P5", 1),
        ImageFormat::Ppm => ("P6", 3),
        ImageFormat::Mci => unreachable!(),
    };
    let mismatch = || Error::FormatMismatch {
        format: format.name(),
        channels: image.channels(),
        depth: image.depth().tag(),
    };
    if image.channels() != channels {
        return Err(mismatch());
    }
    let maxval = match image.depth() {
        Depth::U8 => 255,
        Depth::U16 => 65535,
        Depth::F32 => return Err(mismatch()),
    };
    let mut out = format!("{magic}\n{} {}\n{maxval}\n", image.width(), image.height()).into_bytes();
    match image.samples() {
        Samples::U8(v) => out.extend_from_slice(v),
        Samples::U16(v) => v.iter().for_each(|s| out.extend_from_slice(&s.to_be_bytes())),
        Samples::F32(_) => unreachable!(),
    }
    Ok(out)
}

fn decode_mci(bytes: &[u8]) -> Result<MultiChannelImage> {
    let mut lines = bytes.splitn(3, |&b| b == b'\n');
    let magic = lines.next().unwrap_or_default();
    if magic != b"MCI1" {
        return Err(Error::Header("expected MCI1 magic line".into()));
    }
    let dims = lines
        .next()
        .ok_or_else(|| Error::Header("missing dimension line".into()))?;
    let dims = std::str::from_utf8(dims).map_err(|_| Error::Header("non-ASCII header".into()))?;
    let fields: Vec<&str> = dims.split_ascii_whitespace().collect();
    if fields.len() != 4 {
        return Err(Error::Header(format!("expected 4 header fields, found {}", fields.len())));
    }
    let parse = |s: &str, what: &str| -> Result<usize> {
        s.parse()
            .map_err(|_| Error::Header(format!("invalid {what} '{s}'")))
    };
    let width = parse(fields[0], "width")?;
    let height = parse(fields[1], "height")?;
    let channels = parse(fields[2], "channels")?;
    let depth = Depth::from_tag(fields[3])
        .ok_or_else(|| Error::Header(format!("unknown dtype '{}'", fields[3])))?;
    if width == 0 || height == 0 || channels == 0 {
        return Err(Error::Dimensions {
            width,
            height,
            channels,
        });
    }
    let data = lines.next().unwrap_or_default();
    let count = width * height * channels;
    check_len(count * depth.byte_size(), data.len())?;
    let samples = match depth {
        Depth::U8 => Samples::U8(data.to_vec()),
        Depth::U16 => Samples::U16(
            data.chunks_exact(2)
                .map(|c| u16::from_le_bytes([c[0], c[1]]))
                .collect(),
        ),
        Depth::F32 => Samples::F32(
            data.chunks_exact(4)
                .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
                .collect(),
        ),
    };
    MultiChannelImage::new(width, height, channels, samples)
}

fn encode_mci(image: &MultiChannelImage) -> Vec<u8> {
    let mut out = format!(
        "MCI1\n{} {} {} {}\n",
        image.width(),
        image.height(),
        image.channels(),
        image.depth().tag()
    )
    .into_bytes();
    match image.samples() {
        Samples::U8(v) => out.extend_from_slice(v),
        Samples::U16(v) => v.iter().for_each(|s| out.extend_from_slice(&s.to_le_bytes())),
        Samples::F32(v) => v.iter().for_each(|s| out.extend_from_slice(&s.to_le_bytes())),
    }
    out
}
