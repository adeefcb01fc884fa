//! Image tensors, the 3×3 Gaussian frequency decomposition, and recomposition.
//!
//! Images are planar `C×H×W` arrays of `f64` intensities. Sources that are
//! 8-bit or 32-bit float (dataset loaders, the HTTP wire format) produce
//! samples that are exactly representable in `f32`; for such images the
//! split `high = x - blur(x)` is exact, so `high + low == x` bitwise.

mod dataset;
mod metrics;

use std::fmt;

use base64::Engine;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Result, StbaError};

pub use dataset::{
    encode_cifar10_record, load_cifar10_batch, load_cifar10_file, load_png_dir, save_png,
    PngDirLoad, PngFileError, CIFAR10_CLASSES, CIFAR10_RECORD_LEN,
};
pub use metrics::{psnr, ssim};

/// `(channels, height, width)`; serialized as `[C, H, W]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(from = "[usize; 3]", into = "[usize; 3]")]
pub struct Shape {
    pub channels: usize,
    pub height: usize,
    pub width: usize,
}

impl Shape {
    pub const fn new(channels: usize, height: usize, width: usize) -> Self {
        Shape {
            channels,
            height,
            width,
        }
    }

    pub const fn len(&self) -> usize {
        self.channels * self.height * self.width
    }

    pub const fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub const fn plane_len(&self) -> usize {
        self.height * self.width
    }
}

impl From<[usize; 3]> for Shape {
    fn from([c, h, w]: [usize; 3]) -> Self {
        Shape::new(c, h, w)
    }
}

impl From<Shape> for [usize; 3] {
    fn from(s: Shape) -> Self {
        [s.channels, s.height, s.width]
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}x{}", self.channels, self.height, self.width)
    }
}

/// A planar image: channel planes stored one after another, each row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Image {
    shape: Shape,
    data: Vec<f64>,
}

impl Image {
    pub fn new(shape: Shape, data: Vec<f64>) -> Result<Self> {
        if shape.channels == 0 || shape.height == 0 || shape.width == 0 {
            return Err(StbaError::InvalidImage(format!("degenerate shape {shape}")));
        }
        if data.len() != shape.len() {
            return Err(StbaError::InvalidImage(format!(
                "data length {} does not match shape {shape} ({})",
                data.len(),
                shape.len()
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(StbaError::InvalidImage(format!(
                "non-finite value at index {i}"
            )));
        }
        Ok(Image { shape, data })
    }

    /// Builds an image from 32-bit samples (the wire and storage precision).
    pub fn from_f32(shape: Shape, data: &[f32]) -> Result<Self> {
        Image::new(shape, data.iter().map(|&v| f64::from(v)).collect())
    }

    pub fn filled(shape: Shape, value: f64) -> Self {
        assert!(value.is_finite());
        assert!(!shape.is_empty());
        Image {
            shape,
            data: vec![value; shape.len()],
        }
    }

    pub fn zeros(shape: Shape) -> Self {
        Image::filled(shape, 0.0)
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn channels(&self) -> usize {
        self.shape.channels
    }

    pub fn height(&self) -> usize {
        self.shape.height
    }

    pub fn width(&self) -> usize {
        self.shape.width
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn plane(&self, c: usize) -> &[f64] {
        let n = self.shape.plane_len();
        &self.data[c * n..(c + 1) * n]
    }

    pub fn get(&self, c: usize, y: usize, x: usize) -> f64 {
        self.data[(c * self.shape.height + y) * self.shape.width + x]
    }

    /// Rounds every sample to the nearest `f32`, the precision at which
    /// images cross the oracle boundary.
    pub fn to_f32_precision(&self) -> Image {
        Image {
            shape: self.shape,
            data: self.data.iter().map(|&v| f64::from(v as f32)).collect(),
        }
    }

    pub fn to_f32_vec(&self) -> Vec<f32> {
        self.data.iter().map(|&v| v as f32).collect()
    }

    /// True when every sample lies in `[0, 1]`.
    pub fn is_displayable(&self) -> bool {
        self.data.iter().all(|v| (0.0..=1.0).contains(v))
    }

    pub(crate) fn from_parts_unchecked(shape: Shape, data: Vec<f64>) -> Self {
        debug_assert_eq!(shape.len(), data.len());
        Image { shape, data }
    }

    fn zip_with(&self, other: &Image, op: impl Fn(f64, f64) -> f64) -> Result<Image> {
        if self.shape != other.shape {
            return Err(StbaError::shape(self.shape, other.shape));
        }
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| op(a, b))
            .collect();
        Ok(Image::from_parts_unchecked(self.shape, data))
    }
}

#[derive(Serialize, Deserialize)]
struct ImageRepr {
    shape: Shape,
    /// Base64 of little-endian `f32` samples.
    data: String,
}

impl Serialize for Image {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut bytes = Vec::with_capacity(self.data.len() * 4);
        for v in &self.data {
            bytes.extend_from_slice(&(*v as f32).to_le_bytes());
        }
        ImageRepr {
            shape: self.shape,
            data: base64::engine::general_purpose::STANDARD.encode(bytes),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Image {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error;
        let repr = ImageRepr::deserialize(deserializer)?;
        let bytes = base64::engine::general_purpose::STANDARD
            .decode(repr.data.as_bytes())
            .map_err(D::Error::custom)?;
        if bytes.len() % 4 != 0 {
            return Err(D::Error::custom(
                "image payload is not a whole number of f32s",
            ));
        }
        let samples: Vec<f32> = bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        Image::from_f32(repr.shape, &samples).map_err(D::Error::custom)
    }
}

/// Maps an 8-bit intensity onto `[0, 1]` (division by 255 in `f32`).
pub fn unit_from_u8(v: u8) -> f64 {
    f64::from(f32::from(v) / 255.0)
}

/// Inverse of [`unit_from_u8`] for in-range values; clamps and rounds otherwise.
pub fn u8_from_unit(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

#[derive(Clone, Debug, PartialEq)]
pub struct LabeledImage {
    pub image: Image,
    pub label: usize,
}

/// High/low frequency decomposition of an image. `high + low` reproduces
/// the source without clamping.
#[derive(Clone, Debug, PartialEq)]
pub struct FrequencyPair {
    pub high: Image,
    pub low: Image,
}

impl FrequencyPair {
    pub fn sum_unclamped(&self) -> Image {
        self.high
            .zip_with(&self.low, |h, l| h + l)
            .expect("frequency pair halves share a shape")
    }
}

/// One pass of the `[1, 2, 1] / 4` filter along rows (`horizontal`) or
/// columns, with clamp-to-edge borders.
fn binomial_pass(plane: &[f64], height: usize, width: usize, horizontal: bool) -> Vec<f64> {
    let mut out = vec![0.0; plane.len()];
    for y in 0..height {
        for x in 0..width {
            let (prev, next) = if horizontal {
                (
                    plane[y * width + x.saturating_sub(1)],
                    plane[y * width + (x + 1).min(width - 1)],
                )
            } else {
                (
                    plane[y.saturating_sub(1) * width + x],
                    plane[(y + 1).min(height - 1) * width + x],
                )
            };
            out[y * width + x] = 0.25 * prev + 0.5 * plane[y * width + x] + 0.25 * next;
        }
    }
    out
}

/// Convolves each channel with `[[1,2,1],[2,4,2],[1,2,1]] / 16` using
/// replicate padding. The kernel is applied separably.
pub fn gaussian_blur3(img: &Image) -> Image {
    let Shape { height, width, .. } = img.shape();
    let mut data = Vec::with_capacity(img.data.len());
    for c in 0..img.channels() {
        let rows = binomial_pass(img.plane(c), height, width, true);
        data.extend(binomial_pass(&rows, height, width, false));
    }
    Image::from_parts_unchecked(img.shape(), data)
}

/// `low = gaussian_blur3(x)`, `high = x - low`. No clamping.
pub fn frequency_split(img: &Image) -> FrequencyPair {
    let low = gaussian_blur3(img);
    let high = img
        .zip_with(&low, |x, l| x - l)
        .expect("blur preserves shape");
    FrequencyPair { high, low }
}

/// Elementwise `high + low`, clamped to the displayable range.
pub fn recompose(high: &Image, low: &Image) -> Result<Image> {
    high.zip_with(low, |h, l| (h + l).clamp(0.0, 1.0))
}
