//! Image buffers.
//!
//! Both buffer types store interleaved BT.709 RGB in row-major order as `f32`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::transfer::EncodingKind;

pub const CHANNELS: usize = 3;

/// BT.709 luminance weights for linear (or encoded, giving luma) RGB.
pub const BT709_LUMA: [f64; 3] = [0.2126, 0.7152, 0.0722];

/// Relative linear RGB image.
///
/// Values are nominally in `[0, 1]`, where 1 maps to the display peak.
/// Images built with [`LinearImage::new`] are finite and non-negative;
/// [`LinearImage::from_prediction`] relaxes the sign requirement for network
/// outputs, which get clamped when encoded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearImage {
    width: usize,
    height: usize,
    data: Vec<f32>,
}

fn check_len(width: usize, height: usize, len: usize) -> Result<()> {
    if width == 0 || height == 0 {
        return Err(Error::contract(format!(
            "image dimensions must be positive, got {width}x{height}"
        )));
    }
    if len != width * height * CHANNELS {
        return Err(Error::contract(format!(
            "buffer length {len} does not match {width}x{height}x{CHANNELS}"
        )));
    }
    Ok(())
}

impl LinearImage {
    pub fn new(width: usize, height: usize, data: Vec<f32>) -> Result<Self> {
        check_len(width, height, data.len())?;
        if let Some((i, v)) = data
            .iter()
            .enumerate()
            .find(|(_, v)| !v.is_finite() || **v < 0.0)
        {
            return Err(Error::contract(format!(
                "linear pixel value {v} at element {i} is negative or not finite"
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    /// Builds an image that may hold negative values, such as raw network output.
    pub fn from_prediction(width: usize, height: usize, data: Vec<f32>) -> Result<Self> {
        check_len(width, height, data.len())?;
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::contract("prediction contains non-finite values"));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn constant(width: usize, height: usize, value: f32) -> Result<Self> {
        Self::new(width, height, vec![value; width * height * CHANNELS])
    }

    /// Builds an image from a per-pixel function returning RGB.
    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> [f32; 3],
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height * CHANNELS);
        for y in 0..height {
            for x in 0..width {
                data.extend_from_slice(&f(x, y));
            }
        }
        Self::new(width, height, data)
    }

    // Used by operators whose output is non-negative by construction.
    pub(crate) fn from_parts(width: usize, height: usize, data: Vec<f32>) -> Self {
        debug_assert_eq!(data.len(), width * height * CHANNELS);
        Self {
            width,
            height,
            data,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    pub fn pixel(&self, x: usize, y: usize) -> [f32; 3] {
        let i = (y * self.width + x) * CHANNELS;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    /// Multiplies every element by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let data = self
            .data
            .iter()
            .map(|&v| (f64::from(v) * factor) as f32)
            .collect();
        Self::from_parts(self.width, self.height, data)
    }

    /// Mean BT.709 luminance in relative units.
    pub fn mean_luminance(&self) -> f64 {
        let sum: f64 = self
            .data
            .chunks_exact(CHANNELS)
            .map(|p| {
                BT709_LUMA[0] * f64::from(p[0])
                    + BT709_LUMA[1] * f64::from(p[1])
                    + BT709_LUMA[2] * f64::from(p[2])
            })
            .sum();
        sum / (self.width * self.height) as f64
    }

    /// Copies a `w`x`h` window starting at (`x0`, `y0`).
    pub fn crop(&self, x0: usize, y0: usize, w: usize, h: usize) -> Result<Self> {
        let data = crop_buffer(&self.data, self.width, self.height, x0, y0, w, h)?;
        Ok(Self::from_parts(w, h, data))
    }
}

/// Image whose values have passed through a transfer function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncodedImage {
    width: usize,
    height: usize,
    encoding: EncodingKind,
    data: Vec<f32>,
}

impl EncodedImage {
    pub fn new(width: usize, height: usize, encoding: EncodingKind, data: Vec<f32>) -> Result<Self> {
        check_len(width, height, data.len())?;
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::contract("encoded image contains non-finite values"));
        }
        Ok(Self {
            width,
            height,
            encoding,
            data,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn encoding(&self) -> EncodingKind {
        self.encoding
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    pub fn crop(&self, x0: usize, y0: usize, w: usize, h: usize) -> Result<Self> {
        let data = crop_buffer(&self.data, self.width, self.height, x0, y0, w, h)?;
        Ok(Self {
            width: w,
            height: h,
            encoding: self.encoding,
            data,
        })
    }
}

fn crop_buffer(
    data: &[f32],
    width: usize,
    height: usize,
    x0: usize,
    y0: usize,
    w: usize,
    h: usize,
) -> Result<Vec<f32>> {
    if w == 0 || h == 0 || x0 + w > width || y0 + h > height {
        return Err(Error::contract(format!(
            "crop {w}x{h}+{x0}+{y0} exceeds image {width}x{height}"
        )));
    }
    let mut out = Vec::with_capacity(w * h * CHANNELS);
    for y in y0..y0 + h {
        let start = (y * width + x0) * CHANNELS;
        out.extend_from_slice(&data[start..start + w * CHANNELS]);
    }
    Ok(out)
}
