//! Degradations applied in linear color space: camera noise, Gaussian blur
//! and bilinear 4x downsampling.
//!
//! The operators take [`LinearImage`] only; there is no way to apply them to an
//! [`EncodedImage`](crate::image::EncodedImage).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{LinearImage, CHANNELS};
use crate::rng::CounterRng;

/// Heteroscedastic Gaussian approximation of photon + readout noise.
///
/// Each element `x` receives zero-mean Gaussian noise with variance
/// `photon_gain * x + readout_std^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseParams {
    pub photon_gain: f64,
    pub readout_std: f64,
    pub seed: u64,
}

impl Default for NoiseParams {
    fn default() -> Self {
        Self {
            photon_gain: 0.01,
            readout_std: 0.002,
            seed: 0,
        }
    }
}

impl NoiseParams {
    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v.is_finite() && v >= 0.0;
        if !ok(self.photon_gain) || !ok(self.readout_std) {
            return Err(Error::contract(format!(
                "noise parameters must be finite and non-negative (k = {}, sigma_r = {})",
                self.photon_gain, self.readout_std
            )));
        }
        if self.photon_gain == 0.0 && self.readout_std == 0.0 {
            return Err(Error::contract("photon gain and readout noise cannot both be zero"));
        }
        Ok(())
    }

    /// Noise variance at signal level `x`.
    pub fn variance(&self, x: f64) -> f64 {
        self.photon_gain * x.max(0.0) + self.readout_std * self.readout_std
    }
}

fn noisy_values(img: &LinearImage, params: &NoiseParams) -> Result<Vec<f64>> {
    params.validate()?;
    let params = *params;
    let sample = move |rng: &mut CounterRng, i: usize, x: f32| {
        let x = f64::from(x);
        x + params.variance(x).sqrt() * rng.normal(i as u64)
    };
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        Ok(img
            .data()
            .par_iter()
            .enumerate()
            .map_init(|| CounterRng::new(params.seed), |rng, (i, &x)| sample(rng, i, x))
            .collect())
    }
    #[cfg(not(feature = "parallel"))]
    {
        let mut rng = CounterRng::new(params.seed);
        Ok(img
            .data()
            .iter()
            .enumerate()
            .map(|(i, &x)| sample(&mut rng, i, x))
            .collect())
    }
}

/// Adds camera noise and clamps the result to be non-negative.
///
/// Element `i` always uses draw `i` of the seed's stream, so output is
/// bitwise reproducible regardless of thread count.
pub fn add_camera_noise(img: &LinearImage, params: &NoiseParams) -> Result<LinearImage> {
    let data = noisy_values(img, params)?
        .into_iter()
        .map(|v| v.max(0.0) as f32)
        .collect();
    Ok(LinearImage::from_parts(img.width(), img.height(), data))
}

/// Same draws as [`add_camera_noise`] but without the final clamp; values may
/// be negative. Useful for checking the noise model itself.
pub fn add_camera_noise_unclamped(img: &LinearImage, params: &NoiseParams) -> Result<Vec<f64>> {
    noisy_values(img, params)
}

/// Isotropic Gaussian blur parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlurParams {
    pub sigma: f64,
    /// Defaults to `ceil(3 * sigma)` when unset.
    #[serde(default)]
    pub radius: Option<usize>,
}

impl Default for BlurParams {
    fn default() -> Self {
        Self {
            sigma: 8.0,
            radius: None,
        }
    }
}

impl BlurParams {
    pub fn with_sigma(sigma: f64) -> Self {
        Self { sigma, radius: None }
    }

    pub fn kernel_radius(&self) -> usize {
        self.radius.unwrap_or_else(|| (3.0 * self.sigma).ceil() as usize)
    }

    /// Normalized 1-D kernel of length `2 * radius + 1`.
    pub fn kernel(&self) -> Result<Vec<f64>> {
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::Domain {
                what: "sigma",
                value: self.sigma,
                domain: "(0, inf)",
            });
        }
        let r = self.kernel_radius() as i64;
        let denom = 2.0 * self.sigma * self.sigma;
        let mut k: Vec<f64> = (-r..=r).map(|x| (-((x * x) as f64) / denom).exp()).collect();
        let sum: f64 = k.iter().sum();
        k.iter_mut().for_each(|v| *v /= sum);
        Ok(k)
    }
}

/// Symmetric (edge-duplicating) reflection of `i` into `0..n`.
fn reflect(i: i64, n: usize) -> usize {
    let n = n as i64;
    let period = 2 * n;
    let m = i.rem_euclid(period);
    (if m >= n { period - 1 - m } else { m }) as usize
}

// Convolves each row of `src` (rows of `w` RGB pixels) along x.
fn convolve_rows(src: &[f64], w: usize, kernel: &[f64]) -> Vec<f64> {
    let r = (kernel.len() / 2) as i64;
    let row = |y: usize, out: &mut [f64]| {
        let line = &src[y * w * CHANNELS..(y + 1) * w * CHANNELS];
        for x in 0..w {
            let mut acc = [0.0f64; CHANNELS];
            for (k, &wgt) in kernel.iter().enumerate() {
                let sx = reflect(x as i64 + k as i64 - r, w);
                for c in 0..CHANNELS {
                    acc[c] += wgt * line[sx * CHANNELS + c];
                }
            }
            out[x * CHANNELS..(x + 1) * CHANNELS].copy_from_slice(&acc);
        }
    };
    let mut dst = vec![0.0; src.len()];
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        dst.par_chunks_mut(w * CHANNELS)
            .enumerate()
            .for_each(|(y, out)| row(y, out));
    }
    #[cfg(not(feature = "parallel"))]
    for (y, out) in dst.chunks_mut(w * CHANNELS).enumerate() {
        row(y, out);
    }
    dst
}

fn transpose(src: &[f64], w: usize, h: usize) -> Vec<f64> {
    let mut dst = vec![0.0; src.len()];
    for y in 0..h {
        for x in 0..w {
            let s = (y * w + x) * CHANNELS;
            let d = (x * h + y) * CHANNELS;
            dst[d..d + CHANNELS].copy_from_slice(&src[s..s + CHANNELS]);
        }
    }
    dst
}

fn to_f64(img: &LinearImage) -> Vec<f64> {
    img.data().iter().map(|&v| f64::from(v)).collect()
}

/// Separable Gaussian blur with symmetric boundary reflection.
pub fn gaussian_blur(img: &LinearImage, params: &BlurParams) -> Result<LinearImage> {
    let kernel = params.kernel()?;
    let (w, h) = img.dims();
    let horiz = convolve_rows(&to_f64(img), w, &kernel);
    let vert = convolve_rows(&transpose(&horiz, w, h), h, &kernel);
    let data = transpose(&vert, h, w)
        .into_iter()
        .map(|v| v.max(0.0) as f32)
        .collect();
    Ok(LinearImage::from_parts(w, h, data))
}

// Box-prefilters one line with width `factor` and samples it bilinearly at the
// centres of the output pixels.
fn downsample_line(line: &[f64], stride: usize, len: usize, factor: usize, out: &mut [f64]) {
    let out_len = len / factor;
    // boxed[j] averages source samples j..j+factor and sits at j + (factor-1)/2.
    let boxed_len = len - factor + 1;
    let boxed = |j: usize, c: usize| -> f64 {
        (j..j + factor).map(|s| line[s * stride + c]).sum::<f64>() / factor as f64
    };
    let offset = (factor as f64 - 1.0) / 2.0;
    for i in 0..out_len {
        let src_pos = (i as f64 + 0.5) * factor as f64 - 0.5;
        let q = (src_pos - offset).clamp(0.0, (boxed_len - 1) as f64);
        let j0 = q.floor() as usize;
        let t = q - j0 as f64;
        let j1 = (j0 + 1).min(boxed_len - 1);
        for c in 0..stride {
            let v0 = boxed(j0, c);
            out[i * stride + c] = if t == 0.0 {
                v0
            } else {
                v0 + t * (boxed(j1, c) - v0)
            };
        }
    }
}

/// Downsamples by an integer `factor` along both axes.
///
/// The source is box-prefiltered with width `factor` and then sampled
/// bilinearly at `(i + 0.5) * factor - 0.5`. For integer factors the sample
/// positions land on prefilter nodes, so each output pixel is the mean of its
/// `factor x factor` source block.
pub fn downsample_bilinear(img: &LinearImage, factor: usize) -> Result<LinearImage> {
    let (w, h) = img.dims();
    if factor == 0 || w % factor != 0 || h % factor != 0 {
        return Err(Error::contract(format!(
            "image {w}x{h} is not divisible by downsampling factor {factor}"
        )));
    }
    let (ow, oh) = (w / factor, h / factor);
    let src = to_f64(img);
    let mut rows = vec![0.0; ow * h * CHANNELS];
    for y in 0..h {
        downsample_line(
            &src[y * w * CHANNELS..(y + 1) * w * CHANNELS],
            CHANNELS,
            w,
            factor,
            &mut rows[y * ow * CHANNELS..(y + 1) * ow * CHANNELS],
        );
    }
    let cols = transpose(&rows, ow, h);
    let mut out_t = vec![0.0; ow * oh * CHANNELS];
    for x in 0..ow {
        downsample_line(
            &cols[x * h * CHANNELS..(x + 1) * h * CHANNELS],
            CHANNELS,
            h,
            factor,
            &mut out_t[x * oh * CHANNELS..(x + 1) * oh * CHANNELS],
        );
    }
    let data = transpose(&out_t, oh, ow)
        .into_iter()
        .map(|v| v as f32)
        .collect();
    Ok(LinearImage::from_parts(ow, oh, data))
}

/// Bilinear upsampling by an integer factor with edge clamping; the usual
/// naive baseline for super-resolution.
pub fn upsample_bilinear(img: &LinearImage, factor: usize) -> Result<LinearImage> {
    if factor == 0 {
        return Err(Error::contract("upsampling factor must be positive"));
    }
    let (w, h) = img.dims();
    let (ow, oh) = (w * factor, h * factor);
    let coord = |o: usize, n: usize| {
        let s = ((o as f64 + 0.5) / factor as f64 - 0.5).clamp(0.0, (n - 1) as f64);
        let i0 = s.floor() as usize;
        (i0, (i0 + 1).min(n - 1), s - i0 as f64)
    };
    let src = img.data();
    let at = |x: usize, y: usize, c: usize| f64::from(src[(y * w + x) * CHANNELS + c]);
    let mut data = Vec::with_capacity(ow * oh * CHANNELS);
    for oy in 0..oh {
        let (y0, y1, ty) = coord(oy, h);
        for ox in 0..ow {
            let (x0, x1, tx) = coord(ox, w);
            for c in 0..CHANNELS {
                let top = at(x0, y0, c) * (1.0 - tx) + at(x1, y0, c) * tx;
                let bot = at(x0, y1, c) * (1.0 - tx) + at(x1, y1, c) * tx;
                data.push((top * (1.0 - ty) + bot * ty) as f32);
            }
        }
    }
    Ok(LinearImage::from_parts(ow, oh, data))
}
