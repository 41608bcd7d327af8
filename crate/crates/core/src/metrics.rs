//! Full-reference quality metrics adapted to HDR by PU21 encoding.
//!
//! PU-PSNR is PSNR over PU21-encoded RGB; PU-SSIM is SSIM over the BT.709
//! luma of PU21-encoded pixels.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{LinearImage, BT709_LUMA, CHANNELS};
use crate::transfer::{encode_image, DisplayModel, EncodingKind};

/// PSNR reported for a zero mean squared error.
pub const PSNR_CAP_DB: f64 = 120.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MetricKind {
    #[serde(rename = "PU-PSNR")]
    PuPsnr,
    #[serde(rename = "PU-SSIM")]
    PuSsim,
}

impl MetricKind {
    pub const ALL: [MetricKind; 2] = [MetricKind::PuPsnr, MetricKind::PuSsim];

    pub fn name(&self) -> &'static str {
        match self {
            MetricKind::PuPsnr => "PU-PSNR",
            MetricKind::PuSsim => "PU-SSIM",
        }
    }

    pub fn evaluate(&self, test: &LinearImage, reference: &LinearImage, display: &DisplayModel) -> Result<f64> {
        match self {
            MetricKind::PuPsnr => pu_psnr(test, reference, display),
            MetricKind::PuSsim => pu_ssim(test, reference, display),
        }
    }
}

impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MetricKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "pu-psnr" | "pu_psnr" | "psnr" => Ok(MetricKind::PuPsnr),
            "pu-ssim" | "pu_ssim" | "ssim" => Ok(MetricKind::PuSsim),
            _ => Err(Error::contract(format!("unknown metric {s:?}"))),
        }
    }
}

/// A single per-image score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricScore {
    pub metric: MetricKind,
    pub value: f64,
    pub image_id: String,
}

fn check_dims(a: &LinearImage, b: &LinearImage) -> Result<()> {
    if a.dims() != b.dims() {
        return Err(Error::contract(format!(
            "metric inputs differ in size: {}x{} vs {}x{}",
            a.width(),
            a.height(),
            b.width(),
            b.height()
        )));
    }
    Ok(())
}

/// PSNR on PU21-encoded RGB with a peak signal of 1.0, capped at
/// [`PSNR_CAP_DB`].
pub fn pu_psnr(test: &LinearImage, reference: &LinearImage, display: &DisplayModel) -> Result<f64> {
    check_dims(test, reference)?;
    let t = encode_image(test, EncodingKind::Pu21, display)?;
    let r = encode_image(reference, EncodingKind::Pu21, display)?;
    let sse: f64 = t
        .data()
        .iter()
        .zip(r.data())
        .map(|(&a, &b)| (f64::from(a) - f64::from(b)).powi(2))
        .sum();
    Ok(psnr_from_mse(sse / t.data().len() as f64))
}

pub fn psnr_from_mse(mse: f64) -> f64 {
    if mse <= 0.0 {
        PSNR_CAP_DB
    } else {
        (10.0 * (1.0 / mse).log10()).min(PSNR_CAP_DB)
    }
}

/// SSIM window and stabilizer settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SsimParams {
    pub window: usize,
    pub sigma: f64,
    pub k1: f64,
    pub k2: f64,
    pub dynamic_range: f64,
}

impl Default for SsimParams {
    fn default() -> Self {
        Self {
            window: 11,
            sigma: 1.5,
            k1: 0.01,
            k2: 0.03,
            dynamic_range: 1.0,
        }
    }
}

impl SsimParams {
    fn weights(&self) -> Vec<f64> {
        let c = (self.window as f64 - 1.0) / 2.0;
        let mut w: Vec<f64> = (0..self.window)
            .map(|i| (-(i as f64 - c).powi(2) / (2.0 * self.sigma * self.sigma)).exp())
            .collect();
        let s: f64 = w.iter().sum();
        w.iter_mut().for_each(|v| *v /= s);
        w
    }
}

/// PU-SSIM with the standard 11x11, sigma 1.5 Gaussian window.
pub fn pu_ssim(test: &LinearImage, reference: &LinearImage, display: &DisplayModel) -> Result<f64> {
    pu_ssim_with(test, reference, display, &SsimParams::default())
}

pub fn pu_ssim_with(
    test: &LinearImage,
    reference: &LinearImage,
    display: &DisplayModel,
    params: &SsimParams,
) -> Result<f64> {
    check_dims(test, reference)?;
    let (w, h) = test.dims();
    if params.window == 0 || w < params.window || h < params.window {
        return Err(Error::contract(format!(
            "PU-SSIM needs images of at least {0}x{0} pixels, got {w}x{h}",
            params.window
        )));
    }
    let a = pu21_luma(test, display)?;
    let b = pu21_luma(reference, display)?;
    Ok(ssim_plane(&a, &b, w, h, params))
}

/// BT.709 luma of the PU21-encoded image, one value per pixel.
pub fn pu21_luma(img: &LinearImage, display: &DisplayModel) -> Result<Vec<f64>> {
    let e = encode_image(img, EncodingKind::Pu21, display)?;
    Ok(e.data()
        .chunks_exact(CHANNELS)
        .map(|p| {
            BT709_LUMA[0] * f64::from(p[0])
                + BT709_LUMA[1] * f64::from(p[1])
                + BT709_LUMA[2] * f64::from(p[2])
        })
        .collect())
}

// Valid-region separable filtering: returns (w - n + 1) x (h - n + 1) values.
fn filter_valid(src: &[f64], w: usize, h: usize, k: &[f64]) -> Vec<f64> {
    let n = k.len();
    let (ow, oh) = (w - n + 1, h - n + 1);
    let mut tmp = vec![0.0; ow * h];
    for y in 0..h {
        let row = &src[y * w..(y + 1) * w];
        for x in 0..ow {
            tmp[y * ow + x] = k.iter().zip(&row[x..x + n]).map(|(a, b)| a * b).sum();
        }
    }
    let mut out = vec![0.0; ow * oh];
    for y in 0..oh {
        for x in 0..ow {
            out[y * ow + x] = k
                .iter()
                .enumerate()
                .map(|(i, a)| a * tmp[(y + i) * ow + x])
                .sum();
        }
    }
    out
}

/// Mean SSIM of two single-channel planes over all valid window positions.
pub fn ssim_plane(a: &[f64], b: &[f64], w: usize, h: usize, params: &SsimParams) -> f64 {
    let k = params.weights();
    let c1 = (params.k1 * params.dynamic_range).powi(2);
    let c2 = (params.k2 * params.dynamic_range).powi(2);
    let prod = |f: &dyn Fn(f64, f64) -> f64| -> Vec<f64> { a.iter().zip(b).map(|(&x, &y)| f(x, y)).collect() };
    let mu_a = filter_valid(a, w, h, &k);
    let mu_b = filter_valid(b, w, h, &k);
    let aa = filter_valid(&prod(&|x, _| x * x), w, h, &k);
    let bb = filter_valid(&prod(&|_, y| y * y), w, h, &k);
    let ab = filter_valid(&prod(&|x, y| x * y), w, h, &k);
    let n = mu_a.len();
    let sum: f64 = (0..n)
        .map(|i| {
            let (ma, mb) = (mu_a[i], mu_b[i]);
            let va = aa[i] - ma * ma;
            let vb = bb[i] - mb * mb;
            let cov = ab[i] - ma * mb;
            ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2))
        })
        .sum();
    sum / n as f64
}
