//! Pixel-value transfer functions: linear, μ-law, PQ (SMPTE ST 2084) and the
//! quadratic PU21 fit, with inverses, closed-form derivatives and image-level
//! wrappers.
//!
//! PQ and PU21 take absolute luminance in cd/m²; linear and μ-law take
//! relative values in `[0, 1]`. Scalar functions keep strict domains and
//! return [`Error::Domain`] outside them. Clamping is done by the image-level
//! functions, before encoding.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{EncodedImage, LinearImage};

/// Upper end of the luminance range PQ and PU21 are defined on.
pub const REFERENCE_MAX_NITS: f64 = 10_000.0;
pub const DEFAULT_BLACK_NITS: f64 = 0.005;
pub const DEFAULT_PEAK_NITS: f64 = 4_000.0;
pub const DEFAULT_MU: f64 = 5_000.0;

/// Maps relative linear values to absolute luminance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DisplayModel {
    black_level: f64,
    peak: f64,
}

impl Default for DisplayModel {
    fn default() -> Self {
        Self {
            black_level: DEFAULT_BLACK_NITS,
            peak: DEFAULT_PEAK_NITS,
        }
    }
}

impl DisplayModel {
    /// Requires `0 < black_level < peak <= 10000`.
    pub fn new(black_level: f64, peak: f64) -> Result<Self> {
        if !(black_level > 0.0 && black_level < peak && peak <= REFERENCE_MAX_NITS) {
            return Err(Error::contract(format!(
                "display model needs 0 < black ({black_level}) < peak ({peak}) <= {REFERENCE_MAX_NITS}"
            )));
        }
        Ok(Self { black_level, peak })
    }

    pub fn black_level(&self) -> f64 {
        self.black_level
    }

    pub fn peak(&self) -> f64 {
        self.peak
    }

    pub fn reference_max(&self) -> f64 {
        REFERENCE_MAX_NITS
    }

    pub fn absolute(&self, relative: f64) -> f64 {
        relative * self.peak
    }

    pub fn relative(&self, absolute: f64) -> f64 {
        absolute / self.peak
    }
}

/// Pixel encoding applied before a model or inside a loss.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum EncodingKind {
    Linear,
    #[serde(rename = "mulaw")]
    MuLaw {
        mu: f64,
    },
    Pq,
    Pu21,
}

impl EncodingKind {
    pub fn mulaw() -> Self {
        EncodingKind::MuLaw { mu: DEFAULT_MU }
    }

    /// True for encodings that take absolute luminance.
    pub fn is_absolute(&self) -> bool {
        matches!(self, EncodingKind::Pq | EncodingKind::Pu21)
    }

    /// Short lowercase name, also used for directory names.
    pub fn name(&self) -> &'static str {
        match self {
            EncodingKind::Linear => "linear",
            EncodingKind::MuLaw { .. } => "mulaw",
            EncodingKind::Pq => "pq",
            EncodingKind::Pu21 => "pu21",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            EncodingKind::MuLaw { mu } if !(mu > 0.0 && mu.is_finite()) => Err(Error::Domain {
                what: "mu",
                value: mu,
                domain: "(0, inf)",
            }),
            _ => Ok(()),
        }
    }

    /// Encodes a scalar given in this encoding's native input units.
    pub fn encode(&self, x: f64) -> Result<f64> {
        match *self {
            EncodingKind::Linear => {
                if (0.0..=1.0).contains(&x) {
                    Ok(x)
                } else {
                    Err(Error::Domain {
                        what: "l",
                        value: x,
                        domain: "[0, 1]",
                    })
                }
            }
            EncodingKind::MuLaw { mu } => encode_mulaw(x, mu),
            EncodingKind::Pq => encode_pq(x),
            EncodingKind::Pu21 => encode_pu21(x),
        }
    }

    /// Inverse of [`EncodingKind::encode`].
    pub fn decode(&self, v: f64) -> Result<f64> {
        match *self {
            EncodingKind::Linear => EncodingKind::Linear.encode(v),
            EncodingKind::MuLaw { mu } => decode_mulaw(v, mu),
            EncodingKind::Pq => decode_pq(v),
            EncodingKind::Pu21 => decode_pu21(v),
        }
    }

    /// Derivative of the encoding with respect to its native input.
    pub fn derivative(&self, x: f64) -> Result<f64> {
        match *self {
            EncodingKind::Linear => EncodingKind::Linear.encode(x).map(|_| 1.0),
            EncodingKind::MuLaw { mu } => derivative_mulaw(x, mu),
            EncodingKind::Pq => derivative_pq(x),
            EncodingKind::Pu21 => derivative_pu21(x),
        }
    }

    /// Derivative with respect to the relative linear value, i.e. including
    /// the relative-to-absolute scaling of `display` for PQ and PU21.
    pub fn derivative_relative(&self, l: f64, display: &DisplayModel) -> Result<f64> {
        if self.is_absolute() {
            Ok(self.derivative(display.absolute(l))? * display.peak())
        } else {
            self.derivative(l)
        }
    }
}

impl fmt::Display for EncodingKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EncodingKind::MuLaw { mu } if *mu != DEFAULT_MU => write!(f, "mulaw:{mu}"),
            _ => f.write_str(self.name()),
        }
    }
}

impl FromStr for EncodingKind {
    type Err = Error;

    /// Accepts `linear`, `pq`, `pu21`, `mulaw` and `mulaw:<mu>`.
    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        let kind = match lower.as_str() {
            "linear" => EncodingKind::Linear,
            "pq" => EncodingKind::Pq,
            "pu21" | "pu" => EncodingKind::Pu21,
            "mulaw" | "mu-law" | "mu" => EncodingKind::mulaw(),
            other => match other.strip_prefix("mulaw:") {
                Some(mu) => EncodingKind::MuLaw {
                    mu: mu
                        .parse()
                        .map_err(|_| Error::contract(format!("bad mu value in {s:?}")))?,
                },
                None => return Err(Error::contract(format!("unknown encoding {s:?}"))),
            },
        };
        kind.validate()?;
        Ok(kind)
    }
}

// μ-law

fn check_mu(mu: f64) -> Result<()> {
    EncodingKind::MuLaw { mu }.validate()
}

fn check_unit(what: &'static str, x: f64) -> Result<()> {
    if (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(Error::Domain {
            what,
            value: x,
            domain: "[0, 1]",
        })
    }
}

/// `log(1 + μl) / log(1 + μ)` for relative `l` in `[0, 1]`.
pub fn encode_mulaw(l: f64, mu: f64) -> Result<f64> {
    check_mu(mu)?;
    check_unit("l", l)?;
    Ok((mu * l).ln_1p() / mu.ln_1p())
}

pub fn decode_mulaw(v: f64, mu: f64) -> Result<f64> {
    check_mu(mu)?;
    check_unit("v", v)?;
    Ok((v * mu.ln_1p()).exp_m1() / mu)
}

pub fn derivative_mulaw(l: f64, mu: f64) -> Result<f64> {
    check_mu(mu)?;
    check_unit("l", l)?;
    Ok(mu / ((1.0 + mu * l) * mu.ln_1p()))
}

// PU21 (quadratic fit in log2 luminance)

/// Coefficients of the quadratic PU21 approximation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pu21Params {
    pub a: f64,
    pub b: f64,
    /// log2 of the lowest encodable luminance.
    pub log_min: f64,
}

impl Default for Pu21Params {
    fn default() -> Self {
        Self {
            a: 0.001908,
            b: 0.0078,
            log_min: DEFAULT_BLACK_NITS.log2(),
        }
    }
}

impl Pu21Params {
    pub fn min_luminance(&self) -> f64 {
        self.log_min.exp2()
    }

    fn check_luminance(&self, l: f64) -> Result<()> {
        // log_min round-trips through exp2 with a last-bit error, so compare in log space.
        if l > 0.0 && l.log2() >= self.log_min && l <= REFERENCE_MAX_NITS {
            Ok(())
        } else {
            Err(Error::Domain {
                what: "L",
                value: l,
                domain: "[0.005, 10000] cd/m2",
            })
        }
    }

    pub fn encode(&self, l: f64) -> Result<f64> {
        self.check_luminance(l)?;
        let x = l.log2() - self.log_min;
        Ok(self.a * x * x + self.b * x)
    }

    pub fn max_encoded(&self) -> f64 {
        let x = REFERENCE_MAX_NITS.log2() - self.log_min;
        self.a * x * x + self.b * x
    }

    pub fn decode(&self, v: f64) -> Result<f64> {
        if !(0.0..=self.max_encoded()).contains(&v) {
            return Err(Error::Domain {
                what: "V",
                value: v,
                domain: "[0, encode_pu21(10000)]",
            });
        }
        let disc = self.b * self.b + 4.0 * self.a * v;
        if disc < 0.0 {
            return Err(Error::Domain {
                what: "discriminant",
                value: disc,
                domain: "[0, inf)",
            });
        }
        let exponent = (2.0 * self.a * self.log_min - self.b + disc.sqrt()) / (2.0 * self.a);
        Ok(exponent.exp2())
    }

    pub fn derivative(&self, l: f64) -> Result<f64> {
        self.check_luminance(l)?;
        let x = l.log2() - self.log_min;
        Ok((2.0 * self.a * x + self.b) / (l * std::f64::consts::LN_2))
    }
}

pub fn encode_pu21(l: f64) -> Result<f64> {
    Pu21Params::default().encode(l)
}

pub fn decode_pu21(v: f64) -> Result<f64> {
    Pu21Params::default().decode(v)
}

pub fn derivative_pu21(l: f64) -> Result<f64> {
    Pu21Params::default().derivative(l)
}

// PQ, SMPTE ST 2084 inverse EOTF

const PQ_M1: f64 = 2610.0 / 16384.0;
const PQ_M2: f64 = 2523.0 / 4096.0 * 128.0;
const PQ_C1: f64 = 3424.0 / 4096.0;
const PQ_C2: f64 = 2413.0 / 4096.0 * 32.0;
const PQ_C3: f64 = 2392.0 / 4096.0 * 32.0;

fn check_pq_luminance(l: f64) -> Result<()> {
    if (0.0..=REFERENCE_MAX_NITS).contains(&l) {
        Ok(())
    } else {
        Err(Error::Domain {
            what: "L",
            value: l,
            domain: "[0, 10000] cd/m2",
        })
    }
}

pub fn encode_pq(l: f64) -> Result<f64> {
    check_pq_luminance(l)?;
    let y = (l / REFERENCE_MAX_NITS).powf(PQ_M1);
    Ok(((PQ_C1 + PQ_C2 * y) / (1.0 + PQ_C3 * y)).powf(PQ_M2))
}

pub fn decode_pq(v: f64) -> Result<f64> {
    if !(v > 0.0 && v <= 1.0) {
        return Err(Error::Domain {
            what: "V",
            value: v,
            domain: "(0, 1]",
        });
    }
    let p = v.powf(1.0 / PQ_M2);
    let num = (p - PQ_C1).max(0.0);
    let den = PQ_C2 - PQ_C3 * p;
    Ok(REFERENCE_MAX_NITS * (num / den).powf(1.0 / PQ_M1))
}

/// Derivative of [`encode_pq`]; undefined (infinite) at zero luminance.
pub fn derivative_pq(l: f64) -> Result<f64> {
    check_pq_luminance(l)?;
    if l == 0.0 {
        return Err(Error::Domain {
            what: "L",
            value: l,
            domain: "(0, 10000] cd/m2",
        });
    }
    let ynorm = l / REFERENCE_MAX_NITS;
    let y = ynorm.powf(PQ_M1);
    let num = PQ_C1 + PQ_C2 * y;
    let den = 1.0 + PQ_C3 * y;
    let ratio = num / den;
    let d_ratio = (PQ_C2 * den - PQ_C3 * num) / (den * den);
    let d_y = PQ_M1 * ynorm.powf(PQ_M1 - 1.0) / REFERENCE_MAX_NITS;
    Ok(PQ_M2 * ratio.powf(PQ_M2 - 1.0) * d_ratio * d_y)
}

// Image level

#[cfg(feature = "parallel")]
fn map_values(src: &[f32], f: impl Fn(f64) -> f64 + Sync) -> Vec<f32> {
    use rayon::prelude::*;
    src.par_iter().map(|&v| f(f64::from(v)) as f32).collect()
}

#[cfg(not(feature = "parallel"))]
fn map_values(src: &[f32], f: impl Fn(f64) -> f64) -> Vec<f32> {
    src.iter().map(|&v| f(f64::from(v)) as f32).collect()
}

/// Clamps a relative value into the input domain of `kind` and returns it in
/// the encoder's native units.
pub fn clamp_to_domain(l: f64, kind: EncodingKind, display: &DisplayModel) -> f64 {
    match kind {
        EncodingKind::Pq => display
            .absolute(l)
            .clamp(display.black_level(), display.peak()),
        // PU21 is undefined below its own floor even if the display goes darker.
        EncodingKind::Pu21 => {
            let lo = display.black_level().max(DEFAULT_BLACK_NITS);
            display.absolute(l).clamp(lo, display.peak().max(lo))
        }
        _ => l.clamp(0.0, 1.0),
    }
}

/// Clamps then encodes every channel of every pixel.
///
/// PQ and PU21 first map relative values to absolute luminance through
/// `display` and clamp to `[black_level, peak]`; linear and μ-law clamp to
/// `[0, 1]`.
pub fn encode_image(img: &LinearImage, kind: EncodingKind, display: &DisplayModel) -> Result<EncodedImage> {
    kind.validate()?;
    let display = *display;
    // Clamped inputs are always in-domain, so the scalar encoders cannot fail here.
    let data = match kind {
        EncodingKind::Linear => map_values(img.data(), |l| l.clamp(0.0, 1.0)),
        EncodingKind::MuLaw { mu } => {
            let denom = mu.ln_1p();
            map_values(img.data(), move |l| (mu * l.clamp(0.0, 1.0)).ln_1p() / denom)
        }
        EncodingKind::Pq | EncodingKind::Pu21 => map_values(img.data(), move |l| {
            kind.encode(clamp_to_domain(l, kind, &display))
                .expect("clamped luminance is in domain")
        }),
    };
    EncodedImage::new(img.width(), img.height(), kind, data)
}

/// Inverse of [`encode_image`].
///
/// Encoded values are first clamped into the decoder's domain, so slightly
/// out-of-range model outputs decode to the nearest representable value.
pub fn decode_image(img: &EncodedImage, display: &DisplayModel) -> Result<LinearImage> {
    let kind = img.encoding();
    kind.validate()?;
    let display = *display;
    let data = match kind {
        EncodingKind::Linear => map_values(img.data(), |v| v.max(0.0)),
        EncodingKind::MuLaw { mu } => {
            let scale = mu.ln_1p();
            map_values(img.data(), move |v| (v.clamp(0.0, 1.0) * scale).exp_m1() / mu)
        }
        EncodingKind::Pq => map_values(img.data(), move |v| {
            let v = v.clamp(f64::MIN_POSITIVE, 1.0);
            display.relative(decode_pq(v).expect("clamped PQ value is in domain"))
        }),
        EncodingKind::Pu21 => {
            let params = Pu21Params::default();
            let hi = params.max_encoded();
            map_values(img.data(), move |v| {
                display.relative(params.decode(v.clamp(0.0, hi)).expect("clamped PU21 value is in domain"))
            })
        }
    };
    LinearImage::new(img.width(), img.height(), data)
}

/// One row of the transfer-function comparison table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurveRow {
    pub luminance_cd_m2: f64,
    pub linear: f64,
    pub mulaw: f64,
    pub pq: f64,
    pub pu21: f64,
}

/// Samples all encodings at `n` log-spaced luminances over `[0.005, 10000]`.
///
/// Linear and μ-law see the luminance divided by 10000.
pub fn curve_table(n: usize, mu: f64) -> Result<Vec<CurveRow>> {
    if n < 2 {
        return Err(Error::contract("curve table needs at least 2 samples"));
    }
    let lo = DEFAULT_BLACK_NITS.log10();
    let hi = REFERENCE_MAX_NITS.log10();
    (0..n)
        .map(|i| {
            let t = i as f64 / (n - 1) as f64;
            let l = if i == n - 1 {
                REFERENCE_MAX_NITS
            } else if i == 0 {
                DEFAULT_BLACK_NITS
            } else {
                10f64.powf(lo + t * (hi - lo))
            };
            let rel = l / REFERENCE_MAX_NITS;
            Ok(CurveRow {
                luminance_cd_m2: l,
                linear: rel,
                mulaw: encode_mulaw(rel, mu)?,
                pq: encode_pq(l)?,
                pu21: encode_pu21(l)?,
            })
        })
        .collect()
}

pub fn write_curve_csv<W: Write>(mut out: W, rows: &[CurveRow]) -> std::io::Result<()> {
    writeln!(out, "luminance_cd_m2,linear,mulaw,pq,pu21")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{}",
            r.luminance_cd_m2, r.linear, r.mulaw, r.pq, r.pu21
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel_close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(f64::MIN_POSITIVE)
    }

    // Reference values below were evaluated with 40-digit arithmetic (mpmath).

    #[test]
    fn mulaw_examples() {
        assert_eq!(encode_mulaw(0.0, 5000.0).unwrap(), 0.0);
        assert_eq!(encode_mulaw(1.0, 5000.0).unwrap(), 1.0);
        assert!((encode_mulaw(0.5, 5000.0).unwrap() - 0.918_643_271_879_646_3).abs() < 1e-12);
        assert_eq!(decode_mulaw(0.0, 5000.0).unwrap(), 0.0);
        assert!((decode_mulaw(1.0, 5000.0).unwrap() - 1.0).abs() < 1e-12);
        assert!((decode_mulaw(0.9186, 5000.0).unwrap() - 0.499_815_678_450_365).abs() < 1e-10);
    }

    #[test]
    fn mulaw_domain_errors() {
        assert!(encode_mulaw(-0.01, 5000.0).is_err());
        assert!(encode_mulaw(1.01, 5000.0).is_err());
        assert!(encode_mulaw(0.5, 0.0).is_err());
        assert!(encode_mulaw(0.5, -3.0).is_err());
        assert!(decode_mulaw(1.5, 5000.0).is_err());
    }

    #[test]
    fn pu21_examples() {
        assert_eq!(encode_pu21(0.005).unwrap(), 0.0);
        assert!((encode_pu21(100.0).unwrap() - 0.500_940_843_938_199_7).abs() < 1e-12);
        assert!((encode_pu21(10_000.0).unwrap() - 0.999_219_348_610_314_5).abs() < 1e-12);
        assert!((encode_pu21(4_000.0).unwrap() - 0.886_653_698_816_574_2).abs() < 1e-12);
        assert!(encode_pu21(0.004).is_err());
        assert!(encode_pu21(10_001.0).is_err());
    }

    #[test]
    fn pu21_inverse_examples() {
        assert!(rel_close(decode_pu21(0.0).unwrap(), 0.005, 1e-12));
        let v = encode_pu21(100.0).unwrap();
        assert!(rel_close(decode_pu21(v).unwrap(), 100.0, 1e-5));
        assert!(rel_close(decode_pu21(0.9992).unwrap(), 9_998.470_431_259_844, 1e-9));
        assert!(decode_pu21(-0.1).is_err());
        assert!(decode_pu21(1.0).is_err());
    }

    #[test]
    fn pq_examples() {
        assert!((encode_pq(10_000.0).unwrap() - 1.0).abs() < 1e-12);
        let floor = encode_pq(0.005).unwrap();
        assert!(floor > 0.0);
        assert!((floor - 0.015_076_399_042_368_02).abs() < 1e-12);
        assert!((encode_pq(4_000.0).unwrap() - 0.902_572_393_310_940_5).abs() < 1e-12);
        assert!(encode_pq(-1.0).is_err());
        assert!(encode_pq(10_000.5).is_err());
    }

    #[test]
    fn pq_inverse_examples() {
        assert!(rel_close(decode_pq(1.0).unwrap(), 10_000.0, 1e-9));
        let v = encode_pq(500.0).unwrap();
        assert!(rel_close(decode_pq(v).unwrap(), 500.0, 1e-5));
        let v = encode_pq(0.005).unwrap();
        assert!(rel_close(decode_pq(v).unwrap(), 0.005, 1e-5));
        assert!(decode_pq(0.0).is_err());
        assert!(decode_pq(1.1).is_err());
    }

    #[test]
    fn derivative_examples() {
        let d = derivative_pu21(0.005).unwrap();
        assert!((d - 2.250_604_263_786_783).abs() < 1e-9);
        let d = derivative_mulaw(0.0, 5000.0).unwrap();
        assert!((d - 587.034_072_441_093_5).abs() < 1e-9);
        assert!(derivative_pq(0.0).is_err());
        assert!(derivative_pu21(0.001).is_err());
    }

    #[test]
    fn pq_visibility_ratio() {
        let ratio = derivative_pq(0.005).unwrap() / derivative_pq(100.0).unwrap();
        assert!(ratio > 150.0, "{ratio}");
        assert!((ratio - 1_566.004_093_794_073).abs() < 1e-6 * ratio);
    }

    #[test]
    fn derivative_relative_scales_by_peak() {
        let d = DisplayModel::default();
        let a = EncodingKind::Pq.derivative_relative(0.25, &d).unwrap();
        let b = derivative_pq(1000.0).unwrap() * 4000.0;
        assert_eq!(a, b);
        assert_eq!(EncodingKind::Linear.derivative_relative(0.3, &d).unwrap(), 1.0);
    }

    #[test]
    fn display_model_validation() {
        assert!(DisplayModel::new(0.005, 4000.0).is_ok());
        assert!(DisplayModel::new(0.0, 4000.0).is_err());
        assert!(DisplayModel::new(10.0, 5.0).is_err());
        assert!(DisplayModel::new(0.005, 20_000.0).is_err());
        assert_eq!(DisplayModel::default().absolute(1.0), 4000.0);
    }

    #[test]
    fn parse_encoding_names() {
        assert_eq!("PQ".parse::<EncodingKind>().unwrap(), EncodingKind::Pq);
        assert_eq!("pu21".parse::<EncodingKind>().unwrap(), EncodingKind::Pu21);
        assert_eq!("mulaw".parse::<EncodingKind>().unwrap(), EncodingKind::mulaw());
        assert_eq!(
            "mulaw:100".parse::<EncodingKind>().unwrap(),
            EncodingKind::MuLaw { mu: 100.0 }
        );
        assert!("mulaw:-1".parse::<EncodingKind>().is_err());
        assert!("srgb".parse::<EncodingKind>().is_err());
        assert_eq!(EncodingKind::MuLaw { mu: 100.0 }.to_string(), "mulaw:100");
    }

    #[test]
    fn encode_image_constants() {
        let d = DisplayModel::default();
        let one = LinearImage::constant(3, 2, 1.0).unwrap();
        let e = encode_image(&one, EncodingKind::Pq, &d).unwrap();
        for &v in e.data() {
            assert!((f64::from(v) - 0.902_572_393_310_940_5).abs() < 1e-6);
        }
        let zero = LinearImage::constant(3, 2, 0.0).unwrap();
        let e = encode_image(&zero, EncodingKind::Pu21, &d).unwrap();
        assert!(e.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn linear_encoding_is_clamped_identity() {
        let img = LinearImage::from_prediction(2, 1, vec![0.2, 1.5, -0.3, 0.0, 0.7, 1.0]).unwrap();
        let e = encode_image(&img, EncodingKind::Linear, &DisplayModel::default()).unwrap();
        assert_eq!(e.data(), &[0.2, 1.0, 0.0, 0.0, 0.7, 1.0]);
        let back = decode_image(&e, &DisplayModel::default()).unwrap();
        assert_eq!(back.data(), e.data());
    }

    #[test]
    fn pq_ceiling_decodes_above_working_peak() {
        let d = DisplayModel::default();
        let e = EncodedImage::new(1, 1, EncodingKind::Pq, vec![1.0; 3]).unwrap();
        let l = decode_image(&e, &d).unwrap();
        for &v in l.data() {
            assert!((v - 2.5).abs() < 1e-5);
        }
    }

    #[test]
    fn curve_table_spans_range() {
        let rows = curve_table(50, DEFAULT_MU).unwrap();
        assert_eq!(rows[0].luminance_cd_m2, 0.005);
        assert_eq!(rows[49].luminance_cd_m2, 10_000.0);
        assert_eq!(rows[0].pu21, 0.0);
        assert!((rows[49].pq - 1.0).abs() < 1e-12);
        assert!(rows.windows(2).all(|w| w[0].pq < w[1].pq && w[0].pu21 < w[1].pu21));
        let mut buf = Vec::new();
        write_curve_csv(&mut buf, &rows).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("luminance_cd_m2,linear,mulaw,pq,pu21\n"));
        assert_eq!(text.lines().count(), 51);
    }
}
