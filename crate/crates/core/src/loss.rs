//! Training losses and the registry of (pixel encoding, loss) conditions.
//!
//! All reductions are means over every element, accumulated in `f64` in a
//! fixed order.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{EncodedImage, LinearImage};
use crate::transfer::{encode_image, DisplayModel, EncodingKind};

pub const DEFAULT_SMAPE_EPSILON: f64 = 1e-3;

/// Loss applied to model output.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum LossKind {
    L1,
    /// L1 after applying a perceptual encoding to both prediction and reference.
    #[serde(rename = "encoded_l1")]
    EncodedL1 { encoding: EncodingKind },
    Smape { epsilon: f64 },
}

impl LossKind {
    pub fn smape() -> Self {
        LossKind::Smape {
            epsilon: DEFAULT_SMAPE_EPSILON,
        }
    }

    /// Evaluates the loss on relative linear images. For [`LossKind::L1`] the
    /// inputs are compared as they are.
    pub fn evaluate(&self, pred: &LinearImage, reference: &LinearImage, display: &DisplayModel) -> Result<f64> {
        match *self {
            LossKind::L1 => loss_l1(pred.data(), reference.data()),
            LossKind::EncodedL1 { encoding } => loss_encoded_l1(pred, reference, encoding, display),
            LossKind::Smape { epsilon } => loss_smape(pred, reference, epsilon),
        }
    }
}

fn check_same_len(a: &[f32], b: &[f32]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::contract(format!(
            "loss inputs differ in size: {} vs {} elements",
            a.len(),
            b.len()
        )));
    }
    if a.is_empty() {
        return Err(Error::contract("loss inputs are empty"));
    }
    Ok(())
}

fn check_dims(a: (usize, usize), b: (usize, usize)) -> Result<()> {
    if a != b {
        return Err(Error::contract(format!(
            "image dimensions differ: {}x{} vs {}x{}",
            a.0, a.1, b.0, b.1
        )));
    }
    Ok(())
}

/// Mean absolute difference between two equally sized buffers.
pub fn loss_l1(pred: &[f32], reference: &[f32]) -> Result<f64> {
    check_same_len(pred, reference)?;
    let sum: f64 = pred
        .iter()
        .zip(reference)
        .map(|(&p, &r)| (f64::from(p) - f64::from(r)).abs())
        .sum();
    Ok(sum / pred.len() as f64)
}

/// [`loss_l1`] on two encoded images, which must share dimensions and encoding.
pub fn loss_l1_encoded_images(pred: &EncodedImage, reference: &EncodedImage) -> Result<f64> {
    check_dims(pred.dims(), reference.dims())?;
    if pred.encoding() != reference.encoding() {
        return Err(Error::contract(format!(
            "encoding mismatch: {} vs {}",
            pred.encoding(),
            reference.encoding()
        )));
    }
    loss_l1(pred.data(), reference.data())
}

/// L1 distance after clamping and encoding both images with `encoding`.
pub fn loss_encoded_l1(
    pred: &LinearImage,
    reference: &LinearImage,
    encoding: EncodingKind,
    display: &DisplayModel,
) -> Result<f64> {
    check_dims(pred.dims(), reference.dims())?;
    let p = encode_image(pred, encoding, display)?;
    let r = encode_image(reference, encoding, display)?;
    loss_l1(p.data(), r.data())
}

/// Symmetric mean absolute percentage error on relative linear values.
pub fn loss_smape(pred: &LinearImage, reference: &LinearImage, epsilon: f64) -> Result<f64> {
    check_dims(pred.dims(), reference.dims())?;
    smape_values(pred.data(), reference.data(), epsilon)
}

/// SMAPE on raw buffers; see [`loss_smape`].
pub fn smape_values(pred: &[f32], reference: &[f32], epsilon: f64) -> Result<f64> {
    check_same_len(pred, reference)?;
    if epsilon.is_nan() || epsilon <= 0.0 {
        return Err(Error::Domain {
            what: "epsilon",
            value: epsilon,
            domain: "(0, inf)",
        });
    }
    let sum: f64 = pred
        .iter()
        .zip(reference)
        .map(|(&p, &r)| {
            let (p, r) = (f64::from(p), f64::from(r));
            (p - r).abs() / (p.abs() + r.abs() + epsilon)
        })
        .sum();
    Ok(sum / pred.len() as f64)
}

/// One training configuration: data encoding plus the loss on model output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Condition {
    pub label: String,
    pub encoding: EncodingKind,
    pub loss: LossKind,
}

impl Condition {
    fn new(label: &str, encoding: EncodingKind, loss: LossKind) -> Self {
        Self {
            label: label.to_string(),
            encoding,
            loss,
        }
    }

    /// Looks a condition up in [`condition_registry`] by label (case-insensitive;
    /// `mu` and `μ` are interchangeable).
    pub fn by_label(label: &str) -> Result<Self> {
        let norm = |s: &str| s.to_ascii_lowercase().replace('μ', "mu");
        let wanted = norm(label);
        condition_registry()
            .into_iter()
            .find(|c| norm(&c.label) == wanted)
            .ok_or_else(|| Error::contract(format!("unknown condition {label:?}")))
    }

    /// The training loss of this condition for a prediction and reference in
    /// relative linear units: both are encoded with the condition's data
    /// encoding first, then compared with its loss.
    pub fn evaluate_linear(&self, pred: &LinearImage, reference: &LinearImage, display: &DisplayModel) -> Result<f64> {
        match (self.encoding, self.loss) {
            (EncodingKind::Linear, loss) => loss.evaluate(pred, reference, display),
            (encoding, LossKind::L1) => loss_encoded_l1(pred, reference, encoding, display),
            (encoding, loss) => Err(Error::contract(format!(
                "condition {} combines {encoding} data with a {loss:?} loss",
                self.label
            ))),
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label)
    }
}

impl FromStr for Condition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Condition::by_label(s)
    }
}

/// The eight tested (encoding, loss) pairs, in result-table order.
pub fn condition_registry() -> Vec<Condition> {
    vec![
        Condition::new("PU21-L1", EncodingKind::Pu21, LossKind::L1),
        Condition::new("PQ-L1", EncodingKind::Pq, LossKind::L1),
        Condition::new("mu-L1", EncodingKind::mulaw(), LossKind::L1),
        Condition::new("Linear-L1", EncodingKind::Linear, LossKind::L1),
        Condition::new(
            "Linear-PU21",
            EncodingKind::Linear,
            LossKind::EncodedL1 {
                encoding: EncodingKind::Pu21,
            },
        ),
        Condition::new(
            "Linear-PQ",
            EncodingKind::Linear,
            LossKind::EncodedL1 {
                encoding: EncodingKind::Pq,
            },
        ),
        Condition::new(
            "Linear-mu",
            EncodingKind::Linear,
            LossKind::EncodedL1 {
                encoding: EncodingKind::mulaw(),
            },
        ),
        Condition::new("Linear-SMAPE", EncodingKind::Linear, LossKind::smape()),
    ]
}
