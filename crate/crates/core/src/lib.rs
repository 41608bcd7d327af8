//! Perceptual encodings, losses, degradations, HDR-adapted quality metrics
//! and significance testing for training and evaluating restoration networks
//! on HDR and RAW images.

pub mod dataset;
pub mod degrade;
pub mod error;
pub mod image;
pub mod imageio;
pub mod loss;
pub mod metrics;
pub mod pipeline;
pub mod rng;
pub mod stats;
pub mod synthetic;
pub mod transfer;

pub use error::{Error, Result};
pub use image::{EncodedImage, LinearImage};
pub use loss::{condition_registry, Condition, LossKind};
pub use metrics::MetricKind;
pub use transfer::{DisplayModel, EncodingKind};
