//! Dataset preparation: splits, exposure normalization and augmentation,
//! task degradations, training-pair materialization and patch sampling.
//!
//! Degradation always happens on linear data; encoding is the last step.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::degrade::{add_camera_noise, downsample_bilinear, gaussian_blur, BlurParams, NoiseParams};
use crate::error::{Error, Result};
use crate::image::{EncodedImage, LinearImage};
use crate::loss::Condition;
use crate::rng::CounterRng;
use crate::transfer::{encode_image, DisplayModel};

/// Train/validation/test fractions and the shuffle seed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_frac: f64,
    pub val_frac: f64,
    pub test_frac: f64,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            train_frac: 0.6,
            val_frac: 0.2,
            test_frac: 0.2,
            seed: 0,
        }
    }
}

impl SplitSpec {
    pub fn validate(&self) -> Result<()> {
        let fr = [self.train_frac, self.val_frac, self.test_frac];
        if fr.iter().any(|f| !(0.0..=1.0).contains(f)) || (fr.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::contract(format!(
                "split fractions {fr:?} must lie in [0, 1] and sum to 1"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitName {
    Train,
    Val,
    Test,
}

impl SplitName {
    pub const ALL: [SplitName; 3] = [SplitName::Train, SplitName::Val, SplitName::Test];

    pub fn name(&self) -> &'static str {
        match self {
            SplitName::Train => "train",
            SplitName::Val => "val",
            SplitName::Test => "test",
        }
    }
}

impl fmt::Display for SplitName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SplitName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "train" => Ok(SplitName::Train),
            "val" | "validation" => Ok(SplitName::Val),
            "test" => Ok(SplitName::Test),
            _ => Err(Error::contract(format!("unknown split {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<String>,
    pub val: Vec<String>,
    pub test: Vec<String>,
}

impl Split {
    pub fn get(&self, name: SplitName) -> &[String] {
        match name {
            SplitName::Train => &self.train,
            SplitName::Val => &self.val,
            SplitName::Test => &self.test,
        }
    }
}

/// Deterministic shuffled partition with sizes `round(train * n)`,
/// `round(val * n)` and the remainder.
///
/// Ids are sorted before shuffling, so the result does not depend on the
/// order they were listed in.
pub fn split_dataset(ids: &[String], spec: &SplitSpec) -> Result<Split> {
    spec.validate()?;
    if ids.len() < 5 {
        return Err(Error::contract(format!(
            "need at least 5 images to split, got {}",
            ids.len()
        )));
    }
    let mut sorted = ids.to_vec();
    sorted.sort();
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::contract("image ids must be unique"));
    }
    let mut rng = CounterRng::new(spec.seed);
    for i in (1..sorted.len()).rev() {
        let j = rng.below(i as u64, i as u64 + 1) as usize;
        sorted.swap(i, j);
    }
    let n = sorted.len() as f64;
    let n_train = (spec.train_frac * n).round() as usize;
    let n_val = ((spec.val_frac * n).round() as usize).min(sorted.len() - n_train);
    let test = sorted.split_off(n_train + n_val);
    let val = sorted.split_off(n_train);
    Ok(Split {
        train: sorted,
        val,
        test,
    })
}

/// Scales an image so its mean BT.709 luminance equals `target_nits` on
/// `display`.
pub fn normalize_exposure(img: &LinearImage, target_nits: f64, display: &DisplayModel) -> Result<LinearImage> {
    if !(target_nits > 0.0 && target_nits.is_finite()) {
        return Err(Error::Domain {
            what: "target_nits",
            value: target_nits,
            domain: "(0, inf)",
        });
    }
    let mean_nits = display.absolute(img.mean_luminance());
    if mean_nits.is_nan() || mean_nits <= 0.0 {
        return Err(Error::contract("cannot normalize the exposure of an all-black image"));
    }
    Ok(img.scaled(target_nits / mean_nits))
}

/// Number and range of random exposure copies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExposureAugmentSpec {
    pub count: usize,
    pub low: f64,
    pub high: f64,
    pub seed: u64,
}

impl Default for ExposureAugmentSpec {
    fn default() -> Self {
        Self {
            count: 5,
            low: 0.1,
            high: 0.9,
            seed: 0,
        }
    }
}

impl ExposureAugmentSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.low > 0.0 && self.low <= self.high && self.high.is_finite()) {
            return Err(Error::contract(format!(
                "exposure range [{}, {}] is invalid",
                self.low, self.high
            )));
        }
        Ok(())
    }

    /// The `count` coefficients drawn for this seed.
    pub fn coefficients(&self) -> Vec<f64> {
        let mut rng = CounterRng::new(self.seed);
        (0..self.count)
            .map(|i| self.low + (self.high - self.low) * rng.uniform(i as u64))
            .collect()
    }
}

/// One exposure variant of a source image.
#[derive(Debug, Clone, PartialEq)]
pub struct Exposure {
    /// 0 is the original image.
    pub index: usize,
    pub coefficient: f64,
    pub image: LinearImage,
}

/// Returns the original followed by `count` copies scaled by i.i.d.
/// `U(low, high)` coefficients.
pub fn augment_exposures(img: &LinearImage, spec: &ExposureAugmentSpec) -> Result<Vec<Exposure>> {
    spec.validate()?;
    let mut out = vec![Exposure {
        index: 0,
        coefficient: 1.0,
        image: img.clone(),
    }];
    out.extend(spec.coefficients().into_iter().enumerate().map(|(i, c)| Exposure {
        index: i + 1,
        coefficient: c,
        image: img.scaled(c),
    }));
    Ok(out)
}

/// Restoration task; decides which degradation produces the network input.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Denoise,
    Deblur,
    #[serde(rename = "superres4x")]
    SuperRes4x,
}

impl Task {
    pub fn name(&self) -> &'static str {
        match self {
            Task::Denoise => "denoise",
            Task::Deblur => "deblur",
            Task::SuperRes4x => "superres4x",
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "denoise" | "denoising" => Ok(Task::Denoise),
            "deblur" | "deblurring" => Ok(Task::Deblur),
            "superres4x" | "superres" | "sr" | "sisr" => Ok(Task::SuperRes4x),
            _ => Err(Error::contract(format!("unknown task {s:?}"))),
        }
    }
}

/// Parameters of all task degradations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DegradeParams {
    pub noise: NoiseParams,
    pub blur: BlurParams,
    pub sr_factor: usize,
}

impl Default for DegradeParams {
    fn default() -> Self {
        Self {
            noise: NoiseParams::default(),
            blur: BlurParams::default(),
            sr_factor: 4,
        }
    }
}

impl DegradeParams {
    pub fn describe(&self, task: Task) -> String {
        match task {
            Task::Denoise => format!(
                "camera noise k={} sigma_r={} seed={}",
                self.noise.photon_gain, self.noise.readout_std, self.noise.seed
            ),
            Task::Deblur => format!(
                "gaussian blur sigma={} radius={}",
                self.blur.sigma,
                self.blur.kernel_radius()
            ),
            Task::SuperRes4x => format!("bilinear downsample x{}", self.sr_factor),
        }
    }
}

/// Applies the task's degradation to a clean linear image.
pub fn degrade(task: Task, clean: &LinearImage, params: &DegradeParams) -> Result<LinearImage> {
    match task {
        Task::Denoise => add_camera_noise(clean, &params.noise),
        Task::Deblur => gaussian_blur(clean, &params.blur),
        Task::SuperRes4x => downsample_bilinear(clean, params.sr_factor),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub source_id: String,
    pub degradation: String,
}

/// Encoded network input and target for one condition.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingPair {
    pub input: EncodedImage,
    pub target: EncodedImage,
    pub condition_label: String,
    pub provenance: Provenance,
}

/// Degrades `clean` for `task` in linear space, then encodes input and target
/// with the condition's encoding. The target is always the full-resolution
/// clean image.
pub fn materialize_pair(
    task: Task,
    clean: &LinearImage,
    condition: &Condition,
    display: &DisplayModel,
    params: &DegradeParams,
    source_id: &str,
) -> Result<TrainingPair> {
    let degraded = degrade(task, clean, params)?;
    Ok(TrainingPair {
        input: encode_image(&degraded, condition.encoding, display)?,
        target: encode_image(clean, condition.encoding, display)?,
        condition_label: condition.label.clone(),
        provenance: Provenance {
            source_id: source_id.to_string(),
            degradation: params.describe(task),
        },
    })
}

/// Random square crops for training.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PatchSpec {
    /// Patch side in target pixels.
    pub size: usize,
    pub per_image: usize,
    pub seed: u64,
}

impl Default for PatchSpec {
    fn default() -> Self {
        Self {
            size: 64,
            per_image: 16,
            seed: 0,
        }
    }
}

/// Top-left target-space corners of the patches for `epoch`.
///
/// Corners are multiples of `scale` (the target/input size ratio), so the
/// matching input patch starts at `corner / scale`.
pub fn patch_origins(
    target_dims: (usize, usize),
    scale: usize,
    spec: &PatchSpec,
    image_seed: u64,
    epoch: u64,
) -> Result<Vec<(usize, usize)>> {
    let (w, h) = target_dims;
    if scale == 0 || spec.size == 0 || !spec.size.is_multiple_of(scale) || spec.size > w || spec.size > h {
        return Err(Error::contract(format!(
            "patch size {} does not fit {w}x{h} at scale {scale}",
            spec.size
        )));
    }
    let mut rng = CounterRng::new(crate::rng::derive_seed(spec.seed ^ image_seed, &epoch.to_string()));
    let slots_x = ((w - spec.size) / scale + 1) as u64;
    let slots_y = ((h - spec.size) / scale + 1) as u64;
    Ok((0..spec.per_image as u64)
        .map(|i| {
            let x = rng.below(2 * i, slots_x) as usize * scale;
            let y = rng.below(2 * i + 1, slots_y) as usize * scale;
            (x, y)
        })
        .collect())
}

/// Aligned crops of a training pair at a target-space corner.
pub fn crop_pair(pair: &TrainingPair, origin: (usize, usize), size: usize) -> Result<TrainingPair> {
    let scale = pair.target.width() / pair.input.width();
    if scale == 0 || !size.is_multiple_of(scale) || !origin.0.is_multiple_of(scale) || !origin.1.is_multiple_of(scale) {
        return Err(Error::contract("patch is not aligned with the input grid"));
    }
    Ok(TrainingPair {
        input: pair
            .input
            .crop(origin.0 / scale, origin.1 / scale, size / scale, size / scale)?,
        target: pair.target.crop(origin.0, origin.1, size, size)?,
        condition_label: pair.condition_label.clone(),
        provenance: pair.provenance.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transfer::{decode_image, EncodingKind};

    fn ids(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("img{i:03}")).collect()
    }

    fn scene(w: usize, h: usize) -> LinearImage {
        LinearImage::from_fn(w, h, |x, y| {
            let v = 0.001 + (x * 7 + y * 3) as f32 / (w * 7 + h * 3) as f32 * 0.8;
            [v, v * 0.5, v * 0.25]
        })
        .unwrap()
    }

    #[test]
    fn split_sizes() {
        let s = split_dataset(&ids(10), &SplitSpec::default()).unwrap();
        assert_eq!((s.train.len(), s.val.len(), s.test.len()), (6, 2, 2));
        let s = split_dataset(&ids(122), &SplitSpec::default()).unwrap();
        assert_eq!((s.train.len(), s.val.len(), s.test.len()), (73, 24, 25));
    }

    #[test]
    fn split_is_partition_and_deterministic() {
        let all = ids(37);
        let spec = SplitSpec {
            seed: 11,
            ..Default::default()
        };
        let a = split_dataset(&all, &spec).unwrap();
        let mut rev = all.clone();
        rev.reverse();
        assert_eq!(a, split_dataset(&rev, &spec).unwrap());
        let mut joined: Vec<String> = a.train.iter().chain(&a.val).chain(&a.test).cloned().collect();
        joined.sort();
        assert_eq!(joined, all);
        let b = split_dataset(&all, &SplitSpec { seed: 12, ..spec }).unwrap();
        assert_ne!(a, b);
    }

    #[test]
    fn split_errors() {
        assert!(split_dataset(&ids(4), &SplitSpec::default()).is_err());
        let dup = vec!["a".to_string(), "a".into(), "b".into(), "c".into(), "d".into()];
        assert!(split_dataset(&dup, &SplitSpec::default()).is_err());
        let bad = SplitSpec {
            train_frac: 0.7,
            ..Default::default()
        };
        assert!(split_dataset(&ids(10), &bad).is_err());
    }

    #[test]
    fn normalize_exposure_examples() {
        let d = DisplayModel::default();
        // Mean luminance 40 nits = 0.01 relative at a 4000-nit peak.
        let img = LinearImage::constant(4, 4, 0.01).unwrap();
        let out = normalize_exposure(&img, 20.0, &d).unwrap();
        assert!(out.data().iter().all(|&v| (v - 0.005).abs() < 1e-9));
        let again = normalize_exposure(&out, 20.0, &d).unwrap();
        for (a, b) in again.data().iter().zip(out.data()) {
            assert!((a - b).abs() <= 1e-6 * b);
        }
        let r = normalize_exposure(&scene(9, 7), 20.0, &d).unwrap();
        let nits = d.absolute(r.mean_luminance());
        assert!((nits - 20.0).abs() < 1e-6 * 20.0, "{nits}");
        let black = LinearImage::constant(2, 2, 0.0).unwrap();
        assert!(normalize_exposure(&black, 20.0, &d).is_err());
    }

    #[test]
    fn exposure_augmentation() {
        let img = scene(6, 5);
        let spec = ExposureAugmentSpec {
            seed: 3,
            ..Default::default()
        };
        let ex = augment_exposures(&img, &spec).unwrap();
        assert_eq!(ex.len(), 6);
        assert_eq!(ex[0].image, img);
        for e in &ex[1..] {
            assert!((0.1..=0.9).contains(&e.coefficient));
            assert_eq!(e.image, img.scaled(e.coefficient));
        }
        assert_eq!(ex, augment_exposures(&img, &spec).unwrap());
    }

    #[test]
    fn denoise_linear_pair() {
        let d = DisplayModel::default();
        let clean = scene(8, 8);
        let cond = Condition::by_label("Linear-L1").unwrap();
        let params = DegradeParams::default();
        let pair = materialize_pair(Task::Denoise, &clean, &cond, &d, &params, "x").unwrap();
        let noisy = add_camera_noise(&clean, &params.noise).unwrap();
        let clamp = |img: &LinearImage| -> Vec<f32> { img.data().iter().map(|v| v.clamp(0.0, 1.0)).collect() };
        assert_eq!(pair.input.data(), clamp(&noisy).as_slice());
        assert_eq!(pair.target.data(), clean.data());
        assert_eq!(pair.input.encoding(), EncodingKind::Linear);
    }

    #[test]
    fn superres_pu21_pair_dims() {
        let d = DisplayModel::default();
        let clean = scene(256, 256);
        let cond = Condition::by_label("PU21-L1").unwrap();
        let pair = materialize_pair(Task::SuperRes4x, &clean, &cond, &d, &DegradeParams::default(), "x").unwrap();
        assert_eq!(pair.input.dims(), (64, 64));
        assert_eq!(pair.target.dims(), (256, 256));
        assert_eq!(pair.input.encoding(), EncodingKind::Pu21);
        assert!(materialize_pair(Task::SuperRes4x, &scene(30, 32), &cond, &d, &DegradeParams::default(), "x").is_err());
    }

    #[test]
    fn deblur_pq_pair_decodes_to_blur() {
        let d = DisplayModel::default();
        let clean = scene(24, 20);
        let cond = Condition::by_label("PQ-L1").unwrap();
        let params = DegradeParams {
            blur: BlurParams::with_sigma(2.0),
            ..Default::default()
        };
        let pair = materialize_pair(Task::Deblur, &clean, &cond, &d, &params, "x").unwrap();
        let blurred = gaussian_blur(&clean, &params.blur).unwrap();
        let back = decode_image(&pair.input, &d).unwrap();
        for (a, b) in back.data().iter().zip(blurred.data()) {
            // Values above black level round-trip within encode/decode tolerance.
            let b = b.max(0.005 / 4000.0);
            assert!((a - b).abs() <= 1e-4 * b, "{a} vs {b}");
        }
    }

    #[test]
    fn patches_align_with_input() {
        let d = DisplayModel::default();
        let clean = scene(128, 96);
        let cond = Condition::by_label("mu-L1").unwrap();
        let pair = materialize_pair(Task::SuperRes4x, &clean, &cond, &d, &DegradeParams::default(), "x").unwrap();
        let spec = PatchSpec {
            size: 32,
            per_image: 10,
            seed: 5,
        };
        let origins = patch_origins(pair.target.dims(), 4, &spec, 1, 0).unwrap();
        assert_eq!(origins.len(), 10);
        assert_ne!(origins, patch_origins(pair.target.dims(), 4, &spec, 1, 1).unwrap());
        for &o in &origins {
            let p = crop_pair(&pair, o, 32).unwrap();
            assert_eq!(p.input.dims(), (8, 8));
            assert_eq!(p.target.dims(), (32, 32));
        }
        assert!(patch_origins((16, 16), 4, &spec, 1, 0).is_err());
    }

    #[test]
    fn parse_names() {
        assert_eq!("superres".parse::<Task>().unwrap(), Task::SuperRes4x);
        assert_eq!("Deblur".parse::<Task>().unwrap(), Task::Deblur);
        assert!("inpaint".parse::<Task>().is_err());
        assert_eq!("validation".parse::<SplitName>().unwrap(), SplitName::Val);
    }
}
