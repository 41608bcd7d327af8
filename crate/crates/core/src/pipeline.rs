//! End-to-end dataset preparation and evaluation.
//!
//! `prepare` turns a directory of clean linear PFM images into split,
//! exposure-augmented, degraded and encoded training pairs plus a JSON
//! manifest. `evaluate` scores restored images against references and runs
//! the pairwise significance analysis. Both are pure functions of their
//! inputs and configuration.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dataset::{
    augment_exposures, degrade, normalize_exposure, split_dataset, DegradeParams, ExposureAugmentSpec, PatchSpec,
    Split, SplitName, SplitSpec, Task,
};
use crate::degrade::{upsample_bilinear, BlurParams, NoiseParams};
use crate::error::{Error, Result};
use crate::image::LinearImage;
use crate::imageio::{read_pfm, write_encoded_pfm, write_pfm};
use crate::loss::Condition;
use crate::metrics::MetricKind;
use crate::rng::derive_seed;
use crate::stats::{median_table, pairwise_ttests, significance_groups, Correction, MedianEntry, ScoreMatrix, SignificanceGroups};
use crate::transfer::{encode_image, DisplayModel, EncodingKind};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const REPORT_FILE: &str = "report.json";
const FORMAT_VERSION: u32 = 1;

/// Exposure augmentation stage and the splits it applies to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExposureStage {
    pub count: usize,
    pub low: f64,
    pub high: f64,
    pub seed: u64,
    pub splits: Vec<SplitName>,
}

impl Default for ExposureStage {
    fn default() -> Self {
        let spec = ExposureAugmentSpec::default();
        Self {
            count: spec.count,
            low: spec.low,
            high: spec.high,
            seed: spec.seed,
            splits: vec![SplitName::Test],
        }
    }
}

impl ExposureStage {
    fn spec_for(&self, image_id: &str) -> ExposureAugmentSpec {
        ExposureAugmentSpec {
            count: self.count,
            low: self.low,
            high: self.high,
            seed: derive_seed(self.seed, image_id),
        }
    }
}

fn path_is_empty(p: &Path) -> bool {
    p.as_os_str().is_empty()
}

/// Configuration of `prepare`, read from a TOML file.
///
/// Every key is optional except the directories; missing keys take the
/// values of the selected `preset` (`"hdr"` by default).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    #[serde(skip_serializing_if = "path_is_empty")]
    pub input_dir: PathBuf,
    #[serde(skip_serializing_if = "path_is_empty")]
    pub output_dir: PathBuf,
    pub task: Task,
    /// Condition labels to materialize; all eight when empty.
    pub conditions: Vec<String>,
    pub black_level: f64,
    pub peak: f64,
    /// Rescale every source so its mean luminance is this many nits.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub normalize_nits: Option<f64>,
    pub split: SplitSpec,
    pub exposure: ExposureStage,
    pub noise: NoiseParams,
    pub blur: BlurParams,
    pub sr_factor: usize,
    pub patch: PatchSpec,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self::preset("hdr").expect("built-in preset")
    }
}

fn merge_tables(base: &mut toml::Table, over: toml::Table) {
    for (k, v) in over {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge_tables(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

impl PipelineConfig {
    /// Named starting points.
    ///
    /// * `hdr`: test split augmented with five random exposures, denoising task.
    /// * `raw`: sources normalized to a mean of 20 nits, 4x super-resolution.
    pub fn preset(name: &str) -> Result<Self> {
        let hdr = Self {
            input_dir: PathBuf::new(),
            output_dir: PathBuf::new(),
            task: Task::Denoise,
            conditions: Vec::new(),
            black_level: crate::transfer::DEFAULT_BLACK_NITS,
            peak: crate::transfer::DEFAULT_PEAK_NITS,
            normalize_nits: None,
            split: SplitSpec::default(),
            exposure: ExposureStage::default(),
            noise: NoiseParams::default(),
            blur: BlurParams::default(),
            sr_factor: 4,
            patch: PatchSpec::default(),
        };
        match name {
            "hdr" => Ok(hdr),
            "raw" => Ok(Self {
                task: Task::SuperRes4x,
                normalize_nits: Some(20.0),
                ..hdr
            }),
            other => Err(Error::Config(format!("unknown preset {other:?} (expected hdr or raw)"))),
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let mut table: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        let preset = match table.remove("preset") {
            Some(toml::Value::String(s)) => s,
            Some(other) => return Err(Error::Config(format!("preset must be a string, got {other}"))),
            None => "hdr".to_string(),
        };
        let mut base = toml::Table::try_from(Self::preset(&preset)?).map_err(|e| Error::Config(e.to_string()))?;
        merge_tables(&mut base, table);
        let cfg: Self = toml::Value::Table(base)
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        Ok(cfg)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml_str(&text)?;
        // Relative directories are resolved against the config file.
        let base = path.parent().unwrap_or(Path::new(""));
        for dir in [&mut cfg.input_dir, &mut cfg.output_dir] {
            if !path_is_empty(dir) && dir.is_relative() {
                *dir = base.join(&*dir);
            }
        }
        Ok(cfg)
    }

    pub fn display(&self) -> Result<DisplayModel> {
        DisplayModel::new(self.black_level, self.peak)
    }

    pub fn resolved_conditions(&self) -> Result<Vec<Condition>> {
        if self.conditions.is_empty() {
            return Ok(crate::loss::condition_registry());
        }
        let mut out: Vec<Condition> = Vec::new();
        for label in &self.conditions {
            let c = Condition::by_label(label)?;
            if !out.contains(&c) {
                out.push(c);
            }
        }
        Ok(out)
    }

    pub fn degrade_params(&self) -> DegradeParams {
        DegradeParams {
            noise: self.noise,
            blur: self.blur,
            sr_factor: self.sr_factor,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if path_is_empty(&self.input_dir) || path_is_empty(&self.output_dir) {
            return Err(Error::Config("input_dir and output_dir are required".into()));
        }
        self.display()?;
        self.resolved_conditions()?;
        self.split.validate()?;
        self.exposure.spec_for("").validate()?;
        if self.task == Task::Denoise {
            self.noise.validate()?;
        }
        if self.task == Task::Deblur {
            self.blur.kernel()?;
        }
        if self.sr_factor == 0 {
            return Err(Error::Config("sr_factor must be positive".into()));
        }
        if let Some(n) = self.normalize_nits {
            if !(n > 0.0 && n.is_finite()) {
                return Err(Error::Config(format!("normalize_nits must be positive, got {n}")));
            }
        }
        Ok(())
    }

    /// The configuration with directories removed, as recorded in manifests.
    fn portable(&self) -> Self {
        Self {
            input_dir: PathBuf::new(),
            output_dir: PathBuf::new(),
            ..self.clone()
        }
    }
}

/// Effective seeds of every randomized stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Seeds {
    pub split: u64,
    pub exposure: u64,
    pub noise: u64,
    pub patch: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairPaths {
    pub condition: String,
    pub encoding: EncodingKind,
    pub input: String,
    pub target: String,
}

/// One exposure of one source image. Paths are relative to the manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub image_id: String,
    pub sample_id: String,
    pub split: SplitName,
    pub source: String,
    pub exposure_index: usize,
    pub exposure_coefficient: f64,
    /// Per-sample seed of the noise stream (denoising only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise_seed: Option<u64>,
    pub task: Task,
    pub degradation: String,
    /// Clean linear image at this exposure.
    pub reference: String,
    /// Degraded linear image (the naive baseline).
    pub degraded: String,
    pub pairs: Vec<PairPaths>,
}

/// Contract between `prepare` and training code.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: u32,
    pub task: Task,
    pub display: DisplayModel,
    pub seeds: Seeds,
    pub conditions: Vec<Condition>,
    pub config: PipelineConfig,
    pub splits: Split,
    pub entries: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// Sorted `(stem, path)` of the `.pfm` files in `dir`.
pub fn list_pfm(dir: &Path) -> Result<Vec<(String, PathBuf)>> {
    let rd = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut out = Vec::new();
    for entry in rd {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let path = entry.path();
        if path.is_file() && path.extension().is_some_and(|e| e.eq_ignore_ascii_case("pfm")) {
            let stem = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            out.push((stem, path));
        }
    }
    out.sort();
    Ok(out)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PrepareOptions {
    /// Replace an existing output directory that holds a previous manifest.
    pub force: bool,
}

/// Materializes the dataset tree described by `config` and returns its
/// manifest (also written to `output_dir/manifest.json`).
///
/// Layout: `<split>/reference/<sample>.pfm`, `<split>/degraded/<sample>.pfm`
/// and `<split>/<encoding>/{input,target}/<sample>.pfm`, where a sample is
/// `<image_id>_e<exposure index>`.
pub fn prepare(config: &PipelineConfig, options: PrepareOptions) -> Result<Manifest> {
    config.validate()?;
    let display = config.display()?;
    let conditions = config.resolved_conditions()?;
    let params = config.degrade_params();

    // Read and validate every input before writing anything.
    let inputs = list_pfm(&config.input_dir)?;
    if inputs.is_empty() {
        return Err(Error::Config(format!(
            "no .pfm images found in {}",
            config.input_dir.display()
        )));
    }
    let mut problems = Vec::new();
    let mut sources: BTreeMap<String, (String, LinearImage)> = BTreeMap::new();
    for (id, path) in &inputs {
        match read_pfm(path) {
            Ok(img) => {
                if config.task == Task::SuperRes4x
                    && (img.width() % config.sr_factor != 0 || img.height() % config.sr_factor != 0)
                {
                    problems.push(format!(
                        "{}: {}x{} is not divisible by {}",
                        path.display(),
                        img.width(),
                        img.height(),
                        config.sr_factor
                    ));
                }
                let file = path.file_name().unwrap_or_default().to_string_lossy().into_owned();
                sources.insert(id.clone(), (file, img));
            }
            Err(e) => problems.push(e.to_string()),
        }
    }
    if !problems.is_empty() {
        return Err(Error::Config(format!("invalid inputs:\n  {}", problems.join("\n  "))));
    }

    let out = &config.output_dir;
    if out.exists() && fs::read_dir(out).map_err(|e| Error::io(out, e))?.next().is_some() {
        if options.force && out.join(MANIFEST_FILE).is_file() {
            fs::remove_dir_all(out).map_err(|e| Error::io(out, e))?;
        } else {
            return Err(Error::Config(format!(
                "output directory {} is not empty{}",
                out.display(),
                if options.force {
                    " and holds no previous manifest"
                } else {
                    " (use force to replace a previous run)"
                }
            )));
        }
    }

    let ids: Vec<String> = sources.keys().cloned().collect();
    let split = split_dataset(&ids, &config.split)?;
    let mut encodings: Vec<EncodingKind> = Vec::new();
    for c in &conditions {
        if !encodings.contains(&c.encoding) {
            encodings.push(c.encoding);
        }
    }

    let mut entries = Vec::new();
    for split_name in SplitName::ALL {
        for id in split.get(split_name) {
            let (file, source) = &sources[id];
            let clean = match config.normalize_nits {
                Some(nits) => normalize_exposure(source, nits, &display)?,
                None => source.clone(),
            };
            let exposures = if config.exposure.splits.contains(&split_name) {
                augment_exposures(&clean, &config.exposure.spec_for(id))?
            } else {
                augment_exposures(
                    &clean,
                    &ExposureAugmentSpec {
                        count: 0,
                        ..ExposureAugmentSpec::default()
                    },
                )?
            };
            for exp in exposures {
                let sample_id = format!("{id}_e{}", exp.index);
                let noise_seed = derive_seed(config.noise.seed, &sample_id);
                let sample_params = DegradeParams {
                    noise: NoiseParams {
                        seed: noise_seed,
                        ..params.noise
                    },
                    ..params
                };
                let degraded = degrade(config.task, &exp.image, &sample_params)?;
                let rel = |sub: &str| format!("{split_name}/{sub}/{sample_id}.pfm");
                let reference_rel = rel("reference");
                let degraded_rel = rel("degraded");
                write_pfm(&exp.image, out.join(&reference_rel))?;
                write_pfm(&degraded, out.join(&degraded_rel))?;
                for enc in &encodings {
                    write_encoded_pfm(
                        &encode_image(&degraded, *enc, &display)?,
                        out.join(rel(&format!("{}/input", enc.name()))),
                    )?;
                    write_encoded_pfm(
                        &encode_image(&exp.image, *enc, &display)?,
                        out.join(rel(&format!("{}/target", enc.name()))),
                    )?;
                }
                let pairs = conditions
                    .iter()
                    .map(|c| PairPaths {
                        condition: c.label.clone(),
                        encoding: c.encoding,
                        input: rel(&format!("{}/input", c.encoding.name())),
                        target: rel(&format!("{}/target", c.encoding.name())),
                    })
                    .collect();
                entries.push(ManifestEntry {
                    image_id: id.clone(),
                    sample_id,
                    split: split_name,
                    source: file.clone(),
                    exposure_index: exp.index,
                    exposure_coefficient: exp.coefficient,
                    noise_seed: (config.task == Task::Denoise).then_some(noise_seed),
                    task: config.task,
                    degradation: sample_params.describe(config.task),
                    reference: reference_rel,
                    degraded: degraded_rel,
                    pairs,
                });
            }
        }
    }

    let manifest = Manifest {
        format_version: FORMAT_VERSION,
        task: config.task,
        display,
        seeds: Seeds {
            split: config.split.seed,
            exposure: config.exposure.seed,
            noise: config.noise.seed,
            patch: config.patch.seed,
        },
        conditions,
        config: config.portable(),
        splits: split,
        entries,
    };
    write_text(&out.join(MANIFEST_FILE), &(serde_json::to_string_pretty(&manifest)? + "\n"))?;
    Ok(manifest)
}

// Evaluation

/// Scores from a metric computed outside this toolkit, keyed by
/// `(condition, image)`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExternalScores {
    pub name: String,
    pub scores: BTreeMap<(String, String), f64>,
}

impl ExternalScores {
    /// Parses CSV with header `condition,image_id,value`.
    pub fn from_csv(name: &str, text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().unwrap_or_default();
        let cols: Vec<&str> = header.split(',').map(str::trim).collect();
        if cols != ["condition", "image_id", "value"] {
            return Err(Error::Config(format!(
                "external score header must be condition,image_id,value; got {header:?}"
            )));
        }
        let mut scores = BTreeMap::new();
        for (n, line) in lines.enumerate() {
            let f: Vec<&str> = line.split(',').map(str::trim).collect();
            let value = (f.len() == 3)
                .then(|| f[2].parse::<f64>().ok())
                .flatten()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::Config(format!("bad external score row {}: {line:?}", n + 2)))?;
            scores.insert((f[0].to_string(), f[1].to_string()), value);
        }
        Ok(Self {
            name: name.to_string(),
            scores,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluateOptions {
    pub metrics: Vec<MetricKind>,
    pub alpha: f64,
    pub correction: Correction,
    pub display: DisplayModel,
    /// Bilinearly upsample test images that are an integer factor smaller
    /// than the reference (the naive super-resolution baseline).
    pub upsample_smaller: bool,
    pub external: Option<ExternalScores>,
}

impl Default for EvaluateOptions {
    fn default() -> Self {
        Self {
            metrics: MetricKind::ALL.to_vec(),
            alpha: 0.05,
            correction: Correction::None,
            display: DisplayModel::default(),
            upsample_smaller: false,
            external: None,
        }
    }
}

mod nonfinite {
    //! JSON has no infinities; they are stored as the strings "inf" / "-inf".
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Cell {
        Num(f64),
        Text(String),
    }

    pub fn serialize<S: Serializer>(m: &[Vec<f64>], s: S) -> Result<S::Ok, S::Error> {
        let cells: Vec<Vec<Cell>> = m
            .iter()
            .map(|row| {
                row.iter()
                    .map(|&v| {
                        if v.is_finite() {
                            Cell::Num(v)
                        } else if v.is_nan() {
                            Cell::Text("nan".into())
                        } else if v > 0.0 {
                            Cell::Text("inf".into())
                        } else {
                            Cell::Text("-inf".into())
                        }
                    })
                    .collect()
            })
            .collect();
        cells.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Vec<f64>>, D::Error> {
        let cells = Vec::<Vec<Cell>>::deserialize(d)?;
        cells
            .into_iter()
            .map(|row| {
                row.into_iter()
                    .map(|c| match c {
                        Cell::Num(v) => Ok(v),
                        Cell::Text(t) => match t.as_str() {
                            "inf" => Ok(f64::INFINITY),
                            "-inf" => Ok(f64::NEG_INFINITY),
                            "nan" => Ok(f64::NAN),
                            other => Err(serde::de::Error::custom(format!("bad number {other:?}"))),
                        },
                    })
                    .collect()
            })
            .collect()
    }
}

/// Results for one metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub metric: String,
    /// `scores[condition][image]`.
    pub scores: Vec<Vec<f64>>,
    pub medians: Vec<MedianEntry>,
    #[serde(with = "nonfinite")]
    pub t: Vec<Vec<f64>>,
    pub p: Vec<Vec<f64>>,
    pub groups: SignificanceGroups,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub format_version: u32,
    pub alpha: f64,
    pub correction: Correction,
    pub display: DisplayModel,
    pub conditions: Vec<String>,
    pub image_ids: Vec<String>,
    pub metrics: Vec<MetricReport>,
}

impl EvaluationReport {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

fn analyse(
    metric: String,
    conditions: &[String],
    scores: Vec<Vec<f64>>,
    alpha: f64,
    correction: Correction,
) -> Result<MetricReport> {
    let m = ScoreMatrix::new(conditions.to_vec(), scores)?;
    let tests = pairwise_ttests(&m, correction)?;
    let groups = significance_groups(&m, alpha, correction)?;
    Ok(MetricReport {
        metric,
        medians: median_table(&m),
        t: tests.t,
        p: tests.p,
        groups,
        scores: m.samples().to_vec(),
    })
}

/// Scores every `(condition, dir)` against the references in `reference_dir`.
///
/// All directories must hold the same set of `.pfm` file names.
pub fn evaluate(reference_dir: &Path, tests: &[(String, PathBuf)], options: &EvaluateOptions) -> Result<EvaluationReport> {
    if tests.is_empty() {
        return Err(Error::Config("no test directories given".into()));
    }
    let labels: Vec<String> = tests.iter().map(|(l, _)| l.clone()).collect();
    if labels.iter().collect::<BTreeSet<_>>().len() != labels.len() {
        return Err(Error::Config("condition labels must be unique".into()));
    }
    if options.metrics.is_empty() && options.external.is_none() {
        return Err(Error::Config("no metrics requested".into()));
    }
    let refs = list_pfm(reference_dir)?;
    let ref_names: BTreeSet<String> = refs.iter().map(|(s, _)| s.clone()).collect();
    if ref_names.len() < 2 {
        return Err(Error::Config(format!(
            "need at least 2 reference images in {}, found {}",
            reference_dir.display(),
            ref_names.len()
        )));
    }
    let mut mismatches = Vec::new();
    let mut test_files = Vec::new();
    for (label, dir) in tests {
        let files = list_pfm(dir)?;
        let names: BTreeSet<String> = files.iter().map(|(s, _)| s.clone()).collect();
        for missing in ref_names.difference(&names) {
            mismatches.push(format!("{label}: missing {missing}.pfm in {}", dir.display()));
        }
        for extra in names.difference(&ref_names) {
            mismatches.push(format!("{label}: unexpected {extra}.pfm in {}", dir.display()));
        }
        test_files.push(files);
    }
    if let Some(ext) = &options.external {
        for label in &labels {
            for id in &ref_names {
                if !ext.scores.contains_key(&(label.clone(), id.clone())) {
                    mismatches.push(format!("{}: no score for {label}/{id}", ext.name));
                }
            }
        }
    }
    if !mismatches.is_empty() {
        return Err(Error::Config(format!("misaligned inputs:\n  {}", mismatches.join("\n  "))));
    }

    let image_ids: Vec<String> = refs.iter().map(|(s, _)| s.clone()).collect();
    let n_metrics = options.metrics.len();
    // scores[metric][condition][image]
    let mut scores = vec![vec![vec![0.0; image_ids.len()]; tests.len()]; n_metrics];
    for (i, (_, ref_path)) in refs.iter().enumerate() {
        let reference = read_pfm(ref_path)?;
        for (c, files) in test_files.iter().enumerate() {
            let mut test = read_pfm(&files[i].1)?;
            if test.dims() != reference.dims() && options.upsample_smaller {
                let f = reference.width() / test.width().max(1);
                if f > 1 && test.width() * f == reference.width() && test.height() * f == reference.height() {
                    test = upsample_bilinear(&test, f)?;
                }
            }
            for (m, metric) in options.metrics.iter().enumerate() {
                scores[m][c][i] = metric.evaluate(&test, &reference, &options.display).map_err(|e| {
                    Error::Contract(format!("{} on {}: {e}", metric, files[i].1.display()))
                })?;
            }
        }
    }

    let mut metrics = Vec::new();
    for (metric, s) in options.metrics.iter().zip(scores) {
        metrics.push(analyse(metric.name().to_string(), &labels, s, options.alpha, options.correction)?);
    }
    if let Some(ext) = &options.external {
        let s = labels
            .iter()
            .map(|l| image_ids.iter().map(|id| ext.scores[&(l.clone(), id.clone())]).collect())
            .collect();
        metrics.push(analyse(ext.name.clone(), &labels, s, options.alpha, options.correction)?);
    }

    Ok(EvaluationReport {
        format_version: FORMAT_VERSION,
        alpha: options.alpha,
        correction: options.correction,
        display: options.display,
        conditions: labels,
        image_ids,
        metrics,
    })
}

fn file_safe(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

/// Median table with metrics as rows and conditions as columns. Each metric
/// row is followed by a `<metric> rank` row holding 1 (best), 2 (second) or
/// nothing.
pub fn median_csv(report: &EvaluationReport) -> String {
    let mut out = String::from("metric");
    for c in &report.conditions {
        out.push(',');
        out.push_str(c);
    }
    out.push('\n');
    for m in &report.metrics {
        out.push_str(&m.metric);
        for e in &m.medians {
            out.push_str(&format!(",{}", e.median));
        }
        out.push('\n');
        out.push_str(&format!("{} rank", m.metric));
        for e in &m.medians {
            out.push(',');
            if let Some(r) = e.rank {
                out.push_str(&r.to_string());
            }
        }
        out.push('\n');
    }
    out
}

/// Per-image scores, one column per condition (violin-plot source data).
pub fn scores_csv(report: &EvaluationReport, metric: &MetricReport) -> String {
    let mut out = String::from("image_id");
    for c in &report.conditions {
        out.push(',');
        out.push_str(c);
    }
    out.push('\n');
    for (i, id) in report.image_ids.iter().enumerate() {
        out.push_str(id);
        for s in &metric.scores {
            out.push_str(&format!(",{}", s[i]));
        }
        out.push('\n');
    }
    out
}

pub fn pvalues_csv(report: &EvaluationReport, metric: &MetricReport) -> String {
    let mut out = String::from("condition");
    for c in &report.conditions {
        out.push(',');
        out.push_str(c);
    }
    out.push('\n');
    for (c, row) in report.conditions.iter().zip(&metric.p) {
        out.push_str(c);
        for p in row {
            out.push_str(&format!(",{p}"));
        }
        out.push('\n');
    }
    out
}

/// Writes `report.json`, `medians.csv`, and per metric `scores_<metric>.csv`
/// and `pvalues_<metric>.csv` into `dir`.
pub fn write_report(report: &EvaluationReport, dir: &Path) -> Result<()> {
    write_text(&dir.join(REPORT_FILE), &(serde_json::to_string_pretty(report)? + "\n"))?;
    write_csv_tables(report, dir)
}

pub fn write_csv_tables(report: &EvaluationReport, dir: &Path) -> Result<()> {
    write_text(&dir.join("medians.csv"), &median_csv(report))?;
    for m in &report.metrics {
        let name = file_safe(&m.metric);
        write_text(&dir.join(format!("scores_{name}.csv")), &scores_csv(report, m))?;
        write_text(&dir.join(format!("pvalues_{name}.csv")), &pvalues_csv(report, m))?;
    }
    Ok(())
}

/// Plain-text summary: medians (best `*`, second `+`) and significance groups.
pub fn render_text(report: &EvaluationReport) -> String {
    let mut out = Vec::new();
    let width = report.conditions.iter().map(|c| c.len()).max().unwrap_or(0).max(10);
    let _ = writeln!(
        out,
        "{} images, alpha = {}, correction = {:?}",
        report.image_ids.len(),
        report.alpha,
        report.correction
    );
    for m in &report.metrics {
        let _ = writeln!(out, "\n{}", m.metric);
        for e in &m.medians {
            let mark = match e.rank {
                Some(1) => "*",
                Some(2) => "+",
                _ => "",
            };
            let _ = writeln!(out, "  {:<width$}  {:>12.4}{mark}", e.condition, e.median);
        }
        let _ = writeln!(out, "  groups (best first):");
        for &(a, b) in &m.groups.groups {
            let _ = writeln!(out, "    [{}]", m.groups.sorted_conditions[a..=b].join(", "));
        }
    }
    String::from_utf8(out).expect("report text is UTF-8")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_defaults_and_overlay() {
        let cfg = PipelineConfig::from_toml_str(
            r#"
            input_dir = "in"
            output_dir = "out"
            task = "deblur"
            [noise]
            photon_gain = 0.02
            "#,
        )
        .unwrap();
        assert_eq!(cfg.task, Task::Deblur);
        assert_eq!(cfg.noise.photon_gain, 0.02);
        assert_eq!(cfg.noise.readout_std, 0.002);
        assert_eq!(cfg.exposure.count, 5);
        assert_eq!(cfg.exposure.splits, vec![SplitName::Test]);
        assert_eq!(cfg.peak, 4000.0);
        assert!(cfg.validate().is_ok());
    }

    #[test]
    fn raw_preset() {
        let cfg = PipelineConfig::from_toml_str("preset = \"raw\"\ninput_dir = \"a\"\noutput_dir = \"b\"").unwrap();
        assert_eq!(cfg.task, Task::SuperRes4x);
        assert_eq!(cfg.normalize_nits, Some(20.0));
        assert!(PipelineConfig::from_toml_str("preset = \"sdr\"").is_err());
    }

    #[test]
    fn config_rejects_unknown_keys_and_conditions() {
        assert!(PipelineConfig::from_toml_str("colour = 1").is_err());
        let cfg = PipelineConfig::from_toml_str(
            "input_dir = \"a\"\noutput_dir = \"b\"\nconditions = [\"PU21-L1\", \"sRGB-L1\"]",
        )
        .unwrap();
        assert!(cfg.validate().is_err());
        let cfg = PipelineConfig::from_toml_str("conditions = [\"PU21-L1\"]").unwrap();
        assert!(cfg.validate().is_err(), "directories are required");
    }

    #[test]
    fn external_scores_parse() {
        let ext = ExternalScores::from_csv("CVVDP", "condition,image_id,value\nA,x,8.5\nB,x,7\n").unwrap();
        assert_eq!(ext.scores[&("A".to_string(), "x".to_string())], 8.5);
        assert!(ExternalScores::from_csv("CVVDP", "a,b\n").is_err());
        assert!(ExternalScores::from_csv("CVVDP", "condition,image_id,value\nA,x,abc\n").is_err());
    }

    #[test]
    fn nonfinite_matrix_round_trips() {
        #[derive(Serialize, Deserialize, PartialEq, Debug)]
        struct M(#[serde(with = "nonfinite")] Vec<Vec<f64>>);
        let m = M(vec![vec![0.0, f64::INFINITY], vec![f64::NEG_INFINITY, 1.5]]);
        let json = serde_json::to_string(&m).unwrap();
        assert_eq!(json, "[[0.0,\"inf\"],[\"-inf\",1.5]]");
        assert_eq!(serde_json::from_str::<M>(&json).unwrap(), m);
    }
}
