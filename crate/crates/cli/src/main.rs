use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use hdr_percept::dataset::{degrade, DegradeParams, Task};
use hdr_percept::degrade::{BlurParams, NoiseParams};
use hdr_percept::imageio::{decode_pfm, read_pfm, write_encoded_pfm, write_pfm};
use hdr_percept::pipeline::{
    evaluate, prepare, render_text, write_csv_tables, write_report, EvaluateOptions, EvaluationReport,
    ExternalScores, PipelineConfig, PrepareOptions,
};
use hdr_percept::stats::Correction;
use hdr_percept::transfer::{curve_table, decode_image, encode_image, write_curve_csv, DEFAULT_MU};
use hdr_percept::{condition_registry, DisplayModel, EncodedImage, EncodingKind, MetricKind};

/// Perceptual pixel encodings, degradations and evaluation for HDR image restoration.
#[derive(Parser)]
#[command(name = "hdr-percept", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Encode a linear PFM image with a transfer function.
    Encode(EncodeArgs),
    /// Decode an encoded PFM image back to relative linear values.
    Decode(DecodeArgs),
    /// Apply a task degradation (noise, blur or downsampling) to a linear PFM image.
    Degrade(DegradeArgs),
    /// Materialize split, augmented, degraded and encoded training pairs.
    Prepare(PrepareArgs),
    /// Score restored images against references and test significance.
    Evaluate(EvaluateArgs),
    /// Print a summary of an evaluation report.
    Report(ReportArgs),
    /// Write the transfer-function comparison table as CSV.
    Curves(CurvesArgs),
    /// Print the registry of training conditions as JSON.
    Conditions,
}

#[derive(Args)]
struct DisplayArgs {
    /// Display peak luminance in cd/m².
    #[arg(long, default_value_t = 4000.0)]
    peak: f64,
    /// Display black level in cd/m².
    #[arg(long, default_value_t = 0.005)]
    black: f64,
}

impl DisplayArgs {
    fn model(&self) -> Result<DisplayModel> {
        Ok(DisplayModel::new(self.black, self.peak)?)
    }
}

#[derive(Args)]
struct EncodeArgs {
    /// Input linear PFM (1.0 = display peak).
    #[arg(required_unless_present = "curve_csv")]
    input: Option<PathBuf>,
    /// Output encoded PFM.
    #[arg(required_unless_present = "curve_csv")]
    output: Option<PathBuf>,
    /// linear, pq, pu21, mulaw or mulaw:<mu>.
    #[arg(long, short, value_parser = parse_encoding, default_value = "pu21")]
    encoding: EncodingKind,
    #[command(flatten)]
    display: DisplayArgs,
    /// Write the transfer-function table to this CSV instead of encoding an image.
    #[arg(long, value_name = "CSV")]
    curve_csv: Option<PathBuf>,
}

#[derive(Args)]
struct DecodeArgs {
    /// Input encoded PFM.
    input: PathBuf,
    /// Output linear PFM.
    output: PathBuf,
    /// Encoding of the input values.
    #[arg(long, short, value_parser = parse_encoding)]
    encoding: EncodingKind,
    #[command(flatten)]
    display: DisplayArgs,
}

#[derive(Args)]
struct DegradeArgs {
    input: PathBuf,
    output: PathBuf,
    /// denoise, deblur or superres4x.
    #[arg(long, value_parser = parse_task)]
    task: Task,
    /// Photon noise gain k (variance k·x + σr²).
    #[arg(long, default_value_t = 0.01)]
    photon_gain: f64,
    /// Readout noise standard deviation σr.
    #[arg(long, default_value_t = 0.002)]
    readout_std: f64,
    /// Noise seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Gaussian blur sigma in pixels.
    #[arg(long, default_value_t = 8.0)]
    sigma: f64,
    /// Downsampling factor for super-resolution.
    #[arg(long, default_value_t = 4)]
    factor: usize,
}

#[derive(Args)]
struct PrepareArgs {
    /// TOML configuration file.
    config: PathBuf,
    #[arg(long)]
    input_dir: Option<PathBuf>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
    #[arg(long, value_parser = parse_task)]
    task: Option<Task>,
    /// Comma-separated condition labels.
    #[arg(long, value_delimiter = ',')]
    conditions: Option<Vec<String>>,
    #[arg(long)]
    peak: Option<f64>,
    #[arg(long)]
    black: Option<f64>,
    /// Seed for every randomized stage (split, exposure, noise, patches).
    #[arg(long)]
    seed: Option<u64>,
    /// Replace the output of a previous run.
    #[arg(long)]
    force: bool,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Directory of reference (clean) PFM images.
    #[arg(long)]
    reference: PathBuf,
    /// Restored images of one condition as LABEL=DIR; repeatable.
    #[arg(long = "test", value_name = "LABEL=DIR")]
    tests: Vec<String>,
    /// Directory whose subdirectories each hold one condition's images.
    #[arg(long, value_name = "DIR")]
    results: Option<PathBuf>,
    /// Comma-separated metrics.
    #[arg(long, value_delimiter = ',', default_value = "pu-psnr,pu-ssim", value_parser = parse_metric)]
    metrics: Vec<MetricKind>,
    /// Significance level of the two-tailed paired t-tests.
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Apply a Bonferroni correction across condition pairs.
    #[arg(long)]
    bonferroni: bool,
    /// Bilinearly upsample test images that are an integer factor smaller than the reference.
    #[arg(long)]
    upsample: bool,
    /// Externally computed scores as NAME=CSV (columns condition,image_id,value).
    #[arg(long, value_name = "NAME=CSV")]
    external: Option<String>,
    #[command(flatten)]
    display: DisplayArgs,
    /// Output directory for report.json and CSV tables.
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Args)]
struct ReportArgs {
    /// report.json written by `evaluate`.
    report: PathBuf,
    /// Also (re)write the CSV tables into this directory.
    #[arg(long)]
    csv_dir: Option<PathBuf>,
}

#[derive(Args)]
struct CurvesArgs {
    /// Number of log-spaced luminance samples.
    #[arg(long, default_value_t = 256)]
    points: usize,
    /// μ of the μ-law curve.
    #[arg(long, default_value_t = DEFAULT_MU)]
    mu: f64,
    /// Output CSV; stdout when omitted.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

fn parse_encoding(s: &str) -> std::result::Result<EncodingKind, String> {
    s.parse().map_err(|e: hdr_percept::Error| e.to_string())
}

fn parse_task(s: &str) -> std::result::Result<Task, String> {
    s.parse().map_err(|e: hdr_percept::Error| e.to_string())
}

fn parse_metric(s: &str) -> std::result::Result<MetricKind, String> {
    s.parse().map_err(|e: hdr_percept::Error| e.to_string())
}

fn write_curves(path: Option<&Path>, n: usize, mu: f64) -> Result<()> {
    let rows = curve_table(n, mu)?;
    match path {
        Some(p) => {
            let f = fs::File::create(p).with_context(|| format!("creating {}", p.display()))?;
            write_curve_csv(io::BufWriter::new(f), &rows)?;
        }
        None => write_curve_csv(io::stdout().lock(), &rows)?,
    }
    Ok(())
}

fn cmd_encode(a: EncodeArgs) -> Result<()> {
    if let Some(csv) = &a.curve_csv {
        let mu = match a.encoding {
            EncodingKind::MuLaw { mu } => mu,
            _ => DEFAULT_MU,
        };
        return write_curves(Some(csv), 256, mu);
    }
    let (input, output) = (a.input.expect("required"), a.output.expect("required"));
    let img = read_pfm(&input)?;
    let encoded = encode_image(&img, a.encoding, &a.display.model()?)?;
    write_encoded_pfm(&encoded, &output)?;
    Ok(())
}

fn cmd_decode(a: DecodeArgs) -> Result<()> {
    let bytes = fs::read(&a.input).with_context(|| format!("reading {}", a.input.display()))?;
    let pfm = decode_pfm(&bytes, &a.input)?;
    let encoded = EncodedImage::new(pfm.width, pfm.height, a.encoding, pfm.rgb)?;
    write_pfm(&decode_image(&encoded, &a.display.model()?)?, &a.output)?;
    Ok(())
}

fn cmd_degrade(a: DegradeArgs) -> Result<()> {
    let params = DegradeParams {
        noise: NoiseParams {
            photon_gain: a.photon_gain,
            readout_std: a.readout_std,
            seed: a.seed,
        },
        blur: BlurParams::with_sigma(a.sigma),
        sr_factor: a.factor,
    };
    let img = read_pfm(&a.input)?;
    write_pfm(&degrade(a.task, &img, &params)?, &a.output)?;
    Ok(())
}

fn cmd_prepare(a: PrepareArgs) -> Result<()> {
    let mut cfg = PipelineConfig::from_file(&a.config)?;
    if let Some(d) = a.input_dir {
        cfg.input_dir = d;
    }
    if let Some(d) = a.output_dir {
        cfg.output_dir = d;
    }
    if let Some(t) = a.task {
        cfg.task = t;
    }
    if let Some(c) = a.conditions {
        cfg.conditions = c;
    }
    if let Some(p) = a.peak {
        cfg.peak = p;
    }
    if let Some(b) = a.black {
        cfg.black_level = b;
    }
    if let Some(s) = a.seed {
        cfg.split.seed = s;
        cfg.exposure.seed = s;
        cfg.noise.seed = s;
        cfg.patch.seed = s;
    }
    let manifest = prepare(&cfg, PrepareOptions { force: a.force })?;
    let s = &manifest.splits;
    eprintln!(
        "prepared {} samples ({} train / {} val / {} test images) for {} conditions in {}",
        manifest.entries.len(),
        s.train.len(),
        s.val.len(),
        s.test.len(),
        manifest.conditions.len(),
        cfg.output_dir.display()
    );
    Ok(())
}

fn cmd_evaluate(a: EvaluateArgs) -> Result<()> {
    let mut tests = Vec::new();
    for t in &a.tests {
        let Some((label, dir)) = t.split_once('=') else {
            bail!("--test expects LABEL=DIR, got {t:?}");
        };
        tests.push((label.to_string(), PathBuf::from(dir)));
    }
    if let Some(root) = &a.results {
        let mut dirs: Vec<PathBuf> = fs::read_dir(root)
            .with_context(|| format!("reading {}", root.display()))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.is_dir())
            .collect();
        dirs.sort();
        for d in dirs {
            let label = d.file_name().unwrap_or_default().to_string_lossy().into_owned();
            tests.push((label, d));
        }
    }
    if tests.is_empty() {
        bail!("give at least one --test LABEL=DIR or --results DIR");
    }
    let external = match &a.external {
        Some(spec) => {
            let Some((name, path)) = spec.split_once('=') else {
                bail!("--external expects NAME=CSV, got {spec:?}");
            };
            let text = fs::read_to_string(path).with_context(|| format!("reading {path}"))?;
            Some(ExternalScores::from_csv(name, &text)?)
        }
        None => None,
    };
    let options = EvaluateOptions {
        metrics: a.metrics,
        alpha: a.alpha,
        correction: if a.bonferroni {
            Correction::Bonferroni
        } else {
            Correction::None
        },
        display: a.display.model()?,
        upsample_smaller: a.upsample,
        external,
    };
    let report = evaluate(&a.reference, &tests, &options)?;
    write_report(&report, &a.out)?;
    print!("{}", render_text(&report));
    Ok(())
}

fn cmd_report(a: ReportArgs) -> Result<()> {
    let report = EvaluationReport::load(&a.report)?;
    if let Some(dir) = &a.csv_dir {
        write_csv_tables(&report, dir)?;
    }
    print!("{}", render_text(&report));
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Encode(a) => cmd_encode(a),
        Command::Decode(a) => cmd_decode(a),
        Command::Degrade(a) => cmd_degrade(a),
        Command::Prepare(a) => cmd_prepare(a),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::Report(a) => cmd_report(a),
        Command::Curves(a) => write_curves(a.out.as_deref(), a.points, a.mu),
        Command::Conditions => {
            let mut out = io::stdout().lock();
            serde_json::to_writer_pretty(&mut out, &condition_registry())?;
            writeln!(out)?;
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    // clap exits with status 2 on usage errors.
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
