use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use seedprior::eval::DEFAULT_W_CANDIDATES;
use seedprior::losses::DEFAULT_ALPHA_BACKGROUND;
use seedprior::objectness::DEFAULT_W;
use seedprior::preprocess::{ChannelTarget, DiffusionParams, Preprocessing};
use seedprior::Connectivity;

/// Soft objectness maps and background labels from point annotations.
#[derive(Debug, Parser, Serialize)]
#[command(name = "seedprior", version, about)]
pub struct Cli {
    /// Emit log events as JSON lines on stderr.
    #[arg(long, global = true)]
    pub json: bool,

    /// More log output (repeatable).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,

    /// Log the resolved configuration as JSON before running.
    #[arg(long, global = true)]
    pub dump_config: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Image + seeds -> objectness tensor (`OUT`) and background mask (`OUT.bg`).
    Objectness(ObjectnessArgs),
    /// Apply the preprocessing chain and write the result as a tensor file.
    Preprocess(PreprocessArgs),
    /// Generate a synthetic blob image with exact labels and centre seeds.
    Synth(SynthArgs),
    /// Score an objectness map or label map against a ground-truth label map.
    Eval(EvalArgs),
    /// Pick the decay rate w with the best mIoU over a candidate list.
    Sweep(SweepArgs),
    /// Loss kernels.
    #[command(subcommand)]
    Losses(LossesCommand),
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum LossesCommand {
    /// Evaluate point, objectness and image-level losses for a prediction.
    Eval(LossesArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ConnArg {
    Faces,
    Full,
}

impl From<ConnArg> for Connectivity {
    fn from(c: ConnArg) -> Self {
        match c {
            ConnArg::Faces => Connectivity::Faces,
            ConnArg::Full => Connectivity::Full,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Text,
    Json,
}

#[derive(Debug, Args, Serialize)]
pub struct PreprocessFlags {
    /// Skip the global min-max rescale to [0, 1].
    #[arg(long)]
    pub no_normalize: bool,

    /// 256-bin histogram equalization per channel.
    #[arg(long)]
    pub equalize: bool,

    /// Perona-Malik edge-preserving smoothing.
    #[arg(long)]
    pub diffuse: bool,

    #[arg(long, default_value_t = DiffusionParams::default().kappa)]
    pub kappa: f64,

    #[arg(long, default_value_t = DiffusionParams::default().step)]
    pub step: f64,

    #[arg(long, default_value_t = DiffusionParams::default().iterations)]
    pub iterations: usize,

    /// Per-channel target means for statistics normalization.
    #[arg(long, value_delimiter = ',', requires = "channel_std")]
    pub channel_mean: Option<Vec<f64>>,

    /// Per-channel target standard deviations.
    #[arg(long, value_delimiter = ',', requires = "channel_mean")]
    pub channel_std: Option<Vec<f64>>,
}

impl PreprocessFlags {
    pub fn chain(&self) -> Preprocessing {
        Preprocessing {
            normalize: !self.no_normalize,
            channel_target: match (&self.channel_mean, &self.channel_std) {
                (Some(mean), Some(std)) => Some(ChannelTarget {
                    mean: mean.clone(),
                    std: std.clone(),
                }),
                _ => None,
            },
            equalize: self.equalize,
            diffusion: self.diffuse.then_some(DiffusionParams {
                kappa: self.kappa,
                step: self.step,
                iterations: self.iterations,
            }),
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct GrowFlags {
    /// Objectness decay rate in exp(-w d).
    #[arg(short = 'w', long = "w", default_value_t = DEFAULT_W, allow_negative_numbers = true)]
    pub w: f64,

    #[arg(long, value_enum, default_value_t = ConnArg::Faces)]
    pub connectivity: ConnArg,

    /// Keep region boundaries soft instead of forcing them to background.
    #[arg(long)]
    pub no_boundary_background: bool,

    /// Class count including background (default: largest seed class + 1).
    #[arg(long)]
    pub classes: Option<usize>,
}

#[derive(Debug, Args, Serialize)]
pub struct ObjectnessArgs {
    /// Input image(s): PNG, TIFF or tensor file.
    #[arg(short, long, required = true, num_args = 1..)]
    pub input: Vec<PathBuf>,

    /// Seed CSV(s), one per input.
    #[arg(short, long, required = true, num_args = 1..)]
    pub seeds: Vec<PathBuf>,

    /// Output tensor path(s), one per input.
    #[arg(short, long, required = true, num_args = 1..)]
    pub output: Vec<PathBuf>,

    /// Worker threads for batches of inputs.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,

    #[command(flatten)]
    pub grow: GrowFlags,

    #[command(flatten)]
    pub pre: PreprocessFlags,
}

#[derive(Debug, Args, Serialize)]
pub struct PreprocessArgs {
    #[arg(short, long)]
    pub input: PathBuf,

    #[arg(short, long)]
    pub output: PathBuf,

    #[command(flatten)]
    pub pre: PreprocessFlags,
}

#[derive(Debug, Args, Serialize)]
pub struct SynthArgs {
    /// Output image tensor (f32).
    #[arg(long)]
    pub image: PathBuf,

    /// Output ground-truth label tensor.
    #[arg(long)]
    pub labels: PathBuf,

    /// Output seed CSV.
    #[arg(long)]
    pub seeds: PathBuf,

    /// Grid shape, e.g. 256,256 or 64,128,128.
    #[arg(long, value_delimiter = ',', default_values_t = [256usize, 256])]
    pub shape: Vec<usize>,

    #[arg(long, default_value_t = 20)]
    pub objects: usize,

    /// Class count including background.
    #[arg(long, default_value_t = 2)]
    pub classes: usize,

    #[arg(long, default_value_t = 6.0)]
    pub radius_min: f64,

    #[arg(long, default_value_t = 14.0)]
    pub radius_max: f64,

    #[arg(long, default_value_t = 0.3)]
    pub background: f64,

    #[arg(long, default_value_t = 0.3)]
    pub contrast: f64,

    #[arg(long, default_value_t = 0.05)]
    pub noise: f64,

    #[arg(long, default_value_t = 1.0)]
    pub edge_width: f64,

    #[arg(long, default_value_t = 0)]
    pub rng_seed: u64,
}

#[derive(Debug, Args, Serialize)]
pub struct EvalArgs {
    /// Objectness tensor (f32, with its `.bg` sibling) or a u8/u16 label map.
    #[arg(long)]
    pub pred: PathBuf,

    /// Ground-truth label tensor (u8/u16).
    #[arg(long)]
    pub gt: PathBuf,

    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
}

#[derive(Debug, Args, Serialize)]
pub struct SweepArgs {
    #[arg(short, long)]
    pub input: PathBuf,

    #[arg(short, long)]
    pub seeds: PathBuf,

    #[arg(long)]
    pub gt: PathBuf,

    /// Candidate decay rates.
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_W_CANDIDATES)]
    pub candidates: Vec<f64>,

    #[arg(long, value_enum, default_value_t = ConnArg::Faces)]
    pub connectivity: ConnArg,

    #[arg(long)]
    pub no_boundary_background: bool,

    #[arg(long)]
    pub classes: Option<usize>,

    /// Also write the objectness map at the best w.
    #[arg(short, long)]
    pub output: Option<PathBuf>,

    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,

    #[command(flatten)]
    pub pre: PreprocessFlags,
}

#[derive(Debug, Args, Serialize)]
pub struct LossesArgs {
    /// Prediction tensor of shape (C, *grid).
    #[arg(long)]
    pub pred: PathBuf,

    /// Objectness tensor; its `.bg` mask supplies the background samples.
    #[arg(long)]
    pub objectness: PathBuf,

    /// Seed CSV of annotated points.
    #[arg(short, long)]
    pub seeds: PathBuf,

    /// Classes present in the image (default: classes among the seeds).
    #[arg(long, value_delimiter = ',')]
    pub present: Option<Vec<usize>>,

    /// Classes absent from the image (default: remaining foreground classes).
    #[arg(long, value_delimiter = ',')]
    pub absent: Option<Vec<usize>>,

    /// Weights of the point, objectness and image-level terms.
    #[arg(long, value_delimiter = ',', num_args = 1, default_values_t = [1.0, 1.0, 1.0])]
    pub lambda: Vec<f64>,

    /// Weight of annotated points.
    #[arg(long, default_value_t = 1.0)]
    pub alpha_point: f64,

    /// Weight of generated background samples.
    #[arg(long, default_value_t = DEFAULT_ALPHA_BACKGROUND)]
    pub alpha_background: f64,

    /// Objectness weight of the background class (others are 1).
    #[arg(long, default_value_t = 1.0)]
    pub beta_background: f64,

    /// Average the point term over labels instead of summing.
    #[arg(long)]
    pub mean_point: bool,

    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}
