use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use isoseg_core::metrics::HausdorffMode;
use isoseg_core::net::Fusion;

#[derive(Debug, Parser)]
#[command(name = "isoseg", version, about = "Semi-dense 3D CNN ensembles for isointense brain tissue segmentation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic phantom dataset and its manifest.
    Phantom(PhantomArgs),
    /// Train one network on a dataset manifest.
    Train(TrainArgs),
    /// Train K networks on random subject subsets.
    TrainEnsemble(TrainEnsembleArgs),
    /// Segment one subject with one or more checkpoints.
    Segment(SegmentArgs),
    /// Score a label volume against ground truth.
    Evaluate(EvaluateArgs),
    /// Rank low-agreement regions for review.
    Suggest(SuggestArgs),
    /// Serve a segmented case to the review UI.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct Common {
    /// TOML or JSON run configuration; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Seed for every random choice of the run.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory, created if missing.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PhantomArgs {
    #[command(flatten)]
    pub common: Common,
    /// Number of subjects.
    #[arg(long, default_value_t = 10)]
    pub n: usize,
    /// Grid size as `N` or `X,Y,Z`.
    #[arg(long, value_parser = parse_dims)]
    pub dims: Option<[usize; 3]>,
    #[arg(long)]
    pub noise: Option<f32>,
    /// Trailing subjects marked for validation.
    #[arg(long, default_value_t = 0)]
    pub val: usize,
    /// Trailing subjects marked as held out for testing.
    #[arg(long, default_value_t = 0)]
    pub test: usize,
}

#[derive(Debug, Args)]
pub struct TrainFlags {
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub subepochs: Option<usize>,
    /// Segments per subepoch.
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub batch: Option<usize>,
    /// Initial learning rate.
    #[arg(long)]
    pub lr: Option<f64>,
    /// Channel-width multiplier of the network.
    #[arg(long)]
    pub scale: Option<f64>,
    #[arg(long, value_parser = parse_fusion)]
    pub fusion: Option<Fusion>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub manifest: PathBuf,
    #[command(flatten)]
    pub train: TrainFlags,
}

#[derive(Debug, Args)]
pub struct TrainEnsembleArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub manifest: PathBuf,
    /// Number of ensemble members.
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub train_per_model: Option<usize>,
    #[arg(long)]
    pub val_per_model: Option<usize>,
    #[command(flatten)]
    pub train: TrainFlags,
}

#[derive(Debug, Args)]
pub struct SegmentArgs {
    #[command(flatten)]
    pub common: Common,
    /// A checkpoint file, or a directory whose `*.ckpt` files are all used.
    #[arg(long = "checkpoint", required = true)]
    pub checkpoints: Vec<PathBuf>,
    #[arg(long)]
    pub manifest: PathBuf,
    /// Subject id within the manifest.
    #[arg(long)]
    pub subject: String,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub pred: PathBuf,
    #[arg(long)]
    pub truth: PathBuf,
    #[arg(long, value_parser = parse_hausdorff)]
    pub hausdorff: Option<HausdorffMode>,
}

#[derive(Debug, Args)]
pub struct SuggestArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub agreement: PathBuf,
    #[arg(long)]
    pub fused: PathBuf,
    /// Ensemble size; inferred from the agreement values when omitted.
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long)]
    pub min_size: Option<usize>,
    /// Identifier written into the export; defaults to the fused file stem.
    #[arg(long)]
    pub volume_id: Option<String>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    /// Case directory written by `segment`.
    #[arg(long)]
    pub case: PathBuf,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
}

fn parse_dims(s: &str) -> Result<[usize; 3], String> {
    let parts: Vec<usize> = s
        .split(',')
        .map(|p| p.trim().parse::<usize>().map_err(|e| format!("{p:?}: {e}")))
        .collect::<Result<_, _>>()?;
    match parts[..] {
        [n] => Ok([n; 3]),
        [x, y, z] => Ok([x, y, z]),
        _ => Err("expected N or X,Y,Z".into()),
    }
}

fn parse_fusion(s: &str) -> Result<Fusion, String> {
    match s {
        "early" => Ok(Fusion::Early),
        "late" => Ok(Fusion::Late),
        _ => Err("expected early or late".into()),
    }
}

fn parse_hausdorff(s: &str) -> Result<HausdorffMode, String> {
    match s {
        "per-direction" => Ok(HausdorffMode::PerDirection),
        "pooled" => Ok(HausdorffMode::Pooled),
        _ => Err("expected per-direction or pooled".into()),
    }
}
