use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod files;

/// Seed used when `--seed` is not given.
pub const DEFAULT_SEED: u64 = 0;

/// Size of the bottom-center crop selected by `--crop`.
pub const CROP: (usize, usize) = (1216, 352);

#[derive(Parser, Debug)]
#[command(name = "recurdepth", version, about = "Depth warping, temporal depth completion and evaluation")]
struct Cli {
    /// Print machine-readable JSON on stdout instead of text.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Render a synthetic sequence in the KITTI depth-completion layout.
    Synth(SynthArgs),
    /// Print the relative camera pose between consecutive frames.
    Poses(PosesArgs),
    /// Forward-warp one depth PNG by a relative pose.
    Warp(WarpArgs),
    /// Complete every frame of a sequence.
    Complete(CompleteArgs),
    /// Compare predictions against ground truth.
    Eval(EvalArgs),
    /// Render the blockwise error difference of two predictions.
    Diffmap(DiffmapArgs),
    /// Average per-frame RMSE over `complete` results.
    Curve(CurveArgs),
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    /// Scene description (JSON). Defaults to a street scene drawn from `--seed`.
    #[arg(long)]
    pub scene: Option<PathBuf>,
    /// `forward:N:STEP` or `turn:N:STEP:YAW_DEG`.
    #[arg(long, default_value = "forward:5:1.0")]
    pub trajectory: String,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Fraction of pixels with a lidar return.
    #[arg(long, default_value_t = 0.06)]
    pub density: f64,
    #[arg(long, default_value_t = 64)]
    pub beam_rows: usize,
    /// `fx,fy,cx,cy,width,height`. Defaults to the cropped KITTI camera.
    #[arg(long)]
    pub intrinsics: Option<String>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct PosesArgs {
    /// Sequence manifest with OXTS records and a calibration directory.
    pub manifest: PathBuf,
}

#[derive(Args, Debug)]
pub struct WarpArgs {
    /// 16-bit depth PNG.
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// KITTI calibration directory (camera 2).
    #[arg(long, conflicts_with = "intrinsics")]
    pub calib: Option<PathBuf>,
    /// `fx,fy,cx,cy` of the input image.
    #[arg(long)]
    pub intrinsics: Option<String>,
    /// `identity`, or 12 numbers of a row-major 3×4 matrix mapping source
    /// camera coordinates to target camera coordinates.
    #[arg(long, conflicts_with_all = ["oxts_from", "oxts_to"])]
    pub pose: Option<String>,
    /// OXTS file of the source frame; needs `--oxts-to` and `--calib`.
    #[arg(long, requires_all = ["oxts_to", "calib"])]
    pub oxts_from: Option<PathBuf>,
    #[arg(long, requires = "oxts_from")]
    pub oxts_to: Option<PathBuf>,
    /// Bottom-center crop the input to 1216×352 first.
    #[arg(long)]
    pub crop: bool,
}

#[derive(Args, Debug)]
pub struct CompleteArgs {
    pub manifest: PathBuf,
    /// Directory for prediction PNGs and `results.json`.
    #[arg(long)]
    pub out: PathBuf,
    /// Pipeline settings (TOML).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Carry warped history between frames.
    #[arg(long)]
    pub temporal: bool,
    #[arg(long)]
    pub crop: bool,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    /// Prediction PNG or directory of PNGs.
    pub pred: PathBuf,
    /// Ground-truth PNG or directory with the same file names.
    pub gt: PathBuf,
    /// Bottom-center crop maps larger than 1216×352.
    #[arg(long)]
    pub crop: bool,
}

#[derive(Args, Debug)]
pub struct DiffmapArgs {
    pub pred_a: PathBuf,
    pub pred_b: PathBuf,
    pub gt: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 8)]
    pub block: usize,
    /// Difference in mm mapped to the colormap ends. Defaults to the largest.
    #[arg(long)]
    pub range: Option<f64>,
    #[arg(long)]
    pub crop: bool,
}

#[derive(Args, Debug)]
pub struct CurveArgs {
    /// `results.json` files written by `complete`.
    #[arg(required = true)]
    pub results: Vec<PathBuf>,
    /// CSV destination; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Synth(a) => commands::synth(a, cli.json),
        Command::Poses(a) => commands::poses(a, cli.json),
        Command::Warp(a) => commands::warp(a, cli.json),
        Command::Complete(a) => commands::complete(a, cli.json),
        Command::Eval(a) => commands::eval(a, cli.json),
        Command::Diffmap(a) => commands::diffmap(a, cli.json),
        Command::Curve(a) => commands::curve(a, cli.json),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
