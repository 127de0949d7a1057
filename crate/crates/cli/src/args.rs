use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use dirac_core::KernelSpec;

#[derive(Debug, Parser)]
#[command(
    name = "dirac",
    version,
    about = "Directed accumulation transforms and checks"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Rim transform of a map or volume; writes v_u, v_s, PGM renderings and peaks.
    Datr(DatrArgs),
    /// Compares analytic gradients with central finite differences.
    Gradcheck(GradcheckArgs),
    /// Scores lesions with the peak-feature classifier over stratified folds.
    Bench(BenchArgs),
    /// Writes synthetic lesion patches and a manifest.
    Generate(GenerateArgs),
    /// Radon projections over evenly spaced angles in [0, pi).
    Radon(RadonArgs),
    /// Line accumulator of a non-negative edge map.
    Hough(HoughArgs),
    /// Bilinear polar resampling around a center.
    Polar(PolarArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum KernelArg {
    Integer,
    Bilinear,
}

impl From<KernelArg> for KernelSpec {
    fn from(k: KernelArg) -> Self {
        match k {
            KernelArg::Integer => KernelSpec::Integer,
            KernelArg::Bilinear => KernelSpec::Bilinear,
        }
    }
}

#[derive(Debug, Args)]
pub struct ImageOut {
    /// Output path prefix; files are named `<prefix>_<part>.<ext>`.
    #[arg(long)]
    pub output: PathBuf,
    /// Write ASCII (P2) instead of binary (P5) PGM images.
    #[arg(long)]
    pub ascii: bool,
}

#[derive(Debug, Args)]
pub struct DatrArgs {
    /// Raw tensor (`.dact`) or PGM image.
    #[arg(long)]
    pub input: PathBuf,
    /// JSON rim-transform configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Comma-separated radii, overriding the configuration.
    #[arg(long, value_delimiter = ',')]
    pub radii: Option<Vec<u32>>,
    /// Use every radius from 1 to the largest in-plane extent.
    #[arg(long)]
    pub full_range: bool,
    #[command(flatten)]
    pub out: ImageOut,
}

#[derive(Debug, Args)]
pub struct GradcheckArgs {
    /// Source and target extent per dimension, at most 16.
    #[arg(long, default_value_t = 6)]
    pub size: usize,
    #[arg(long, value_enum, default_value_t = KernelArg::Bilinear)]
    pub kernel: KernelArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Number of random instances.
    #[arg(long, default_value_t = 4)]
    pub instances: usize,
    /// Grids per accumulation.
    #[arg(long, default_value_t = 3)]
    pub grids: usize,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// CSV manifest as written by `generate`.
    #[arg(
        long,
        conflicts_with = "generate",
        required_unless_present = "generate"
    )]
    pub manifest: Option<PathBuf>,
    /// Generate this many patches instead of reading a manifest.
    #[arg(long)]
    pub generate: Option<usize>,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    /// JSON benchmark configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Comma-separated radii, overriding the configuration.
    #[arg(long, value_delimiter = ',')]
    pub radii: Option<Vec<u32>>,
    /// Output path prefix.
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long, default_value_t = 20)]
    pub count: usize,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    /// JSON benchmark configuration (patch size, noise, class balance).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory; created if missing.
    #[arg(long)]
    pub output: PathBuf,
    /// Write ASCII (P2) instead of binary (P5) PGM images.
    #[arg(long)]
    pub ascii: bool,
}

#[derive(Debug, Args)]
pub struct RadonArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value_t = 180)]
    pub angles: usize,
    /// Bins per projection; defaults to the rounded-up image diagonal.
    #[arg(long)]
    pub bins: Option<usize>,
    #[command(flatten)]
    pub out: ImageOut,
}

#[derive(Debug, Args)]
pub struct HoughArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Rho bins; defaults to twice the rounded-up diagonal plus one.
    #[arg(long)]
    pub rho: Option<usize>,
    #[arg(long, default_value_t = 180)]
    pub theta: usize,
    #[command(flatten)]
    pub out: ImageOut,
}

#[derive(Debug, Args)]
pub struct PolarArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Center as `row,col`; defaults to the image center.
    #[arg(long, value_delimiter = ',')]
    pub center: Option<Vec<f64>>,
    /// Radial samples, one pixel apart; defaults to half the smaller extent.
    #[arg(long)]
    pub num_radii: Option<usize>,
    #[arg(long, default_value_t = 360)]
    pub angles: usize,
    #[command(flatten)]
    pub out: ImageOut,
}
