use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use kppca::WeightMode;

#[derive(Debug, Parser)]
#[command(
    name = "kppca",
    version,
    about = "Kernel probabilistic PCA: fit, project, reconstruct and generate"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a model and write it with its metadata to --out.
    Fit(FitArgs),
    /// Write the MAP latent code of every input row.
    Project(ProjectArgs),
    /// Project, reconstruct in kernel space and map back to input space.
    Reconstruct(ReconstructArgs),
    /// Sample new points from a fitted model.
    Generate(GenerateArgs),
    /// Print the fitted noise level, explained variance and spectrum.
    Report(ReportArgs),
    /// Write a synthetic two-arc 2-D dataset (not any published dataset).
    Toy(ToyArgs),
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// CSV file (one sample per row) or IDX image file.
    #[arg(long)]
    pub data: PathBuf,
    /// IDX label file; required when --data is an IDX image file.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// Keep only these labels, e.g. `0,1` (IDX input only).
    #[arg(long, value_delimiter = ',')]
    pub digits: Option<Vec<u8>>,
    /// Keep at most this many samples, in file order.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub limit: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KernelArg {
    Linear,
    Rbf,
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
pub struct LatentArgs {
    /// Number of latent components; σ² is then its ML estimate.
    #[arg(long)]
    pub q: Option<usize>,
    /// Noise variance; q is then the number of eigenvalues with λ/N ≥ σ².
    #[arg(long, value_parser = non_negative)]
    pub sigma2: Option<f64>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, value_enum, default_value_t = KernelArg::Rbf)]
    pub kernel: KernelArg,
    /// RBF bandwidth in k(x,y) = exp(-|x-y|² / 2γ²).
    #[arg(long, default_value_t = 1.0, value_parser = positive)]
    pub gamma: f64,
    #[command(flatten)]
    pub latent: LatentArgs,
    /// Recorded in the metadata; fitting itself is deterministic.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ProjectArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PreimageArgs {
    /// Added to the smoother normalizer [default: 1e-3·N].
    #[arg(long, value_parser = non_negative)]
    pub epsilon: Option<f64>,
    /// Zero negative smoother weights [default: true].
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub clip_negative: Option<bool>,
    /// Smooth with the centered kernel vector or with the row means added back.
    #[arg(long, value_enum, default_value_t = WeightArg::Centered)]
    pub weights: WeightArg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum WeightArg {
    Centered,
    Uncentered,
}

impl From<WeightArg> for WeightMode {
    fn from(w: WeightArg) -> Self {
        match w {
            WeightArg::Centered => WeightMode::Centered,
            WeightArg::Uncentered => WeightMode::Uncentered,
        }
    }
}

#[derive(Debug, Args)]
pub struct ReconstructArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub preimage: PreimageArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, default_value_t = 100)]
    pub count: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub preimage: PreimageArgs,
    /// Sweep the first two latent directions on an AxB grid instead of sampling.
    #[arg(long, value_parser = parse_grid)]
    pub grid: Option<(usize, usize)>,
    /// Range of the grid sweep, `lo:hi` or `lo..hi`.
    #[arg(long, value_parser = parse_range, default_value = "-1:1", allow_hyphen_values = true)]
    pub latent_range: (f64, f64),
    /// Input coordinates shown in the scatter plot, e.g. `0,1`.
    #[arg(long, value_parser = parse_pair, default_value = "0,1")]
    pub plot_dims: (usize, usize),
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Also write spectrum.csv here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ToyArgs {
    #[arg(long, default_value_t = 20)]
    pub count: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = kppca::toy::DEFAULT_RADIUS)]
    pub radius: f64,
    #[arg(long, default_value_t = kppca::toy::DEFAULT_NOISE)]
    pub noise: f64,
    #[arg(long)]
    pub out: PathBuf,
}

fn positive(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() && v > 0.0 => Ok(v),
        _ => Err(format!("expected a positive number, got `{s}`")),
    }
}

fn non_negative(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() && v >= 0.0 => Ok(v),
        _ => Err(format!("expected a non-negative number, got `{s}`")),
    }
}

fn parse_grid(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s
        .split_once(['x', 'X', '×'])
        .ok_or_else(|| format!("expected AxB, got `{s}`"))?;
    let a: usize = a
        .trim()
        .parse()
        .map_err(|_| format!("bad grid width `{a}`"))?;
    let b: usize = b
        .trim()
        .parse()
        .map_err(|_| format!("bad grid height `{b}`"))?;
    if a == 0 || b == 0 {
        return Err("grid sides must be positive".into());
    }
    Ok((a, b))
}

fn parse_range(s: &str) -> Result<(f64, f64), String> {
    let (lo, hi) = s
        .split_once("..")
        .or_else(|| s.split_once(':'))
        .ok_or_else(|| format!("expected lo:hi, got `{s}`"))?;
    let lo: f64 = lo
        .trim()
        .parse()
        .map_err(|_| format!("bad lower bound `{lo}`"))?;
    let hi: f64 = hi
        .trim()
        .parse()
        .map_err(|_| format!("bad upper bound `{hi}`"))?;
    if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
        return Err(format!("need finite lo <= hi, got {lo}:{hi}"));
    }
    Ok((lo, hi))
}

fn parse_pair(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s
        .split_once(',')
        .ok_or_else(|| format!("expected i,j, got `{s}`"))?;
    let a = a.trim().parse().map_err(|_| format!("bad index `{a}`"))?;
    let b = b.trim().parse().map_err(|_| format!("bad index `{b}`"))?;
    Ok((a, b))
}
