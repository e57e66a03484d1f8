use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "fdspatial", version, about = "Spatial quantiles, depth and efficiency for functional data")]
pub struct Cli {
    /// JSON file of option defaults; command-line flags take precedence.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Worker threads (default: all cores).
    #[arg(long, global = true, value_parser = clap::value_parser!(u16).range(1..))]
    pub threads: Option<u16>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample paths of a process to a functional-data CSV.
    #[command(args_override_self = true)]
    Simulate(SimulateArgs),
    /// Sample spatial quantiles (a single direction or a quantile fan).
    #[command(args_override_self = true)]
    Quantile(QuantileArgs),
    /// Spatial depth of query curves with respect to a sample.
    #[command(args_override_self = true)]
    Depth(DepthArgs),
    /// Depth-depth plot data for two samples.
    #[command(args_override_self = true)]
    Ddplot(DdplotArgs),
    /// Asymptotic efficiency of the spatial median relative to the mean.
    #[command(args_override_self = true)]
    Efficiency(EfficiencyArgs),
    /// Monte Carlo convergence-rate studies.
    #[command(args_override_self = true)]
    Converge(ConvergeArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Process {
    Bm,
    Fbm,
    T,
    GaussKernel,
}

#[derive(Debug, Clone, Args)]
pub struct ProcessArgs {
    #[arg(long, value_enum, default_value = "bm")]
    pub process: Process,
    /// Hurst index for `fbm`.
    #[arg(long, default_value_t = 0.5)]
    pub hurst: f64,
    /// Degrees of freedom for `t` (and t coefficients on `gauss-kernel`).
    #[arg(long)]
    pub df: Option<u32>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub process: ProcessArgs,
    #[arg(long, default_value_t = 100)]
    pub n: usize,
    #[arg(long, default_value_t = 100)]
    pub grid_size: usize,
    #[arg(long)]
    pub seed: u64,
    /// Output CSV.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BasisChoice {
    /// Functional principal components of the sample.
    Pca,
    /// Brownian-motion eigenfunctions (grids inside `[0, 1]`).
    Bm,
    /// Orthonormal functions read from `--basis-file`.
    File,
}

/// One `k:c` entry of `--u-spec`: the direction `c * phi_k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KC {
    pub k: usize,
    pub c: f64,
}

fn parse_kc(s: &str) -> Result<KC, String> {
    let (k, c) = s.split_once(':').ok_or_else(|| format!("expected k:c, got {s:?}"))?;
    let k: usize = k.trim().parse().map_err(|e| format!("bad index in {s:?}: {e}"))?;
    let c: f64 = c.trim().parse().map_err(|e| format!("bad magnitude in {s:?}: {e}"))?;
    if k == 0 {
        return Err("basis indices start at 1".into());
    }
    Ok(KC { k, c })
}

#[derive(Debug, Args)]
pub struct QuantileArgs {
    /// Input functional-data CSV.
    #[arg(long = "in", value_name = "CSV")]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value = "pca")]
    pub basis: BasisChoice,
    /// Functional-data CSV whose rows are the basis functions (with `--basis file`).
    #[arg(long, value_name = "CSV", required_if_eq("basis", "file"))]
    pub basis_file: Option<PathBuf>,
    /// Truncation dimension (default floor(sqrt(n))).
    #[arg(long)]
    pub d: Option<usize>,
    /// Single direction `u` in basis coordinates. Without `--u`, `--u-spec`
    /// or `--u-file` a fan is computed.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, conflicts_with_all = ["u_spec", "u_file"])]
    pub u: Option<Vec<f64>>,
    /// Directions `c * phi_k` given as `k:c` pairs, e.g. `1:0.5,2:-0.25`.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, value_parser = parse_kc, conflicts_with = "u_file")]
    pub u_spec: Option<Vec<KC>>,
    /// CSV of coefficient vectors, one direction per row.
    #[arg(long, value_name = "CSV")]
    pub u_file: Option<PathBuf>,
    /// Basis indices of the fan.
    #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
    pub k: Vec<usize>,
    /// Magnitudes of the fan directions (both signs are used).
    #[arg(long, value_delimiter = ',', default_value = "0.25,0.5,0.75")]
    pub c: Vec<f64>,
    /// Solve on the raw data instead of centering by the mean curve first.
    #[arg(long)]
    pub no_center: bool,
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    #[arg(long, default_value_t = 500)]
    pub max_iter: usize,
    /// Quantile curves as functional-data CSV.
    #[arg(long)]
    pub out: PathBuf,
    /// JSON report (default: stdout).
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Fan plot.
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DepthArgs {
    #[arg(long = "in", value_name = "CSV")]
    pub input: PathBuf,
    /// Curves to score (default: the sample itself).
    #[arg(long, value_name = "CSV")]
    pub query: Option<PathBuf>,
    /// Output CSV `index,depth` (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DdplotArgs {
    #[arg(long, value_name = "CSV")]
    pub a: PathBuf,
    #[arg(long, value_name = "CSV")]
    pub b: PathBuf,
    /// Output CSV `depth_a,depth_b,source` (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TableFormat {
    Json,
    Text,
}

#[derive(Debug, Args)]
pub struct EfficiencyArgs {
    #[command(flatten)]
    pub process: ProcessArgs,
    #[arg(long, default_value_t = 200)]
    pub grid_size: usize,
    /// Monte Carlo draws for each of J and Lambda.
    #[arg(long, default_value_t = 200_000)]
    pub mc: usize,
    #[arg(long)]
    pub seed: u64,
    /// Run the full sweep and compare with the published values.
    #[arg(long)]
    pub table: bool,
    #[arg(long, value_enum, default_value = "json")]
    pub format: TableFormat,
    /// Output file (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Study {
    Gc,
    Integrated,
    Bahadur,
}

#[derive(Debug, Args)]
pub struct ConvergeArgs {
    #[arg(long, value_enum)]
    pub study: Study,
    #[command(flatten)]
    pub process: ProcessArgs,
    #[arg(long, value_delimiter = ',', default_value = "250,1000,4000")]
    pub n_list: Vec<usize>,
    #[arg(long, default_value_t = 50)]
    pub reps: usize,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value_t = 100)]
    pub grid_size: usize,
    /// Probe curves for the `gc` study.
    #[arg(long, default_value_t = 20)]
    pub probes: usize,
    /// Draws averaged over in the `integrated` study.
    #[arg(long, default_value_t = 200)]
    pub draws: usize,
    /// Reference-sample size standing in for the population.
    #[arg(long, default_value_t = 100_000)]
    pub reference_size: usize,
    /// Coefficient dimension of the `bahadur` study.
    #[arg(long, default_value_t = 3)]
    pub d: usize,
    /// Direction of the `bahadur` study in KL coordinates (default: the median).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub u: Option<Vec<f64>>,
    /// JSON report (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// CSV of the per-n medians.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}
