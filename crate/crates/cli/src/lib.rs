//! Command-line front end for the `ultrametric` crate.
//!
//! Exit codes: 0 success, 2 invalid arguments, 3 unreadable or malformed
//! input, 4 precondition violation.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use ultrametric::baire::WeightScheme;
use ultrametric::umetry::CloudKind;
use ultrametric::Criterion;

mod commands;
pub mod error;
pub mod io;

pub use error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "ultra", version, about = "Hierarchical clustering and ultrametric analysis")]
pub struct Cli {
    /// Cap on worker threads; results do not depend on it.
    #[arg(long, global = true, value_parser = clap::value_parser!(u16).range(1..))]
    pub threads: Option<u16>,

    /// Leave the generation time out of output metadata.
    #[arg(long, global = true)]
    pub no_timestamp: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Agglomerative hierarchical clustering of CSV observations.
    Cluster(ClusterArgs),
    /// Baire (longest common prefix) clustering of random projections.
    Baire(BaireArgs),
    /// Signed p-adic codes of dendrogram terminals.
    #[command(subcommand)]
    Padic(PadicCommand),
    /// Clusters of boolean objects under set-valued distances.
    Glattice(GlatticeArgs),
    /// Haar wavelet transform of data over a dendrogram.
    #[command(subcommand)]
    Haar(HaarCommand),
    /// Proportion of ultrametric triangles in a point cloud.
    Umetry(UmetryArgs),
    /// Window embedding, BIC peak count and segmentation of a signal.
    Segment(SegmentArgs),
    /// Wall time of Baire against pairwise clustering as n grows.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
pub struct ClusterArgs {
    /// Observations, one row per object, header row required.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value = "complete", value_parser = parse_criterion)]
    pub criterion: Criterion,
    /// Only merge adjacent clusters in row order (complete link).
    #[arg(long)]
    pub constrained: bool,
    /// The first CSV column holds object labels.
    #[arg(long)]
    pub id_column: bool,
    /// Also write the cophenetic (ultrametric) matrix as CSV.
    #[arg(long)]
    pub cophenetic: Option<PathBuf>,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BaireArgs {
    /// Nonnegative attribute values, one row per object.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Number of digits, which is also the number of levels.
    #[arg(long, default_value_t = 4, value_parser = clap::value_parser!(u16).range(1..=17))]
    pub precision: u16,
    #[arg(long, default_value_t = 10, value_parser = parse_base)]
    pub base: u32,
    #[arg(long, default_value = "uniform", value_parser = parse_weights)]
    pub weights: WeightScheme,
    #[arg(long)]
    pub id_column: bool,
    /// Cluster counts per level (columns level, n_clusters).
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum PadicCommand {
    /// Codes of every terminal of a tree.
    Encode(PadicEncodeArgs),
    /// Rebuild a tree (heights become ranks) from codes.
    Decode(PadicDecodeArgs),
    /// Code distances p^-r between terminals.
    Distance(PadicDistanceArgs),
    /// Apply the dilation operator, dropping the lowest levels.
    Dilate(PadicDilateArgs),
}

#[derive(Debug, Args)]
pub struct PadicEncodeArgs {
    #[arg(long)]
    pub tree: PathBuf,
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u32).range(2..))]
    pub p: u32,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PadicDecodeArgs {
    #[arg(long)]
    pub codes: PathBuf,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PadicDistanceArgs {
    #[arg(long)]
    pub codes: PathBuf,
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u32).range(2..))]
    pub p: u32,
    /// Restrict to one pair, given by terminal labels.
    #[arg(long, requires = "b")]
    pub a: Option<String>,
    #[arg(long, requires = "a")]
    pub b: Option<String>,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PadicDilateArgs {
    #[arg(long)]
    pub codes: PathBuf,
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u32).range(2..))]
    pub p: u32,
    /// Number of applications.
    #[arg(long, default_value_t = 1)]
    pub times: usize,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GlatticeArgs {
    /// 0/1 attribute table, one row per object.
    #[arg(long)]
    pub input: PathBuf,
    /// Largest number of attributes on which cluster members may differ.
    #[arg(long)]
    pub level: usize,
    #[arg(long)]
    pub id_column: bool,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum HaarCommand {
    /// Smooth and detail coefficients, one row per attribute.
    Forward(HaarDataArgs),
    /// Rebuild the data from coefficients.
    Inverse(HaarInverseArgs),
    /// Zero detail components below a threshold, then rebuild.
    Regress(HaarRegressArgs),
}

#[derive(Debug, Args)]
pub struct HaarDataArgs {
    #[arg(long)]
    pub tree: PathBuf,
    /// One row per terminal; rows are matched to terminals by label with
    /// --id-column, by position otherwise.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub id_column: bool,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct HaarInverseArgs {
    #[arg(long)]
    pub tree: PathBuf,
    /// Coefficients as written by `haar forward`.
    #[arg(long)]
    pub coeffs: PathBuf,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct HaarRegressArgs {
    #[command(flatten)]
    pub data: HaarDataArgs,
    #[arg(long, allow_negative_numbers = true)]
    pub threshold: f64,
}

#[derive(Debug, Args)]
pub struct UmetryArgs {
    /// Synthetic cloud to sample.
    #[arg(long, value_parser = parse_kind, required_unless_present = "input", conflicts_with = "input")]
    pub kind: Option<CloudKind>,
    /// Measure the rows of a CSV file instead of a synthetic cloud.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub id_column: bool,
    #[arg(long, default_value_t = 100)]
    pub n: usize,
    #[arg(long, default_value_t = 20)]
    pub dim: usize,
    #[arg(long, default_value_t = 300)]
    pub triangles: usize,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    /// Relative tolerance on side lengths.
    #[arg(
        long,
        default_value_t = ultrametric::umetry::DEFAULT_RELATIVE_TOL,
        conflicts_with = "angle",
        allow_negative_numbers = true
    )]
    pub tol: f64,
    /// Angle tolerance in degrees, replacing --tol.
    #[arg(long, allow_negative_numbers = true)]
    pub angle: Option<f64>,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SegmentArgs {
    /// Signal CSV with a header; the first column is used unless --column
    /// names another.
    #[arg(long)]
    pub signal: PathBuf,
    #[arg(long)]
    pub column: Option<String>,
    #[arg(long)]
    pub window: usize,
    /// Distance between window starts; defaults to the window length.
    #[arg(long)]
    pub step: Option<usize>,
    /// Number of segments; by default derived from the BIC peak count.
    #[arg(long)]
    pub segments: Option<usize>,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    #[arg(long, default_value_t = 50)]
    pub bins: usize,
    /// Largest mixture size tried on the distance histogram.
    #[arg(long, default_value_t = 5)]
    pub k_max: usize,
    /// Cluster the raw windows instead of their principal coordinates.
    #[arg(long)]
    pub no_pcoa: bool,
    #[arg(long, default_value_t = 2)]
    pub pcoa_dims: usize,
    /// Histogram of pairwise window distances (CSV).
    #[arg(long)]
    pub emit_histogram: Option<PathBuf>,
    /// Principal coordinates of the windows (CSV).
    #[arg(long)]
    pub emit_pcoa: Option<PathBuf>,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, value_delimiter = ',', default_value = "1000,10000,100000")]
    pub sizes: Vec<usize>,
    #[arg(long, default_value_t = 20)]
    pub dim: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Skip pairwise clustering above this many objects (it needs
    /// n(n-1)/2 distances in memory).
    #[arg(long, default_value_t = 10_000)]
    pub pairwise_max: usize,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

fn parse_criterion(s: &str) -> Result<Criterion, String> {
    s.parse().map_err(|e: ultrametric::Error| e.to_string())
}

fn parse_kind(s: &str) -> Result<CloudKind, String> {
    s.parse().map_err(|e: ultrametric::Error| e.to_string())
}

fn parse_base(s: &str) -> Result<u32, String> {
    match s.parse() {
        Ok(b @ (2 | 10 | 16)) => Ok(b),
        _ => Err(format!("{s:?} is not one of 2, 10, 16")),
    }
}

fn parse_weights(s: &str) -> Result<WeightScheme, String> {
    match s {
        "uniform" => Ok(WeightScheme::Uniform),
        "ascending" => Ok(WeightScheme::Ascending),
        "descending" => Ok(WeightScheme::Descending),
        _ => Err(format!("{s:?} is not one of uniform, ascending, descending")),
    }
}

/// Parses `argv` (program name first), runs the subcommand and returns the
/// process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    if let Some(n) = cli.threads {
        // Fails only if a pool already exists, which is harmless here.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.into()).build_global();
    }
    match commands::dispatch(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("ultra: {e}");
            e.exit_code()
        }
    }
}
